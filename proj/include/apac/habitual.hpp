#pragma once

#include <vector>

#include "apac/nn.hpp"
#include "apac/replay.hpp"

namespace apac {

struct HabitualConfig {
  double gamma = 0.99;
  double tau = 0.001;
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  double weight_decay = 0.001;
  int hidden1 = 400;
  int hidden2 = 300;
  double action_scale = 180.0;
  double position_scale = 30.0;
  // Positions are divided by position_scale and actions by action_scale at
  // the network boundary; disable to feed raw centimeters and degrees.
  bool normalize_inputs = true;
};

/// Model-free controller: actor and critic with target copies, trained by
/// temporal-difference targets and the deterministic policy gradient.
class HabitualController {
 public:
  HabitualController(const HabitualConfig& cfg, Rng& rng);

  /// Action proposal from the actor network, in degrees.
  Vector2d act(const Vector6d& s) const;

  /// y_i = r_i + γ·Q'(s'_i, π'(s'_i)) for non-terminal i, else r_i.
  Eigen::RowVectorXd td_targets(const std::vector<Transition>& batch) const;

  /// One Adam step of the critic toward td_targets; returns pre-step loss.
  double train_critic(const std::vector<Transition>& batch);

  /// One policy-gradient ascent step of the actor through the main critic.
  void train_actor(const std::vector<Transition>& batch);

  /// Soft-updates both target networks with τ.
  void update_targets();

  /// Reward prediction error of one transition:
  /// δ = r + γ·Q'(s', π'(s'))·(1−terminal) − Q(s, a).
  double rpe(const Transition& last) const;

  const HabitualConfig& config() const { return cfg_; }
  Mlp& actor() { return actor_; }
  const Mlp& actor() const { return actor_; }
  Mlp& actor_target() { return actor_target_; }
  const Mlp& actor_target() const { return actor_target_; }
  CriticNet& critic() { return critic_; }
  const CriticNet& critic() const { return critic_; }
  CriticNet& critic_target() { return critic_target_; }
  const CriticNet& critic_target() const { return critic_target_; }

  MatrixXd normalize_states(MatrixXd s) const;
  MatrixXd normalize_actions(MatrixXd a) const;

 private:
  HabitualConfig cfg_;
  AdamConfig actor_adam_;
  AdamConfig critic_adam_;
  Mlp actor_;
  CriticNet critic_;
  Mlp actor_target_;
  CriticNet critic_target_;
};

}  // namespace apac
