#pragma once

#include <utility>
#include <vector>

#include "apac/nn.hpp"
#include "apac/replay.hpp"

namespace apac {

// Raw training-pair assembly, shared with tests. The inverse model learns
// from the achieved next end position placed in the target slot, not from
// the episode target stored in s.
inline Vector6d forward_model_input(const Transition& t) {
  Vector6d v;
  v << t.s.head<4>(), t.a;
  return v;
}

inline Vector4d forward_model_target(const Transition& t) {
  return t.s_next.head<4>();
}

inline Vector6d inverse_model_input(const Transition& t) {
  Vector6d v;
  v << t.s.head<4>(), t.s_next.head<2>();
  return v;
}

struct PlanningConfig {
  double forward_lr = 0.01;
  double inverse_lr = 0.01;
  double weight_decay = 0.001;
  int hidden1 = 400;
  int hidden2 = 300;
  double action_scale = 180.0;
  double position_scale = 30.0;
  bool normalize_inputs = true;
};

/// Supervised internal models: a forward model predicting the next arm
/// position from (position, action) and an inverse model proposing an action
/// from (position, desired end position).
class PlanningController {
 public:
  PlanningController(const PlanningConfig& cfg, Rng& rng);

  /// Predicted (end', elbow') in centimeters.
  std::pair<Vector2d, Vector2d> predict_next(const Vector2d& end,
                                             const Vector2d& elbow,
                                             const Vector2d& action) const;

  /// Inverse-model action proposal in degrees for state [end, elbow, target].
  Vector2d plan_action(const Vector6d& s) const;

  /// One MSE Adam step: inputs [s.end, s.elbow, a] → targets next positions.
  double train_forward(const std::vector<Transition>& batch);

  /// One MSE Adam step: inputs [s.end, s.elbow, s_next.end] → targets a.
  /// The achieved next end position fills the target slot.
  double train_inverse(const std::vector<Transition>& batch);

  const PlanningConfig& config() const { return cfg_; }
  Mlp& forward_net() { return forward_net_; }
  const Mlp& forward_net() const { return forward_net_; }
  Mlp& inverse_net() { return inverse_net_; }
  const Mlp& inverse_net() const { return inverse_net_; }

 private:
  PlanningConfig cfg_;
  AdamConfig forward_adam_;
  AdamConfig inverse_adam_;
  Mlp forward_net_;
  Mlp inverse_net_;
};

}  // namespace apac
