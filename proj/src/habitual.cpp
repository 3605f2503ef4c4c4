#include "apac/habitual.hpp"

#include <cmath>

namespace apac {

HabitualController::HabitualController(const HabitualConfig& cfg, Rng& rng)
    : cfg_(cfg),
      actor_adam_{cfg.actor_lr, 0.9, 0.999, 1e-8, cfg.weight_decay},
      critic_adam_{cfg.critic_lr, 0.9, 0.999, 1e-8, cfg.weight_decay},
      actor_({6, cfg.hidden1, cfg.hidden2, 2},
             {Activation::Relu, Activation::Relu, Activation::Tanh},
             cfg.action_scale, rng),
      critic_(6, 2, cfg.hidden1, cfg.hidden2, rng),
      actor_target_(actor_),
      critic_target_(critic_) {
  // Output layers start near zero: the policy proposes null actions until the
  // critic shapes it, and a few thousand one-directional Adam steps on a
  // still-forming value landscape cannot park the tanh head at saturation,
  // where its gradient would die and leave the policy stuck at an action
  // bound.
  const auto shrink = [](DenseLayer& l) {
    l.W *= 3e-3 * std::sqrt(static_cast<double>(l.W.cols()));
  };
  shrink(actor_.layers_mut().back());
  shrink(critic_.layers_mut().back());
  actor_target_ = actor_;
  critic_target_ = critic_;
}

MatrixXd HabitualController::normalize_states(MatrixXd s) const {
  if (cfg_.normalize_inputs) s /= cfg_.position_scale;
  return s;
}

MatrixXd HabitualController::normalize_actions(MatrixXd a) const {
  if (cfg_.normalize_inputs) a /= cfg_.action_scale;
  return a;
}

Vector2d HabitualController::act(const Vector6d& s) const {
  return actor_.forward(normalize_states(s));
}

Eigen::RowVectorXd HabitualController::td_targets(
    const std::vector<Transition>& batch) const {
  const MatrixXd next = normalize_states(batch_next_states(batch));
  const MatrixXd next_actions = actor_target_.forward_batch(next);
  const Eigen::RowVectorXd next_q =
      critic_target_.value_batch(next, normalize_actions(next_actions));
  return batch_rewards(batch) +
         cfg_.gamma *
             next_q.cwiseProduct(batch_nonterminal_mask(batch));
}

double HabitualController::train_critic(const std::vector<Transition>& batch) {
  const Eigen::RowVectorXd targets = td_targets(batch);
  return critic_.train_step(normalize_states(batch_states(batch)),
                            normalize_actions(batch_actions(batch)), targets,
                            critic_adam_);
}

void HabitualController::train_actor(const std::vector<Transition>& batch) {
  const MatrixXd states = normalize_states(batch_states(batch));
  const MatrixXd actions = actor_.forward_batch(states);
  MatrixXd dq = critic_.action_gradients(states, normalize_actions(actions));
  // The critic consumes scaled actions, so the chain picks up 1/scale.
  if (cfg_.normalize_inputs) dq /= cfg_.action_scale;
  const double n = static_cast<double>(batch.size());
  // Ascend mean Q: minimize -Q, gradient -(1/N)·∂Q/∂a per sample.
  actor_.apply_output_gradients(states, (-1.0 / n) * dq, actor_adam_);
}

void HabitualController::update_targets() {
  soft_update(actor_target_, actor_, cfg_.tau);
  soft_update(critic_target_, critic_, cfg_.tau);
}

double HabitualController::rpe(const Transition& last) const {
  const VectorXd s = normalize_states(last.s);
  const VectorXd s_next = normalize_states(last.s_next);
  const VectorXd a = normalize_actions(last.a);
  const VectorXd next_action =
      normalize_actions(actor_target_.forward(s_next));
  const double next_q = critic_target_.value(s_next, next_action);
  const double mask = last.terminal ? 0.0 : 1.0;
  return last.r + cfg_.gamma * next_q * mask - critic_.value(s, a);
}

}  // namespace apac
