#include "apac/planning.hpp"

namespace apac {

PlanningController::PlanningController(const PlanningConfig& cfg, Rng& rng)
    : cfg_(cfg),
      forward_adam_{cfg.forward_lr, 0.9, 0.999, 1e-8, cfg.weight_decay},
      inverse_adam_{cfg.inverse_lr, 0.9, 0.999, 1e-8, cfg.weight_decay},
      forward_net_({6, cfg.hidden1, cfg.hidden2, 4},
                   {Activation::Sigmoid, Activation::Sigmoid,
                    Activation::Sigmoid},
                   cfg.position_scale, rng),
      inverse_net_({6, cfg.hidden1, cfg.hidden2, 2},
                   {Activation::Relu, Activation::Relu, Activation::Tanh},
                   cfg.action_scale, rng) {}

std::pair<Vector2d, Vector2d> PlanningController::predict_next(
    const Vector2d& end, const Vector2d& elbow, const Vector2d& action) const {
  Vector6d input;
  if (cfg_.normalize_inputs) {
    input << end / cfg_.position_scale, elbow / cfg_.position_scale,
        action / cfg_.action_scale;
  } else {
    input << end, elbow, action;
  }
  const VectorXd out = forward_net_.forward(input);
  return {out.head<2>(), out.tail<2>()};
}

Vector2d PlanningController::plan_action(const Vector6d& s) const {
  Vector6d input = s;
  if (cfg_.normalize_inputs) input /= cfg_.position_scale;
  return inverse_net_.forward(input);
}

double PlanningController::train_forward(
    const std::vector<Transition>& batch) {
  MatrixXd inputs(6, batch.size());
  MatrixXd targets(4, batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    inputs.col(i) = forward_model_input(batch[i]);
    targets.col(i) = forward_model_target(batch[i]);
  }
  if (cfg_.normalize_inputs) {
    inputs.topRows(4) /= cfg_.position_scale;
    inputs.bottomRows(2) /= cfg_.action_scale;
  }
  return forward_net_.train_step(inputs, targets, forward_adam_);
}

double PlanningController::train_inverse(
    const std::vector<Transition>& batch) {
  MatrixXd inputs(6, batch.size());
  MatrixXd targets(2, batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    inputs.col(i) = inverse_model_input(batch[i]);
    targets.col(i) = batch[i].a;
  }
  if (cfg_.normalize_inputs) inputs /= cfg_.position_scale;
  return inverse_net_.train_step(inputs, targets, inverse_adam_);
}

}  // namespace apac
