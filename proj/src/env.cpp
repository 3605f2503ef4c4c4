#include "apac/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace apac {

std::string condition_id(const Condition& c) {
  std::string id;
  id += (c.target == TargetMode::Static) ? 's' : 'c';
  id += (c.kinematics == KinematicsMode::Static) ? 's' : 'c';
  if (c.vision == VisionMode::Occluded) id += 'o';
  return id;
}

std::string controller_name(ControllerMode m) {
  switch (m) {
    case ControllerMode::Ddpg:
      return "ddpg";
    case ControllerMode::Spac:
      return "spac";
    case ControllerMode::Apac:
      return "apac";
  }
  return "?";
}

std::pair<Vector2d, Vector2d> forward_kinematics(double alpha_deg,
                                                 double beta_deg, double l1,
                                                 double l2,
                                                 const Vector2d& origin) {
  const double alpha = alpha_deg * kPi / 180.0;
  const double beta = beta_deg * kPi / 180.0;
  Vector2d elbow;
  elbow << origin(0) + l1 * std::cos(alpha), origin(1) + l1 * std::sin(alpha);
  Vector2d end;
  end << elbow(0) + l2 * std::cos(alpha + beta),
      elbow(1) + l2 * std::sin(alpha + beta);
  return {end, elbow};
}

double reward(const Vector2d& end, const Vector2d& target) {
  return -(end - target).norm();
}

Vector2d sample_target(Rng& rng, double l1, double l2, const Vector2d& origin,
                       Region region, double* generating_alpha) {
  double alpha = 0.0;
  switch (region) {
    case Region::Full:
      alpha = rng.uniform(0.0, 180.0);
      break;
    case Region::TrainTwoThirds:
      alpha = rng.uniform(0.0, 120.0);
      break;
    case Region::TestOneThird:
      alpha = 180.0 - rng.uniform(0.0, 60.0);  // lands in (120, 180]
      break;
  }
  const double beta = rng.uniform(0.0, 180.0);
  if (generating_alpha != nullptr) *generating_alpha = alpha;
  return forward_kinematics(alpha, beta, l1, l2, origin).first;
}

std::vector<Vector2d> test_target_grid(int n_per_axis, double l1, double l2,
                                       const Vector2d& origin) {
  if (n_per_axis < 2)
    throw std::invalid_argument("target grid needs at least 2 points per axis");
  std::vector<Vector2d> targets;
  targets.reserve(static_cast<std::size_t>(n_per_axis) * n_per_axis);
  for (int i = 0; i < n_per_axis; ++i) {
    const double alpha = 180.0 * i / (n_per_axis - 1);
    for (int j = 0; j < n_per_axis; ++j) {
      const double beta = 180.0 * j / (n_per_axis - 1);
      targets.push_back(forward_kinematics(alpha, beta, l1, l2, origin).first);
    }
  }
  return targets;
}

std::vector<Vector2d> held_out_target_grid(int n_per_axis, double l1,
                                           double l2, const Vector2d& origin) {
  if (n_per_axis < 2)
    throw std::invalid_argument("target grid needs at least 2 points per axis");
  std::vector<Vector2d> targets;
  for (int i = 0; i < n_per_axis; ++i) {
    const double alpha = 180.0 * i / (n_per_axis - 1);
    if (alpha <= 120.0) continue;
    for (int j = 0; j < n_per_axis; ++j) {
      const double beta = 180.0 * j / (n_per_axis - 1);
      targets.push_back(forward_kinematics(alpha, beta, l1, l2, origin).first);
    }
  }
  return targets;
}

ArmEnv::ArmEnv(KinematicsMode kinematics) : kinematics_(kinematics) {}

void ArmEnv::set_max_steps(int n) {
  if (n <= 0) throw std::invalid_argument("step budget must be positive");
  max_steps_ = n;
}

Observation ArmEnv::observe() const {
  const auto [end, elbow] = forward_kinematics(state_.alpha, state_.beta,
                                               state_.l1, state_.l2,
                                               state_.origin);
  Observation obs;
  obs.end = end;
  obs.elbow = elbow;
  obs.target = target_;
  return obs;
}

double ArmEnv::distance_to_target() const {
  return (observe().end - target_).norm();
}

Observation ArmEnv::reset(const Vector2d& target, int episode_index,
                          bool terminate_on_target) {
  state_.alpha = 0.0;
  state_.beta = 180.0;
  target_ = target;
  drift_this_episode_ = drift_allowed_ &&
                        kinematics_ == KinematicsMode::Changing &&
                        episode_index > 100;
  terminate_on_target_ = terminate_on_target;
  steps_taken_ = 0;
  done_ = false;
  return observe();
}

StepResult ArmEnv::step(const Vector2d& action) {
  if (done_) throw std::logic_error("step called on a finished episode");
  state_.alpha = std::clamp(state_.alpha + action(0), 0.0, 180.0);
  state_.beta = std::clamp(state_.beta + action(1), 0.0, 180.0);
  if (drift_this_episode_) {
    state_.l1 += 0.001;
    state_.l2 += 0.001;
  }
  ++steps_taken_;
  StepResult result;
  result.obs = observe();
  result.reward = reward(result.obs.end, target_);
  const bool in_zone = -result.reward <= kTargetZoneRadius;
  result.terminal =
      (terminate_on_target_ && in_zone) || steps_taken_ >= max_steps_;
  done_ = result.terminal;
  return result;
}

}  // namespace apac
