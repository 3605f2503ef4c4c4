#pragma once

#include <optional>
#include <stdexcept>

#include "apac/env.hpp"
#include "apac/types.hpp"

namespace apac {

struct ArbitratorConfig {
  ControllerMode mode = ControllerMode::Apac;
  double rpe_threshold = 1.0;
  int habitual_priority_steps = 2;
};

enum class ActionSource { Habitual, Planning };

struct ActionChoice {
  Vector2d action{Vector2d::Zero()};
  ActionSource source = ActionSource::Habitual;
};

/// Per-step choice between the two proposals. DDPG and SPAC lock the source;
/// APAC gives the habitual controller the first habitual_priority_steps of
/// each episode, then keeps it only while the last reward prediction error
/// stays inside the threshold. A missing RPE counts as unreliable.
inline ActionChoice select(const ArbitratorConfig& cfg, int step_index,
                           const std::optional<double>& last_rpe,
                           const Vector2d& habitual_action,
                           const Vector2d& planning_action) {
  if (cfg.mode == ControllerMode::Ddpg)
    return {habitual_action, ActionSource::Habitual};
  if (cfg.mode == ControllerMode::Spac)
    return {planning_action, ActionSource::Planning};
  if (step_index < cfg.habitual_priority_steps)
    return {habitual_action, ActionSource::Habitual};
  if (last_rpe.has_value() && std::abs(*last_rpe) < cfg.rpe_threshold)
    return {habitual_action, ActionSource::Habitual};
  return {planning_action, ActionSource::Planning};
}

/// State estimate [end, elbow, target]: the actual observation when vision is
/// available, otherwise the forward-model prediction plus the target
/// remembered from step 0.
inline Vector6d integrate(VisionMode vision,
                          const std::optional<Observation>& actual,
                          const Vector2d& predicted_end,
                          const Vector2d& predicted_elbow,
                          const std::optional<Vector2d>& remembered_target) {
  Vector6d s;
  if (vision == VisionMode::Perfect) {
    if (!actual.has_value())
      throw std::logic_error("perfect vision requires an observation");
    s << actual->end, actual->elbow, actual->target;
    return s;
  }
  if (!remembered_target.has_value())
    throw std::logic_error("occluded vision with no remembered target");
  s << predicted_end, predicted_elbow, *remembered_target;
  return s;
}

}  // namespace apac
