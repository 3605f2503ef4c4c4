#pragma once

#include <string>
#include <utility>
#include <vector>

#include "apac/rng.hpp"
#include "apac/types.hpp"

namespace apac {

enum class TargetMode { Static, Changing };
enum class KinematicsMode { Static, Changing };
enum class VisionMode { Perfect, Occluded };
enum class ControllerMode { Ddpg, Spac, Apac };

struct Condition {
  TargetMode target = TargetMode::Changing;
  KinematicsMode kinematics = KinematicsMode::Static;
  VisionMode vision = VisionMode::Perfect;
  ControllerMode controller = ControllerMode::Apac;
};

/// Two-letter target/kinematics id ("ss", "sc", "cs", "cc"), with an "o"
/// suffix when vision is occluded.
std::string condition_id(const Condition& c);
std::string controller_name(ControllerMode m);

struct ArmState {
  double alpha = 0.0;   // shoulder angle, degrees
  double beta = 180.0;  // elbow angle, degrees
  double l1 = 5.0;
  double l2 = 8.0;
  Vector2d origin{15.0, 15.0};
};

struct Observation {
  Vector2d end{Vector2d::Zero()};
  Vector2d elbow{Vector2d::Zero()};
  Vector2d target{Vector2d::Zero()};
};

/// Returns (end, elbow) positions; angles in degrees.
std::pair<Vector2d, Vector2d> forward_kinematics(double alpha_deg,
                                                 double beta_deg, double l1,
                                                 double l2,
                                                 const Vector2d& origin);

/// Negative Euclidean distance between end effector and target.
double reward(const Vector2d& end, const Vector2d& target);

enum class Region { Full, TrainTwoThirds, TestOneThird };

/// Draws joint angles uniformly from the region's angle box and maps them
/// through the kinematics. Regions partition the shoulder angle: the training
/// region covers alpha in [0,120], the held-out region (120,180].
Vector2d sample_target(Rng& rng, double l1, double l2, const Vector2d& origin,
                       Region region, double* generating_alpha = nullptr);

/// Evenly spaced n×n grid over [0,180]² in (alpha, beta), mapped to
/// end-effector points; outer loop over alpha.
std::vector<Vector2d> test_target_grid(int n_per_axis, double l1, double l2,
                                       const Vector2d& origin);

/// Same grid restricted to generating alpha > 120 (the held-out region).
std::vector<Vector2d> held_out_target_grid(int n_per_axis, double l1,
                                           double l2, const Vector2d& origin);

struct StepResult {
  Observation obs;
  double reward = 0.0;
  bool terminal = false;
};

/// Episode-scoped arm world. Angles are clamped to [0,180]; an episode ends
/// when the end effector enters the 0.5 cm target zone (unless the caller
/// suppresses that check for occluded-vision episodes) or after 30 steps.
class ArmEnv {
 public:
  static constexpr int kMaxSteps = 30;
  static constexpr double kTargetZoneRadius = 0.5;

  explicit ArmEnv(KinematicsMode kinematics);

  /// Starts an episode. episode_index is 1-based and drives kinematic drift
  /// (drift applies only in episodes numbered above 100).
  Observation reset(const Vector2d& target, int episode_index,
                    bool terminate_on_target = true);

  StepResult step(const Vector2d& action);

  /// Stops drift permanently; segment lengths stay at their current values.
  void freeze_kinematics() { drift_allowed_ = false; }

  /// Restores segment lengths recorded in a checkpoint.
  void set_segment_lengths(double l1, double l2) {
    state_.l1 = l1;
    state_.l2 = l2;
  }

  /// Overrides the per-episode step budget (default kMaxSteps).
  void set_max_steps(int n);

  const ArmState& state() const { return state_; }
  int steps_taken() const { return steps_taken_; }
  bool episode_done() const { return done_; }
  double distance_to_target() const;
  Observation observe() const;

 private:
  ArmState state_;
  Vector2d target_{Vector2d::Zero()};
  KinematicsMode kinematics_;
  bool drift_allowed_ = true;
  bool drift_this_episode_ = false;
  bool terminate_on_target_ = true;
  int max_steps_ = kMaxSteps;
  int steps_taken_ = 0;
  bool done_ = true;
};

}  // namespace apac
