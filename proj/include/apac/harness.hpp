#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "apac/arbitrator.hpp"
#include "apac/env.hpp"
#include "apac/habitual.hpp"
#include "apac/noise.hpp"
#include "apac/planning.hpp"
#include "apac/replay.hpp"

namespace apac {

enum class BabblePolicy { Random, Inverse };

// Enum spellings shared by the command line and checkpoint metadata.
// Parsers throw std::invalid_argument on unknown names.
std::string target_mode_name(TargetMode m);
std::string kinematics_mode_name(KinematicsMode m);
std::string vision_mode_name(VisionMode m);
std::string region_name(Region r);
std::string babble_policy_name(BabblePolicy p);
TargetMode parse_target_mode(const std::string& s);
KinematicsMode parse_kinematics_mode(const std::string& s);
VisionMode parse_vision_mode(const std::string& s);
ControllerMode parse_controller_mode(const std::string& s);
Region parse_region(const std::string& s);
BabblePolicy parse_babble_policy(const std::string& s);

struct ExperimentConfig {
  Condition condition;
  int episodes = 1000;
  int max_steps = 30;
  int babbling_episodes = 100;
  int buffer_capacity = 1000;
  int batch_size = 500;
  double planning_time_factor = 3.0;
  double rpe_threshold = 1.0;
  int habitual_priority_steps = 2;
  double ou_theta = 0.15;
  double ou_mu = 0.0;
  // Noise amplitude in action units (degrees). Two pressures pin the scale:
  // the hand moves about 0.25 cm per degree of command error, so sigma must
  // stay small enough that noisy actions still enter the 0.5 cm target zone
  // and the reward prediction error can settle below rpe_threshold; yet the
  // critic only ever sees actions the behavior policy executed, so sigma
  // must be large enough to keep a band of action-space coverage around the
  // policy or its action gradient degenerates once episodes shrink to a
  // single repeated step. A couple of degrees satisfies both.
  double ou_sigma = 2.0;
  bool spac_trains_habitual = true;
  BabblePolicy babble_policy = BabblePolicy::Random;
  // Where training targets are drawn from; the generalization experiment
  // narrows this to the training two-thirds of the reachable space.
  Region target_region = Region::Full;
  HabitualConfig habitual;
  PlanningConfig planning;

  /// Throws std::invalid_argument on inconsistent settings.
  void validate() const;
};

struct EpisodeRecord {
  int seed = 0;
  std::string condition;
  std::string model;
  int episode = 0;
  bool success = false;
  int steps = 0;
  int habitual_steps = 0;
  int planning_steps = 0;
  double time_cost = 0.0;
  double final_distance = 0.0;
};

struct TestSummary {
  std::vector<EpisodeRecord> episodes;
  double success_rate = 0.0;
  double mean_steps = 0.0;
  double mean_final_distance = 0.0;
};

struct RunMetrics {
  std::vector<EpisodeRecord> training;
  TestSummary test;
  std::string checkpoint_dir;
};

/// One (config, seed) experiment instance. Owns every piece of mutable
/// state: environment, both controllers, replay buffer, exploration noise,
/// and the RNG, so runs are independent and fully deterministic.
class RunSession {
 public:
  RunSession(const ExperimentConfig& cfg, uint64_t seed);

  /// Motor-babbling episodes: random actions, each transition stored with
  /// the achieved end position as its target, reward 0, terminal set.
  std::vector<EpisodeRecord> babble();

  EpisodeRecord run_training_episode(int episode_index);

  /// Babbling followed by the remaining training episodes.
  std::vector<EpisodeRecord> train();

  /// Frozen-weights test episodes, one per target: no exploration noise, no
  /// buffer writes, no parameter updates, drift stopped. Under occluded
  /// vision the episode stops on the predicted distance and the record keeps
  /// the actual one.
  TestSummary evaluate(const std::vector<Vector2d>& targets, VisionMode vision);

  /// The frozen-arm 10x10 target grid, or the run's fixed target when the
  /// target mode is static.
  std::vector<Vector2d> test_targets() const;

  void save_checkpoints(const std::string& dir) const;
  void load_checkpoints(const std::string& dir);

  /// Rebuilds a session from a checkpoint directory: configuration and seed
  /// from the metadata file, weights from the network files, segment lengths
  /// as recorded at freeze. Intended for evaluation.
  static RunSession restore(const std::string& dir);

  const ExperimentConfig& config() const { return cfg_; }
  uint64_t seed() const { return seed_; }
  ArmEnv& env() { return env_; }
  HabitualController& habitual() { return habitual_; }
  PlanningController& planning() { return planning_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  const Vector2d& fixed_target() const { return fixed_target_; }

 private:
  struct EpisodeOutcome {
    bool success = false;
    int steps = 0;
    int habitual_steps = 0;
    int planning_steps = 0;
    double final_distance = 0.0;
  };

  EpisodeOutcome play_episode(const Vector2d& target, int episode_index,
                              VisionMode vision, bool training, bool babbling);
  void train_networks(bool babbling);
  Vector2d next_training_target();
  EpisodeRecord make_record(int episode_index, const EpisodeOutcome& o,
                            bool babbling) const;

  ExperimentConfig cfg_;
  uint64_t seed_;
  Rng rng_;
  HabitualController habitual_;
  PlanningController planning_;
  ReplayBuffer buffer_;
  OuProcess ou_;
  ArmEnv env_;
  ArbitratorConfig arbitrator_;
  Vector2d fixed_target_{Vector2d::Zero()};
};

/// Full experiment for one seed: training plus the frozen test pass under
/// the condition's own vision mode.
RunMetrics train_run(const ExperimentConfig& cfg, uint64_t seed);

/// Held-out region result for one (model, training-target-mode) cell,
/// aggregated over seeds.
struct GeneralizationResult {
  std::string model;
  TargetMode trained_with = TargetMode::Static;
  int seeds = 0;
  int targets_per_seed = 0;
  double success_rate = 0.0;
  double mean_steps = 0.0;
  std::vector<EpisodeRecord> test_episodes;
};

/// Trains the model with static and with changing targets drawn from the
/// training two-thirds of the workspace, then tests both on the held-out
/// one-third grid.
std::vector<GeneralizationResult> generalization_experiment(
    const ExperimentConfig& base, ControllerMode model,
    const std::vector<uint64_t>& seeds);

// Reporting artifacts.

/// Columns: seed,condition,model,episode,success,steps,habitual_steps,
/// planning_steps,time_cost,final_distance. Doubles round-trip exactly.
void export_csv(const std::vector<EpisodeRecord>& records,
                const std::string& path);
std::vector<EpisodeRecord> read_csv(const std::string& path);

/// Trailing window mean; the window is truncated at the front of the series.
std::vector<double> moving_average(const std::vector<double>& xs, int window);

/// SVG line charts aggregated over the given CSV files, grouped by
/// (condition, model): smoothed success rate, action-source fractions,
/// episode time cost, and final-distance bands across seeds.
void emit_plots(const std::vector<std::string>& csv_paths,
                const std::string& out_dir);

}  // namespace apac
