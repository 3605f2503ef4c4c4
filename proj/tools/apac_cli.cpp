// Command-line front end: training runs, checkpoint evaluation, the
// generalization experiment, and chart emission.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "apac/harness.hpp"

namespace fs = std::filesystem;

namespace {

struct TrainArgs {
  std::string model = "apac";
  std::string target = "changing";
  std::string kinematics = "static";
  std::string vision = "perfect";
  int seeds = 5;
  int episodes = 1000;
  int babble = 100;
  int max_steps = 30;
  int buffer = 1000;
  int batch = 500;
  double threshold = 1.0;
  double factor = 3.0;
  double ou_sigma = apac::ExperimentConfig{}.ou_sigma;
  std::string out = "runs";
};

void add_common_train_options(CLI::App& cmd, TrainArgs& args) {
  cmd.add_option("--model", args.model, "Controller: ddpg, spac or apac")
      ->check(CLI::IsMember({"ddpg", "spac", "apac"}));
  cmd.add_option("--target", args.target, "Target mode: static or changing")
      ->check(CLI::IsMember({"static", "changing"}));
  cmd.add_option("--kinematics", args.kinematics,
                 "Arm kinematics: static or changing")
      ->check(CLI::IsMember({"static", "changing"}));
  cmd.add_option("--vision", args.vision, "Vision: perfect or occluded")
      ->check(CLI::IsMember({"perfect", "occluded"}));
  cmd.add_option("--seeds", args.seeds, "Number of seeds (runs 1..N)")
      ->check(CLI::PositiveNumber);
  cmd.add_option("--episodes", args.episodes, "Episodes per run")
      ->check(CLI::PositiveNumber);
  cmd.add_option("--babble", args.babble, "Motor-babbling episodes")
      ->check(CLI::NonNegativeNumber);
  cmd.add_option("--max-steps", args.max_steps, "Steps per episode")
      ->check(CLI::PositiveNumber);
  cmd.add_option("--buffer", args.buffer, "Replay buffer capacity")
      ->check(CLI::PositiveNumber);
  cmd.add_option("--batch", args.batch, "Training minibatch size")
      ->check(CLI::PositiveNumber);
  cmd.add_option("--threshold", args.threshold,
                 "Reward-prediction-error threshold for arbitration");
  cmd.add_option("--factor", args.factor, "Time cost per planning step");
  cmd.add_option("--ou-sigma", args.ou_sigma,
                 "Exploration noise scale, degrees");
  cmd.add_option("--out", args.out, "Output directory");
}

apac::ExperimentConfig config_from(const TrainArgs& args) {
  apac::ExperimentConfig cfg;
  cfg.condition.controller = apac::parse_controller_mode(args.model);
  cfg.condition.target = apac::parse_target_mode(args.target);
  cfg.condition.kinematics = apac::parse_kinematics_mode(args.kinematics);
  cfg.condition.vision = apac::parse_vision_mode(args.vision);
  cfg.episodes = args.episodes;
  cfg.babbling_episodes = args.babble;
  cfg.max_steps = args.max_steps;
  cfg.buffer_capacity = args.buffer;
  cfg.batch_size = args.batch;
  cfg.rpe_threshold = args.threshold;
  cfg.planning_time_factor = args.factor;
  cfg.ou_sigma = args.ou_sigma;
  cfg.validate();
  return cfg;
}

double trailing_success(const std::vector<apac::EpisodeRecord>& records,
                        std::size_t window) {
  const std::size_t n = std::min(window, records.size());
  if (n == 0) return 0.0;
  int hits = 0;
  for (std::size_t i = records.size() - n; i < records.size(); ++i)
    if (records[i].success) ++hits;
  return static_cast<double>(hits) / static_cast<double>(n);
}

int run_train(const TrainArgs& args) {
  const apac::ExperimentConfig cfg = config_from(args);
  const std::string cell = apac::condition_id(cfg.condition) + "_" +
                           apac::controller_name(cfg.condition.controller);
  for (int seed = 1; seed <= args.seeds; ++seed) {
    apac::RunSession session(cfg, static_cast<uint64_t>(seed));
    const std::vector<apac::EpisodeRecord> training = session.train();
    const fs::path run_dir =
        fs::path(args.out) / (cell + "_seed" + std::to_string(seed));
    session.save_checkpoints(run_dir.string());
    const apac::TestSummary test =
        session.evaluate(session.test_targets(), cfg.condition.vision);
    apac::export_csv(training, (run_dir / "train.csv").string());
    apac::export_csv(test.episodes, (run_dir / "test.csv").string());
    std::printf(
        "%s seed %d: train success (last 100 episodes) %.0f%%, "
        "test %.0f%% of %zu targets, mean distance %.3f cm -> %s\n",
        cell.c_str(), seed, 100.0 * trailing_success(training, 100),
        100.0 * test.success_rate, test.episodes.size(),
        test.mean_final_distance, run_dir.string().c_str());
  }
  return 0;
}

int run_eval(const std::string& checkpoint, std::string vision_name,
             int grid, std::string out) {
  apac::RunSession session = apac::RunSession::restore(checkpoint);
  if (vision_name.empty())
    vision_name = apac::vision_mode_name(session.config().condition.vision);
  const apac::VisionMode vision = apac::parse_vision_mode(vision_name);
  std::vector<apac::Vector2d> targets;
  if (session.config().condition.target == apac::TargetMode::Static) {
    targets.push_back(session.fixed_target());
  } else {
    const apac::ArmState& arm = session.env().state();
    targets = apac::test_target_grid(grid, arm.l1, arm.l2, arm.origin);
  }
  const apac::TestSummary test = session.evaluate(targets, vision);
  if (out.empty()) out = checkpoint;
  fs::create_directories(out);
  const fs::path csv = fs::path(out) / ("eval_" + vision_name + ".csv");
  apac::export_csv(test.episodes, csv.string());
  std::printf(
      "%s under %s vision: success %.0f%% of %zu targets, mean steps %.2f, "
      "mean distance %.3f cm -> %s\n",
      checkpoint.c_str(), vision_name.c_str(), 100.0 * test.success_rate,
      test.episodes.size(), test.mean_steps, test.mean_final_distance,
      csv.string().c_str());
  return 0;
}

int run_generalize(const TrainArgs& args) {
  TrainArgs base_args = args;
  base_args.model = "apac";  // placeholder; the experiment sets each cell's controller
  apac::ExperimentConfig base = config_from(base_args);
  std::vector<std::string> models;
  if (args.model == "all")
    models = {"ddpg", "spac", "apac"};
  else
    models = {args.model};
  std::vector<uint64_t> seeds;
  for (int s = 1; s <= args.seeds; ++s) seeds.push_back(s);
  fs::create_directories(args.out);
  for (const std::string& model : models) {
    const std::vector<apac::GeneralizationResult> results =
        apac::generalization_experiment(
            base, apac::parse_controller_mode(model), seeds);
    for (const apac::GeneralizationResult& g : results) {
      const std::string mode = apac::target_mode_name(g.trained_with);
      apac::export_csv(
          g.test_episodes,
          (fs::path(args.out) / ("gen_" + model + "_" + mode + ".csv"))
              .string());
      std::printf(
          "%s trained with %s targets: held-out success %.0f%% "
          "(%d targets x %d seeds), mean steps %.2f\n",
          model.c_str(), mode.c_str(), 100.0 * g.success_rate,
          g.targets_per_seed, g.seeds, g.mean_steps);
    }
  }
  return 0;
}

int run_plot(const std::string& in, std::string out) {
  std::vector<std::string> csvs;
  for (const auto& entry : fs::recursive_directory_iterator(in))
    if (entry.is_regular_file() && entry.path().extension() == ".csv")
      csvs.push_back(entry.path().string());
  std::sort(csvs.begin(), csvs.end());
  if (out.empty()) out = (fs::path(in) / "charts").string();
  apac::emit_plots(csvs, out);
  std::printf("%zu CSV files -> %s\n", csvs.size(), out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Arbitrated habitual/planning control on a two-joint planar arm"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "Key=value config file; keys live under a [train], [eval], "
                 "[generalize] or [plot] section and command-line flags "
                 "override them");

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "Train one condition cell");
  add_common_train_options(*train, train_args);

  std::string eval_checkpoint;
  std::string eval_vision;
  std::string eval_out;
  int eval_grid = 10;
  CLI::App* eval =
      app.add_subcommand("eval", "Evaluate a saved run on frozen weights");
  eval->add_option("--checkpoint", eval_checkpoint, "Run directory")
      ->required();
  eval->add_option("--vision", eval_vision,
                   "Override vision mode (perfect or occluded)")
      ->check(CLI::IsMember({"", "perfect", "occluded"}));
  eval->add_option("--grid", eval_grid, "Targets per grid axis")
      ->check(CLI::Range(2, 100));
  eval->add_option("--out", eval_out, "Output directory (default: checkpoint)");

  TrainArgs gen_args;
  gen_args.model = "all";
  CLI::App* gen = app.add_subcommand(
      "generalize", "Train on two-thirds of the workspace, test on the rest");
  gen->add_option("--model", gen_args.model,
                  "Controller: ddpg, spac, apac or all")
      ->check(CLI::IsMember({"ddpg", "spac", "apac", "all"}));
  gen->add_option("--seeds", gen_args.seeds, "Number of seeds (runs 1..N)")
      ->check(CLI::PositiveNumber);
  gen->add_option("--episodes", gen_args.episodes, "Episodes per run")
      ->check(CLI::PositiveNumber);
  gen->add_option("--babble", gen_args.babble, "Motor-babbling episodes")
      ->check(CLI::NonNegativeNumber);
  gen->add_option("--out", gen_args.out, "Output directory");

  std::string plot_in;
  std::string plot_out;
  CLI::App* plot =
      app.add_subcommand("plot", "Render SVG charts from run CSV files");
  plot->add_option("--in", plot_in, "Directory searched for CSV files")
      ->required();
  plot->add_option("--out", plot_out, "Chart directory (default: <in>/charts)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return run_train(train_args);
    if (eval->parsed())
      return run_eval(eval_checkpoint, eval_vision, eval_grid, eval_out);
    if (gen->parsed()) return run_generalize(gen_args);
    if (plot->parsed()) return run_plot(plot_in, plot_out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
