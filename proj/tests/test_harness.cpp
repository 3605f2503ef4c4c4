#include "apac/harness.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "test_util.hpp"

using namespace apac;
using test_util::zero_parameters;

namespace {

namespace fs = std::filesystem;

// Desk-size setup: tiny networks and a short schedule, enough for the
// protocol invariants without meaningful learning.
ExperimentConfig tiny_config() {
  ExperimentConfig cfg;
  cfg.episodes = 12;
  cfg.babbling_episodes = 4;
  cfg.max_steps = 6;
  cfg.buffer_capacity = 64;
  cfg.batch_size = 16;
  cfg.habitual.hidden1 = 8;
  cfg.habitual.hidden2 = 6;
  cfg.planning.hidden1 = 8;
  cfg.planning.hidden2 = 6;
  return cfg;
}

std::string read_bytes(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(bool(f));
  std::string bytes((std::istreambuf_iterator<char>(f)),
                    std::istreambuf_iterator<char>());
  return bytes;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("experiment config: invalid settings are rejected") {
  ExperimentConfig cfg = tiny_config();
  cfg.episodes = cfg.babbling_episodes;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  cfg = tiny_config();
  cfg.batch_size = cfg.buffer_capacity + 1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  cfg = tiny_config();
  cfg.planning_time_factor = 0.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  cfg = tiny_config();
  cfg.condition.controller = ControllerMode::Ddpg;
  cfg.condition.vision = VisionMode::Occluded;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  CHECK_NOTHROW(tiny_config().validate());
}

TEST_CASE("train_run: same seed, bit-identical CSV artifacts") {
  const ExperimentConfig cfg = tiny_config();
  const RunMetrics a = train_run(cfg, 7);
  const RunMetrics b = train_run(cfg, 7);
  const fs::path dir = fresh_dir("apac_determinism");
  export_csv(a.training, (dir / "a.csv").string());
  export_csv(b.training, (dir / "b.csv").string());
  export_csv(a.test.episodes, (dir / "a_test.csv").string());
  export_csv(b.test.episodes, (dir / "b_test.csv").string());
  CHECK(read_bytes(dir / "a.csv") == read_bytes(dir / "b.csv"));
  CHECK(read_bytes(dir / "a_test.csv") == read_bytes(dir / "b_test.csv"));

  const RunMetrics c = train_run(cfg, 8);
  export_csv(c.training, (dir / "c.csv").string());
  CHECK(read_bytes(dir / "a.csv") != read_bytes(dir / "c.csv"));
}

TEST_CASE("train_run: record bookkeeping invariants") {
  const ExperimentConfig cfg = tiny_config();
  const RunMetrics m = train_run(cfg, 3);
  REQUIRE(m.training.size() == static_cast<std::size_t>(cfg.episodes));
  for (const EpisodeRecord& r : m.training) {
    CHECK(r.condition == "cs");
    CHECK(r.model == "apac");
    CHECK(r.steps >= 1);
    CHECK(r.steps <= cfg.max_steps);
    if (r.episode <= cfg.babbling_episodes) {
      CHECK(r.success == false);
      CHECK(r.habitual_steps == 0);
      CHECK(r.planning_steps == 0);
      CHECK(r.time_cost == 0.0);
    } else {
      CHECK(r.habitual_steps + r.planning_steps == r.steps);
      CHECK(r.time_cost ==
            r.habitual_steps + cfg.planning_time_factor * r.planning_steps);
      CHECK(r.time_cost >= r.steps);
    }
  }
  for (std::size_t i = 0; i < m.training.size(); ++i)
    CHECK(m.training[i].episode == static_cast<int>(i) + 1);
}

TEST_CASE("train_run: locked modes never use the other controller") {
  ExperimentConfig cfg = tiny_config();
  cfg.condition.controller = ControllerMode::Ddpg;
  for (const EpisodeRecord& r : train_run(cfg, 5).training)
    CHECK(r.planning_steps == 0);

  cfg.condition.controller = ControllerMode::Spac;
  for (const EpisodeRecord& r : train_run(cfg, 5).training)
    CHECK(r.habitual_steps == 0);
}

TEST_CASE("ddpg training leaves the internal models untouched") {
  ExperimentConfig cfg = tiny_config();
  cfg.condition.controller = ControllerMode::Ddpg;
  RunSession session(cfg, 11);
  const MatrixXd forward_before = session.planning().forward_net().layers()[0].W;
  const MatrixXd inverse_before = session.planning().inverse_net().layers()[0].W;
  session.train();
  CHECK(session.planning().forward_net().layers()[0].W == forward_before);
  CHECK(session.planning().inverse_net().layers()[0].W == inverse_before);
}

TEST_CASE("spac training can freeze the habitual networks") {
  ExperimentConfig cfg = tiny_config();
  cfg.condition.controller = ControllerMode::Spac;
  cfg.spac_trains_habitual = false;
  RunSession session(cfg, 11);
  const MatrixXd actor_before = session.habitual().actor().layers()[0].W;
  const MatrixXd critic_before = session.habitual().critic().layers()[0].W;
  session.train();
  CHECK(session.habitual().actor().layers()[0].W == actor_before);
  CHECK(session.habitual().critic().layers()[0].W == critic_before);
}

TEST_CASE("babbling stores relabeled, solved transitions") {
  ExperimentConfig cfg = tiny_config();
  RunSession session(cfg, 21);
  const std::vector<EpisodeRecord> records = session.babble();
  REQUIRE(records.size() == static_cast<std::size_t>(cfg.babbling_episodes));
  int total_steps = 0;
  for (const EpisodeRecord& r : records) total_steps += r.steps;
  CHECK(session.buffer().size() == static_cast<std::size_t>(total_steps));
  for (const Transition& t : session.buffer().entries()) {
    CHECK(t.r == 0.0);
    CHECK(t.terminal == true);
    // The achieved end position is written into both target slots.
    CHECK(t.s.tail<2>() == t.s_next.head<2>());
    CHECK(t.s.tail<2>() == t.s_next.tail<2>());
  }
}

TEST_CASE("static-target runs keep one reachable target") {
  ExperimentConfig cfg = tiny_config();
  cfg.condition.target = TargetMode::Static;
  RunSession session(cfg, 2);
  const std::vector<Vector2d> targets = session.test_targets();
  REQUIRE(targets.size() == 1);
  CHECK(targets[0] == session.fixed_target());
  const double radius = (targets[0] - Vector2d(15.0, 15.0)).norm();
  CHECK(radius >= 3.0);
  CHECK(radius <= 13.0);
}

TEST_CASE("changing-target runs test on the 10x10 grid") {
  RunSession session(tiny_config(), 2);
  CHECK(session.test_targets().size() == 100);
}

TEST_CASE("evaluate: zero actor and a target on the resting end position") {
  ExperimentConfig cfg = tiny_config();
  cfg.condition.controller = ControllerMode::Ddpg;
  RunSession session(cfg, 1);
  zero_parameters(session.habitual().actor().layers_mut());
  zero_parameters(session.habitual().actor_target().layers_mut());
  Vector2d resting;
  resting << 12.0, 15.0;
  const TestSummary t = session.evaluate({resting}, VisionMode::Perfect);
  REQUIRE(t.episodes.size() == 1);
  CHECK(t.episodes[0].success);
  CHECK(t.episodes[0].steps == 1);  // the no-op action already lands in zone
  CHECK(t.episodes[0].final_distance < 1e-12);
  CHECK(t.success_rate == 1.0);
}

TEST_CASE("evaluate: repeat passes are identical and leave weights frozen") {
  ExperimentConfig cfg = tiny_config();
  RunSession session(cfg, 13);
  session.train();
  const fs::path before = fresh_dir("apac_eval_before");
  const fs::path after = fresh_dir("apac_eval_after");
  session.save_checkpoints(before.string());

  const std::vector<Vector2d> targets = session.test_targets();
  const TestSummary a = session.evaluate(targets, VisionMode::Perfect);
  const TestSummary b = session.evaluate(targets, VisionMode::Perfect);
  session.save_checkpoints(after.string());

  CHECK(a.success_rate == b.success_rate);
  CHECK(a.mean_steps == b.mean_steps);
  CHECK(a.mean_final_distance == b.mean_final_distance);
  REQUIRE(a.episodes.size() == b.episodes.size());
  for (std::size_t i = 0; i < a.episodes.size(); ++i) {
    CHECK(a.episodes[i].steps == b.episodes[i].steps);
    CHECK(a.episodes[i].final_distance == b.episodes[i].final_distance);
  }
  for (const char* name : {"actor.net", "actor_target.net", "critic.net",
                           "critic_target.net", "forward.net", "inverse.net"})
    CHECK(read_bytes(before / name) == read_bytes(after / name));
}

TEST_CASE("evaluate: argument screening") {
  ExperimentConfig cfg = tiny_config();
  cfg.condition.controller = ControllerMode::Ddpg;
  RunSession session(cfg, 1);
  Vector2d t;
  t << 20.0, 15.0;
  CHECK_THROWS_AS(session.evaluate({t}, VisionMode::Occluded),
                  std::invalid_argument);
  CHECK_THROWS_AS(session.evaluate({}, VisionMode::Perfect),
                  std::invalid_argument);
}

TEST_CASE("occluded evaluation stops on prediction, reports actual distance") {
  ExperimentConfig cfg = tiny_config();
  cfg.condition.controller = ControllerMode::Spac;
  RunSession session(cfg, 1);
  // Zeroed internal models: the forward net predicts the arena center for
  // any input and the inverse net proposes the null action.
  zero_parameters(session.planning().forward_net().layers_mut());
  zero_parameters(session.planning().inverse_net().layers_mut());
  Vector2d center;
  center << 15.0, 15.0;
  const TestSummary t = session.evaluate({center}, VisionMode::Occluded);
  REQUIRE(t.episodes.size() == 1);
  // Predicted end (15,15) sits on the remembered target, so the episode
  // stops after one step; the arm never moved off (12,15).
  CHECK(t.episodes[0].steps == 1);
  CHECK(t.episodes[0].success == false);
  CHECK(t.episodes[0].final_distance == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("checkpoints: restore reproduces the run exactly") {
  ExperimentConfig cfg = tiny_config();
  cfg.condition.kinematics = KinematicsMode::Changing;
  RunSession session(cfg, 17);
  session.train();
  // Too few episodes for drift to kick in on its own; stretch the segments
  // so the metadata round-trip is visible.
  session.env().set_segment_lengths(5.25, 8.25);
  const fs::path dir = fresh_dir("apac_checkpoint");
  session.save_checkpoints(dir.string());

  RunSession restored = RunSession::restore(dir.string());
  CHECK(restored.seed() == session.seed());
  CHECK(restored.config().episodes == cfg.episodes);
  CHECK(restored.config().batch_size == cfg.batch_size);
  CHECK(restored.config().habitual.hidden1 == cfg.habitual.hidden1);
  CHECK(restored.env().state().l1 == 5.25);
  CHECK(restored.env().state().l2 == 8.25);

  Vector6d probe;
  probe << 12.0, 15.0, 10.0, 15.0, 20.0, 20.0;
  CHECK(restored.habitual().act(probe) == session.habitual().act(probe));
  CHECK(restored.planning().plan_action(probe) ==
        session.planning().plan_action(probe));

  const std::vector<Vector2d> targets = session.test_targets();
  const TestSummary a = session.evaluate(targets, VisionMode::Perfect);
  const TestSummary b = restored.evaluate(targets, VisionMode::Perfect);
  REQUIRE(a.episodes.size() == b.episodes.size());
  for (std::size_t i = 0; i < a.episodes.size(); ++i) {
    CHECK(a.episodes[i].steps == b.episodes[i].steps);
    CHECK(a.episodes[i].final_distance == b.episodes[i].final_distance);
  }
}

TEST_CASE("checkpoints: static-target metadata carries the target") {
  ExperimentConfig cfg = tiny_config();
  cfg.condition.target = TargetMode::Static;
  RunSession session(cfg, 4);
  const fs::path dir = fresh_dir("apac_checkpoint_static");
  session.save_checkpoints(dir.string());
  RunSession restored = RunSession::restore(dir.string());
  CHECK(restored.fixed_target() == session.fixed_target());
}

TEST_CASE("checkpoints: restore from an empty directory fails") {
  const fs::path dir = fresh_dir("apac_checkpoint_empty");
  CHECK_THROWS_AS(RunSession::restore(dir.string()), std::runtime_error);
}

TEST_CASE("csv: export and read back round-trip") {
  std::vector<EpisodeRecord> records;
  EpisodeRecord r;
  r.seed = 3;
  r.condition = "cso";
  r.model = "spac";
  r.episode = 101;
  r.success = true;
  r.steps = 17;
  r.habitual_steps = 0;
  r.planning_steps = 17;
  r.time_cost = 51.0;
  r.final_distance = 0.12345678901234567;
  records.push_back(r);
  r.seed = 4;
  r.success = false;
  r.final_distance = 2.0 / 3.0;
  r.time_cost = 1e-17;
  records.push_back(r);

  const fs::path dir = fresh_dir("apac_csv");
  const std::string path = (dir / "roundtrip.csv").string();
  export_csv(records, path);
  const std::vector<EpisodeRecord> back = read_csv(path);
  REQUIRE(back.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(back[i].seed == records[i].seed);
    CHECK(back[i].condition == records[i].condition);
    CHECK(back[i].model == records[i].model);
    CHECK(back[i].episode == records[i].episode);
    CHECK(back[i].success == records[i].success);
    CHECK(back[i].steps == records[i].steps);
    CHECK(back[i].habitual_steps == records[i].habitual_steps);
    CHECK(back[i].planning_steps == records[i].planning_steps);
    CHECK(back[i].time_cost == records[i].time_cost);
    CHECK(back[i].final_distance == records[i].final_distance);
  }
}

TEST_CASE("csv: i/o errors surface") {
  CHECK_THROWS_AS(export_csv({}, "/nonexistent_dir/out.csv"),
                  std::runtime_error);
  CHECK_THROWS_AS(read_csv("/nonexistent_dir/in.csv"), std::runtime_error);

  const fs::path dir = fresh_dir("apac_csv_bad");
  {
    std::ofstream f(dir / "bad.csv");
    f << "not,the,expected,header\n";
  }
  CHECK_THROWS_AS(read_csv((dir / "bad.csv").string()), std::runtime_error);
}

TEST_CASE("moving average: window arithmetic") {
  CHECK_THROWS_AS(moving_average({1.0}, 0), std::invalid_argument);

  const std::vector<double> constant(40, 0.75);
  for (const double v : moving_average(constant, 7)) CHECK(v == 0.75);

  const std::vector<double> xs{1.0, 2.0, 3.0};
  CHECK(moving_average(xs, 1) == xs);
  const std::vector<double> smoothed = moving_average(xs, 2);
  CHECK(smoothed[0] == 1.0);
  CHECK(smoothed[1] == 1.5);
  CHECK(smoothed[2] == 2.5);
}

TEST_CASE("plots: charts land on disk") {
  const ExperimentConfig cfg = tiny_config();
  const RunMetrics m = train_run(cfg, 9);
  const fs::path dir = fresh_dir("apac_plots");
  const std::string csv = (dir / "train.csv").string();
  export_csv(m.training, csv);
  emit_plots({csv}, (dir / "charts").string());
  for (const char* name : {"success_rate.svg", "source_fractions.svg",
                           "time_cost.svg", "final_distance.svg"}) {
    const std::string bytes = read_bytes(dir / "charts" / name);
    CHECK(bytes.substr(0, 4) == "<svg");
    CHECK(bytes.size() > 500);
  }
  CHECK_THROWS_AS(emit_plots({}, (dir / "charts").string()),
                  std::runtime_error);
}

TEST_CASE("generalization: both target regimes, held-out grid") {
  ExperimentConfig cfg = tiny_config();
  const std::vector<GeneralizationResult> results =
      generalization_experiment(cfg, ControllerMode::Apac, {1, 2});
  REQUIRE(results.size() == 2);
  CHECK(results[0].trained_with == TargetMode::Static);
  CHECK(results[1].trained_with == TargetMode::Changing);
  for (const GeneralizationResult& g : results) {
    CHECK(g.model == "apac");
    CHECK(g.seeds == 2);
    CHECK(g.targets_per_seed == 30);
    CHECK(g.test_episodes.size() == 60);
    CHECK(g.success_rate >= 0.0);
    CHECK(g.success_rate <= 1.0);
    CHECK(g.mean_steps >= 1.0);
  }
}
