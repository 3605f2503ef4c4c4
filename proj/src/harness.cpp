#include "apac/harness.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace apac {

namespace {

namespace fs = std::filesystem;

[[noreturn]] void bad_config(const std::string& what) {
  throw std::invalid_argument(what);
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string target_mode_name(TargetMode m) {
  return m == TargetMode::Static ? "static" : "changing";
}

std::string kinematics_mode_name(KinematicsMode m) {
  return m == KinematicsMode::Static ? "static" : "changing";
}

std::string vision_mode_name(VisionMode m) {
  return m == VisionMode::Perfect ? "perfect" : "occluded";
}

std::string region_name(Region r) {
  switch (r) {
    case Region::Full:
      return "full";
    case Region::TrainTwoThirds:
      return "train";
    case Region::TestOneThird:
      return "test";
  }
  return "?";
}

std::string babble_policy_name(BabblePolicy p) {
  return p == BabblePolicy::Random ? "random" : "inverse";
}

TargetMode parse_target_mode(const std::string& s) {
  if (s == "static") return TargetMode::Static;
  if (s == "changing") return TargetMode::Changing;
  throw std::invalid_argument("unknown target mode: " + s);
}

KinematicsMode parse_kinematics_mode(const std::string& s) {
  if (s == "static") return KinematicsMode::Static;
  if (s == "changing") return KinematicsMode::Changing;
  throw std::invalid_argument("unknown kinematics mode: " + s);
}

VisionMode parse_vision_mode(const std::string& s) {
  if (s == "perfect") return VisionMode::Perfect;
  if (s == "occluded") return VisionMode::Occluded;
  throw std::invalid_argument("unknown vision mode: " + s);
}

ControllerMode parse_controller_mode(const std::string& s) {
  if (s == "ddpg") return ControllerMode::Ddpg;
  if (s == "spac") return ControllerMode::Spac;
  if (s == "apac") return ControllerMode::Apac;
  throw std::invalid_argument("unknown model: " + s);
}

Region parse_region(const std::string& s) {
  if (s == "full") return Region::Full;
  if (s == "train") return Region::TrainTwoThirds;
  if (s == "test") return Region::TestOneThird;
  throw std::invalid_argument("unknown region: " + s);
}

BabblePolicy parse_babble_policy(const std::string& s) {
  if (s == "random") return BabblePolicy::Random;
  if (s == "inverse") return BabblePolicy::Inverse;
  throw std::invalid_argument("unknown babble policy: " + s);
}

void ExperimentConfig::validate() const {
  if (episodes <= 0) bad_config("episodes must be positive");
  if (babbling_episodes < 0) bad_config("babbling episode count is negative");
  if (episodes <= babbling_episodes)
    bad_config("episodes must exceed the babbling phase");
  if (max_steps <= 0) bad_config("max_steps must be positive");
  if (buffer_capacity <= 0) bad_config("buffer capacity must be positive");
  if (batch_size <= 0) bad_config("batch size must be positive");
  if (batch_size > buffer_capacity)
    bad_config("batch size cannot exceed the buffer capacity");
  if (planning_time_factor < 1.0)
    bad_config("planning time factor below 1 breaks the cost model");
  if (rpe_threshold < 0.0) bad_config("rpe threshold is negative");
  if (habitual_priority_steps < 0)
    bad_config("habitual priority window is negative");
  if (ou_theta < 0.0 || ou_sigma < 0.0) bad_config("noise parameters negative");
  if (condition.vision == VisionMode::Occluded &&
      condition.controller == ControllerMode::Ddpg)
    bad_config("ddpg has no internal models and cannot run occluded episodes");
}

RunSession::RunSession(const ExperimentConfig& cfg, uint64_t seed)
    : cfg_(cfg),
      seed_(seed),
      rng_(seed),
      habitual_(cfg.habitual, rng_),
      planning_(cfg.planning, rng_),
      buffer_(static_cast<std::size_t>(cfg.buffer_capacity)),
      ou_(cfg.ou_theta, cfg.ou_mu, cfg.ou_sigma),
      env_(cfg.condition.kinematics) {
  cfg_.validate();
  env_.set_max_steps(cfg_.max_steps);
  arbitrator_.mode = cfg_.condition.controller;
  arbitrator_.rpe_threshold = cfg_.rpe_threshold;
  arbitrator_.habitual_priority_steps = cfg_.habitual_priority_steps;
  if (cfg_.condition.target == TargetMode::Static) {
    const ArmState& arm = env_.state();
    fixed_target_ =
        sample_target(rng_, arm.l1, arm.l2, arm.origin, cfg_.target_region);
  }
}

Vector2d RunSession::next_training_target() {
  if (cfg_.condition.target == TargetMode::Static) return fixed_target_;
  const ArmState& arm = env_.state();
  return sample_target(rng_, arm.l1, arm.l2, arm.origin, cfg_.target_region);
}

void RunSession::train_networks(bool babbling) {
  if (buffer_.size() < static_cast<std::size_t>(cfg_.batch_size)) return;
  const std::vector<Transition> batch =
      buffer_.sample_batch(static_cast<std::size_t>(cfg_.batch_size), rng_);
  const ControllerMode mode = cfg_.condition.controller;
  if (mode != ControllerMode::Ddpg) {
    planning_.train_forward(batch);
    planning_.train_inverse(batch);
  }
  if (mode != ControllerMode::Spac || cfg_.spac_trains_habitual) {
    habitual_.train_critic(batch);
    // The actor holds still while babbling: policy-gradient ascent only
    // starts once the critic has shaped a value landscape worth climbing,
    // so the random-action phase cannot march the policy into a bound.
    if (!babbling) habitual_.train_actor(batch);
    habitual_.update_targets();
  }
}

RunSession::EpisodeOutcome RunSession::play_episode(const Vector2d& target,
                                                    int episode_index,
                                                    VisionMode vision,
                                                    bool training,
                                                    bool babbling) {
  const bool occluded = vision == VisionMode::Occluded;
  Observation obs = env_.reset(target, episode_index, !occluded);
  ou_.reset();
  std::optional<double> last_rpe;
  const Vector2d remembered_target = obs.target;
  Vector2d predicted_end = obs.end;
  Vector2d predicted_elbow = obs.elbow;
  EpisodeOutcome out;

  while (true) {
    const Vector6d s = occluded
                           ? integrate(vision, std::nullopt, predicted_end,
                                       predicted_elbow, remembered_target)
                           : integrate(vision, obs, predicted_end,
                                       predicted_elbow, remembered_target);
    Vector2d action;
    std::optional<ActionSource> source;
    if (babbling && cfg_.babble_policy == BabblePolicy::Random) {
      const double range = cfg_.habitual.action_scale;
      action << rng_.uniform(-range, range), rng_.uniform(-range, range);
    } else {
      Vector2d habitual_action = Vector2d::Zero();
      Vector2d planning_action = Vector2d::Zero();
      if (arbitrator_.mode != ControllerMode::Spac)
        habitual_action = habitual_.act(s);
      if (arbitrator_.mode != ControllerMode::Ddpg)
        planning_action = planning_.plan_action(s);
      const ActionChoice choice = select(arbitrator_, out.steps, last_rpe,
                                         habitual_action, planning_action);
      action = choice.action;
      if (!babbling) source = choice.source;
      if (training) action += ou_.next(rng_);
    }

    const StepResult result = env_.step(action);
    ++out.steps;

    Vector6d s_next;
    double step_reward = result.reward;
    bool terminal = result.terminal;
    if (occluded) {
      const auto [next_end, next_elbow] =
          planning_.predict_next(predicted_end, predicted_elbow, action);
      predicted_end = next_end;
      predicted_elbow = next_elbow;
      s_next = integrate(vision, std::nullopt, predicted_end, predicted_elbow,
                         remembered_target);
      const double predicted_distance =
          (predicted_end - remembered_target).norm();
      step_reward = -predicted_distance;
      terminal = terminal || predicted_distance <= ArmEnv::kTargetZoneRadius;
    } else {
      s_next = integrate(vision, result.obs, predicted_end, predicted_elbow,
                         remembered_target);
    }

    Transition t;
    t.s = s;
    t.a = action;
    t.r = step_reward;
    t.s_next = s_next;
    t.terminal = terminal;
    if (babbling && arbitrator_.mode != ControllerMode::Ddpg) {
      // Whatever position the random movement reached is recorded as the
      // target that was "meant", making every babbling step a solved episode.
      // The pure habitual baseline keeps real targets and rewards instead:
      // with every stored reward zero at a terminal, its lone critic would
      // collapse to the zero constant, so babbling serves it as plain
      // uniform exploration of the action space.
      t.s.tail<2>() = result.obs.end;
      t.s_next.tail<2>() = result.obs.end;
      t.r = 0.0;
      t.terminal = true;
    }
    if (training) buffer_.push(t);
    if (!babbling) {
      last_rpe = habitual_.rpe(t);
      if (*source == ActionSource::Habitual)
        ++out.habitual_steps;
      else
        ++out.planning_steps;
    }
    if (training) train_networks(babbling);

    obs = result.obs;
    if (terminal) break;
  }

  out.final_distance = env_.distance_to_target();
  out.success = out.final_distance <= ArmEnv::kTargetZoneRadius;
  return out;
}

EpisodeRecord RunSession::make_record(int episode_index,
                                      const EpisodeOutcome& o,
                                      bool babbling) const {
  EpisodeRecord r;
  r.seed = static_cast<int>(seed_);
  r.condition = condition_id(cfg_.condition);
  r.model = controller_name(cfg_.condition.controller);
  r.episode = episode_index;
  r.steps = o.steps;
  r.final_distance = o.final_distance;
  if (babbling) return r;  // sources, cost and success stay at their zeros
  r.success = o.success;
  r.habitual_steps = o.habitual_steps;
  r.planning_steps = o.planning_steps;
  r.time_cost =
      o.habitual_steps + cfg_.planning_time_factor * o.planning_steps;
  return r;
}

std::vector<EpisodeRecord> RunSession::babble() {
  std::vector<EpisodeRecord> records;
  records.reserve(static_cast<std::size_t>(cfg_.babbling_episodes));
  for (int ep = 1; ep <= cfg_.babbling_episodes; ++ep) {
    // Babbling always sees the arm: it bootstraps the forward model that
    // occluded episodes depend on.
    const EpisodeOutcome o = play_episode(next_training_target(), ep,
                                          VisionMode::Perfect, true, true);
    records.push_back(make_record(ep, o, true));
  }
  return records;
}

EpisodeRecord RunSession::run_training_episode(int episode_index) {
  const EpisodeOutcome o =
      play_episode(next_training_target(), episode_index,
                   cfg_.condition.vision, true, false);
  return make_record(episode_index, o, false);
}

std::vector<EpisodeRecord> RunSession::train() {
  std::vector<EpisodeRecord> records = babble();
  records.reserve(static_cast<std::size_t>(cfg_.episodes));
  for (int ep = cfg_.babbling_episodes + 1; ep <= cfg_.episodes; ++ep)
    records.push_back(run_training_episode(ep));
  return records;
}

TestSummary RunSession::evaluate(const std::vector<Vector2d>& targets,
                                 VisionMode vision) {
  if (targets.empty()) throw std::invalid_argument("no test targets");
  if (vision == VisionMode::Occluded &&
      cfg_.condition.controller == ControllerMode::Ddpg)
    throw std::invalid_argument(
        "ddpg has no internal models and cannot run occluded episodes");
  env_.freeze_kinematics();
  TestSummary summary;
  summary.episodes.reserve(targets.size());
  int successes = 0;
  double steps_sum = 0.0;
  double distance_sum = 0.0;
  int index = 0;
  for (const Vector2d& target : targets) {
    ++index;
    const EpisodeOutcome o = play_episode(target, index, vision, false, false);
    const EpisodeRecord r = make_record(index, o, false);
    summary.episodes.push_back(r);
    if (r.success) ++successes;
    steps_sum += r.steps;
    distance_sum += r.final_distance;
  }
  const double n = static_cast<double>(targets.size());
  summary.success_rate = successes / n;
  summary.mean_steps = steps_sum / n;
  summary.mean_final_distance = distance_sum / n;
  return summary;
}

std::vector<Vector2d> RunSession::test_targets() const {
  if (cfg_.condition.target == TargetMode::Static) return {fixed_target_};
  const ArmState& arm = env_.state();
  return test_target_grid(10, arm.l1, arm.l2, arm.origin);
}

namespace {

void save_net(const Mlp& net, const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  net.save(f);
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

void save_net(const CriticNet& net, const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  net.save(f);
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

std::ifstream open_net(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  return f;
}

using Metadata = std::map<std::string, std::string>;

Metadata read_metadata(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  Metadata meta;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("malformed metadata line: " + line);
    meta[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return meta;
}

const std::string& meta_get(const Metadata& m, const std::string& key) {
  const auto it = m.find(key);
  if (it == m.end()) throw std::runtime_error("metadata missing key: " + key);
  return it->second;
}

double meta_double(const Metadata& m, const std::string& key) {
  return std::stod(meta_get(m, key));
}

int meta_int(const Metadata& m, const std::string& key) {
  return std::stoi(meta_get(m, key));
}

bool meta_bool(const Metadata& m, const std::string& key) {
  return meta_int(m, key) != 0;
}

}  // namespace

void RunSession::save_checkpoints(const std::string& dir) const {
  const fs::path root(dir);
  fs::create_directories(root);
  save_net(habitual_.actor(), root / "actor.net");
  save_net(habitual_.actor_target(), root / "actor_target.net");
  save_net(habitual_.critic(), root / "critic.net");
  save_net(habitual_.critic_target(), root / "critic_target.net");
  if (cfg_.condition.controller != ControllerMode::Ddpg) {
    save_net(planning_.forward_net(), root / "forward.net");
    save_net(planning_.inverse_net(), root / "inverse.net");
  }

  std::ofstream f(root / "metadata.txt");
  if (!f) throw std::runtime_error("cannot write " + (root / "metadata.txt").string());
  const auto put = [&f](const std::string& key, const std::string& value) {
    f << key << '=' << value << '\n';
  };
  const auto put_d = [&put](const std::string& key, double v) {
    put(key, format_double(v));
  };
  put("target", target_mode_name(cfg_.condition.target));
  put("kinematics", kinematics_mode_name(cfg_.condition.kinematics));
  put("vision", vision_mode_name(cfg_.condition.vision));
  put("model", controller_name(cfg_.condition.controller));
  put("seed", std::to_string(seed_));
  put("episodes", std::to_string(cfg_.episodes));
  put("max_steps", std::to_string(cfg_.max_steps));
  put("babbling_episodes", std::to_string(cfg_.babbling_episodes));
  put("buffer_capacity", std::to_string(cfg_.buffer_capacity));
  put("batch_size", std::to_string(cfg_.batch_size));
  put_d("planning_time_factor", cfg_.planning_time_factor);
  put_d("rpe_threshold", cfg_.rpe_threshold);
  put("habitual_priority_steps", std::to_string(cfg_.habitual_priority_steps));
  put_d("ou_theta", cfg_.ou_theta);
  put_d("ou_mu", cfg_.ou_mu);
  put_d("ou_sigma", cfg_.ou_sigma);
  put("spac_trains_habitual", cfg_.spac_trains_habitual ? "1" : "0");
  put("babble_policy", babble_policy_name(cfg_.babble_policy));
  put("target_region", region_name(cfg_.target_region));
  put_d("gamma", cfg_.habitual.gamma);
  put_d("tau", cfg_.habitual.tau);
  put_d("actor_lr", cfg_.habitual.actor_lr);
  put_d("critic_lr", cfg_.habitual.critic_lr);
  put_d("habitual_weight_decay", cfg_.habitual.weight_decay);
  put("habitual_hidden1", std::to_string(cfg_.habitual.hidden1));
  put("habitual_hidden2", std::to_string(cfg_.habitual.hidden2));
  put_d("action_scale", cfg_.habitual.action_scale);
  put_d("position_scale", cfg_.habitual.position_scale);
  put("normalize_inputs", cfg_.habitual.normalize_inputs ? "1" : "0");
  put_d("forward_lr", cfg_.planning.forward_lr);
  put_d("inverse_lr", cfg_.planning.inverse_lr);
  put_d("planning_weight_decay", cfg_.planning.weight_decay);
  put("planning_hidden1", std::to_string(cfg_.planning.hidden1));
  put("planning_hidden2", std::to_string(cfg_.planning.hidden2));
  put_d("l1", env_.state().l1);
  put_d("l2", env_.state().l2);
  if (cfg_.condition.target == TargetMode::Static) {
    put_d("fixed_target_x", fixed_target_(0));
    put_d("fixed_target_y", fixed_target_(1));
  }
  if (!f) throw std::runtime_error("write failed: metadata");
}

void RunSession::load_checkpoints(const std::string& dir) {
  const fs::path root(dir);
  {
    auto f = open_net(root / "actor.net");
    habitual_.actor() = Mlp::load(f);
  }
  {
    auto f = open_net(root / "actor_target.net");
    habitual_.actor_target() = Mlp::load(f);
  }
  {
    auto f = open_net(root / "critic.net");
    habitual_.critic() = CriticNet::load(f);
  }
  {
    auto f = open_net(root / "critic_target.net");
    habitual_.critic_target() = CriticNet::load(f);
  }
  if (cfg_.condition.controller != ControllerMode::Ddpg) {
    {
      auto f = open_net(root / "forward.net");
      planning_.forward_net() = Mlp::load(f);
    }
    {
      auto f = open_net(root / "inverse.net");
      planning_.inverse_net() = Mlp::load(f);
    }
  }
}

RunSession RunSession::restore(const std::string& dir) {
  const fs::path root(dir);
  const Metadata meta = read_metadata(root / "metadata.txt");
  ExperimentConfig cfg;
  cfg.condition.target = parse_target_mode(meta_get(meta, "target"));
  cfg.condition.kinematics =
      parse_kinematics_mode(meta_get(meta, "kinematics"));
  cfg.condition.vision = parse_vision_mode(meta_get(meta, "vision"));
  cfg.condition.controller = parse_controller_mode(meta_get(meta, "model"));
  cfg.episodes = meta_int(meta, "episodes");
  cfg.max_steps = meta_int(meta, "max_steps");
  cfg.babbling_episodes = meta_int(meta, "babbling_episodes");
  cfg.buffer_capacity = meta_int(meta, "buffer_capacity");
  cfg.batch_size = meta_int(meta, "batch_size");
  cfg.planning_time_factor = meta_double(meta, "planning_time_factor");
  cfg.rpe_threshold = meta_double(meta, "rpe_threshold");
  cfg.habitual_priority_steps = meta_int(meta, "habitual_priority_steps");
  cfg.ou_theta = meta_double(meta, "ou_theta");
  cfg.ou_mu = meta_double(meta, "ou_mu");
  cfg.ou_sigma = meta_double(meta, "ou_sigma");
  cfg.spac_trains_habitual = meta_bool(meta, "spac_trains_habitual");
  cfg.babble_policy = parse_babble_policy(meta_get(meta, "babble_policy"));
  cfg.target_region = parse_region(meta_get(meta, "target_region"));
  cfg.habitual.gamma = meta_double(meta, "gamma");
  cfg.habitual.tau = meta_double(meta, "tau");
  cfg.habitual.actor_lr = meta_double(meta, "actor_lr");
  cfg.habitual.critic_lr = meta_double(meta, "critic_lr");
  cfg.habitual.weight_decay = meta_double(meta, "habitual_weight_decay");
  cfg.habitual.hidden1 = meta_int(meta, "habitual_hidden1");
  cfg.habitual.hidden2 = meta_int(meta, "habitual_hidden2");
  cfg.habitual.action_scale = meta_double(meta, "action_scale");
  cfg.habitual.position_scale = meta_double(meta, "position_scale");
  cfg.habitual.normalize_inputs = meta_bool(meta, "normalize_inputs");
  cfg.planning.forward_lr = meta_double(meta, "forward_lr");
  cfg.planning.inverse_lr = meta_double(meta, "inverse_lr");
  cfg.planning.weight_decay = meta_double(meta, "planning_weight_decay");
  cfg.planning.hidden1 = meta_int(meta, "planning_hidden1");
  cfg.planning.hidden2 = meta_int(meta, "planning_hidden2");
  cfg.planning.action_scale = cfg.habitual.action_scale;
  cfg.planning.position_scale = cfg.habitual.position_scale;
  cfg.planning.normalize_inputs = cfg.habitual.normalize_inputs;

  const uint64_t seed = std::stoull(meta_get(meta, "seed"));
  RunSession session(cfg, seed);
  if (cfg.condition.target == TargetMode::Static) {
    session.fixed_target_(0) = meta_double(meta, "fixed_target_x");
    session.fixed_target_(1) = meta_double(meta, "fixed_target_y");
  }
  session.load_checkpoints(dir);
  session.env_.set_segment_lengths(meta_double(meta, "l1"),
                                   meta_double(meta, "l2"));
  session.env_.freeze_kinematics();
  return session;
}

RunMetrics train_run(const ExperimentConfig& cfg, uint64_t seed) {
  cfg.validate();
  RunSession session(cfg, seed);
  RunMetrics metrics;
  metrics.training = session.train();
  metrics.test =
      session.evaluate(session.test_targets(), cfg.condition.vision);
  return metrics;
}

std::vector<GeneralizationResult> generalization_experiment(
    const ExperimentConfig& base, ControllerMode model,
    const std::vector<uint64_t>& seeds) {
  if (seeds.empty()) throw std::invalid_argument("no seeds");
  std::vector<GeneralizationResult> results;
  for (const TargetMode trained_with :
       {TargetMode::Static, TargetMode::Changing}) {
    GeneralizationResult g;
    g.model = controller_name(model);
    g.trained_with = trained_with;
    g.seeds = static_cast<int>(seeds.size());
    int successes = 0;
    int total = 0;
    double steps_sum = 0.0;
    for (const uint64_t seed : seeds) {
      ExperimentConfig cfg = base;
      cfg.condition.controller = model;
      cfg.condition.target = trained_with;
      cfg.target_region = Region::TrainTwoThirds;
      cfg.validate();
      RunSession session(cfg, seed);
      session.train();
      const ArmState& arm = session.env().state();
      const std::vector<Vector2d> held_out =
          held_out_target_grid(10, arm.l1, arm.l2, arm.origin);
      const TestSummary t =
          session.evaluate(held_out, cfg.condition.vision);
      g.targets_per_seed = static_cast<int>(held_out.size());
      for (const EpisodeRecord& r : t.episodes) {
        g.test_episodes.push_back(r);
        if (r.success) ++successes;
        steps_sum += r.steps;
        ++total;
      }
    }
    g.success_rate = successes / static_cast<double>(total);
    g.mean_steps = steps_sum / static_cast<double>(total);
    results.push_back(std::move(g));
  }
  return results;
}

}  // namespace apac
