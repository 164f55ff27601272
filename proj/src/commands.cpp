#include "atc/commands.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <openssl/evp.h>

#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <random>
#include <sstream>

#include "atc/errors.hpp"
#include "atc/network.hpp"
#include "atc/scenario_io.hpp"
#include "atc/trainer.hpp"

namespace atc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kEncoderWidth = 32;
constexpr int kHiddenWidth = 256;

std::string read_bytes(const fs::path& path, const std::string& what) {
  std::ifstream in(path, std::ios::binary);
  if (path.empty() || !in) throw IoError(what + " not found: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void close_output(std::ofstream& out, const fs::path& path) {
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

void write_json(const fs::path& path, const json& j) {
  auto out = open_output(path);
  out << j.dump(2) << "\n";
  close_output(out, path);
}

fs::path resolve_output_dir(const std::string& flag, const std::string& fallback) {
  fs::path dir;
  if (!flag.empty()) {
    dir = flag;
  } else if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') {
    dir = env;
  } else {
    dir = fs::path("runs") / fallback;
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

void require_path(const std::string& path, const std::string& flag) {
  if (path.empty()) throw ConfigError("usage: " + flag + " needs a non-empty path");
}

NetworkShape shape_for(const ScenarioConfig& scenario, int encoder, int hidden) {
  const ObservationLayout layout{scenario.n_closest};
  return NetworkShape{layout.own_width(), layout.local_width(), encoder, hidden, kActionCount};
}

// Network sized for the scenario's observations, hidden widths taken from the
// checkpoint. Mismatched observation widths surface as a CheckpointError
// naming the encoder layer.
ActorCritic load_policy(const fs::path& path, const ScenarioConfig& scenario) {
  const CheckpointContents contents = read_checkpoint(path);
  ActorCritic net(shape_for(scenario, contents.shape.encoder_width, contents.shape.hidden_width));
  load_checkpoint(path, net);
  return net;
}

std::string scenario_label(const ScenarioConfig& s) {
  std::string out;
  for (char c : s.name) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  return out.empty() ? "scenario" : out;
}

json shape_to_json(const NetworkShape& s) {
  return {{"own_width", s.own_width},
          {"local_width", s.local_width},
          {"encoder_width", s.encoder_width},
          {"hidden_width", s.hidden_width},
          {"actions", s.actions}};
}

// ---------------------------------------------------------------- train

struct TrainOptions {
  std::string scenario;
  std::string config;
  std::string out;
  std::string init_checkpoint;
  int checkpoint_every = 500;
  int log_every = 100;

  int episodes = 0;
  std::uint64_t seed = 0;
  double lr = 0.0, gamma = 0.0, clip_epsilon = 0.0, entropy_coef = 0.0, value_weight = 0.0, grad_clip = 0.0;
  std::string loss;
  int epochs = 0, minibatch = 0, parallel_envs = 0, eval_interval = 0, eval_episodes = 0;
  bool normalize_advantages = false;

  std::map<std::string, CLI::Option*> flags;
  bool given(const std::string& name) const {
    auto it = flags.find(name);
    return it != flags.end() && it->second->count() > 0;
  }
};

TrainerConfig resolve_trainer(const json& scenario_json, const TrainOptions& o) {
  TrainerConfig tc;
  if (scenario_json.contains("trainer")) tc = trainer_from_json(scenario_json.at("trainer"), tc);
  if (!o.config.empty()) {
    const json file = read_json_file(o.config, "config");
    tc = trainer_from_json(file.contains("trainer") ? file.at("trainer") : file, tc);
  }
  if (o.given("episodes")) tc.max_episodes = o.episodes;
  if (o.given("seed")) tc.seed = o.seed;
  if (o.given("lr")) tc.lr = o.lr;
  if (o.given("gamma")) tc.gamma = o.gamma;
  if (o.given("clip-epsilon")) tc.clip_epsilon = o.clip_epsilon;
  if (o.given("entropy-coef")) tc.entropy_coef = o.entropy_coef;
  if (o.given("value-weight")) tc.value_weight = o.value_weight;
  if (o.given("grad-clip")) tc.grad_clip = o.grad_clip;
  if (o.given("loss")) tc.loss = loss_variant_from_string(o.loss);
  if (o.given("epochs")) tc.epochs_per_update = o.epochs;
  if (o.given("minibatch")) tc.minibatch_size = o.minibatch;
  if (o.given("parallel-envs")) tc.parallel_envs = o.parallel_envs;
  if (o.given("eval-interval")) tc.eval_interval = o.eval_interval;
  if (o.given("eval-episodes")) tc.eval_episodes = o.eval_episodes;
  if (o.given("normalize-advantages")) tc.normalize_advantages = o.normalize_advantages;
  tc.validate();
  return tc;
}

int cmd_train(const TrainOptions& o, std::ostream& out) {
  require_path(o.scenario, "--scenario");
  if (o.checkpoint_every < 0) throw ConfigError("field 'checkpoint_every' must be >= 0");
  if (o.log_every < 0) throw ConfigError("field 'log_every' must be >= 0");
  const std::string scenario_bytes = read_bytes(o.scenario, "scenario");
  json scenario_json;
  try {
    scenario_json = json::parse(scenario_bytes);
  } catch (const json::parse_error& e) {
    throw ConfigError("scenario " + o.scenario + " is not valid JSON: " + e.what());
  }
  const ScenarioConfig scenario = scenario_from_json(scenario_json);
  const TrainerConfig tc = resolve_trainer(scenario_json, o);
  const fs::path dir = resolve_output_dir(o.out, scenario_label(scenario));
  fs::create_directories(dir / "checkpoints");

  const NetworkShape shape = shape_for(scenario, kEncoderWidth, kHiddenWidth);
  ActorCritic net(shape);
  net.initialize(derive_seed(tc.seed, 5, 0));
  Adam optimizer(shape, AdamConfig{tc.lr});
  if (!o.init_checkpoint.empty()) {
    load_checkpoint(o.init_checkpoint, net, &optimizer);
    optimizer.set_lr(tc.lr);
  }

  json manifest = {
      {"format_version", kManifestFormatVersion},
      {"command", "train"},
      {"scenario",
       {{"path", fs::path(o.scenario).filename().string()},
        {"sha1", git_blob_sha1(scenario_bytes)},
        {"resolved", scenario_to_json(scenario)}}},
      {"trainer", trainer_to_json(tc)},
      {"network", shape_to_json(shape)},
      {"init_checkpoint",
       o.init_checkpoint.empty() ? json(nullptr) : json(git_blob_sha1(read_bytes(o.init_checkpoint, "checkpoint")))},
      {"seeds",
       {{"base", tc.seed},
        {"init", derive_seed(tc.seed, 5, 0)},
        {"streams", {{"env_train", 0}, {"policy_train", 1}, {"env_eval", 2}, {"policy_eval", 3}, {"minibatch", 4}}}}},
      {"checkpoint_every", o.checkpoint_every},
      {"formats",
       {{"curve", kCurveFormatVersion},
        {"timing", kTimingFormatVersion},
        {"eval", kEvalFormatVersion},
        {"checkpoint", kCheckpointVersion},
        {"scenario", kScenarioFormatVersion},
        {"trace", kTraceFormatVersion}}}};
  write_json(dir / "manifest.json", manifest);

  const fs::path curve_path = dir / "curve.csv";
  const fs::path timing_path = dir / "timing.csv";
  const fs::path eval_path = dir / "eval_during_training.csv";
  auto curve = open_output(curve_path);
  auto timing = open_output(timing_path);
  curve << "# atcmarl-curve v" << kCurveFormatVersion << "\n"
        << "episode,score,goals,conflicts,mean_reward,actor_loss,critic_loss,entropy,length\n";
  timing << "# atcmarl-timing v" << kTimingFormatVersion << "\n" << "episode,wall_seconds\n";
  std::ofstream eval_csv;
  if (tc.eval_interval > 0) {
    eval_csv = open_output(eval_path);
    eval_csv << "# atcmarl-eval-curve v" << kEvalFormatVersion << "\n"
             << "episode,mean,stddev,median,resolution_rate\n";
  }

  Trainer trainer(tc, net, optimizer);
  std::vector<Environment> envs(static_cast<std::size_t>(tc.parallel_envs), Environment(scenario));
  double window_goals = 0.0;
  int window = 0;
  for (int e = 1; e <= tc.max_episodes; ++e) {
    const EpisodeMetrics m = trainer.train_episode(envs);
    curve << fmt::format("{},{},{},{},{},{},{},{},{}\n", m.episode, m.score, m.goals, m.conflicts, m.mean_reward,
                         m.actor_loss, m.critic_loss, m.entropy, m.length);
    timing << fmt::format("{},{:.6f}\n", m.episode, m.wall_seconds);
    window_goals += m.goals;
    ++window;
    if (o.log_every > 0 && (e % o.log_every == 0 || e == tc.max_episodes)) {
      out << fmt::format("episode {}/{}  goals {:.2f}/{}  entropy {:.3f}  critic {:.3f}\n", e, tc.max_episodes,
                         window_goals / window, scenario.max_aircraft, m.entropy, m.critic_loss);
      out.flush();
      curve.flush();
      window_goals = 0.0;
      window = 0;
    }
    if (tc.eval_interval > 0 && e % tc.eval_interval == 0) {
      const EvalStats s = evaluate(scenario, net, tc.eval_episodes, ActionSelection::Sample, tc.seed);
      eval_csv << fmt::format("{},{},{},{},{}\n", e, s.mean, s.stddev, s.median, s.resolution_rate);
      eval_csv.flush();
    }
    if (o.checkpoint_every > 0 && e % o.checkpoint_every == 0 && e != tc.max_episodes) {
      save_checkpoint(dir / "checkpoints" / fmt::format("episode_{:06d}.ckpt", e), net, &optimizer);
    }
  }
  close_output(curve, curve_path);
  close_output(timing, timing_path);
  if (eval_csv.is_open()) close_output(eval_csv, eval_path);
  const fs::path final_path = dir / "final.ckpt";
  save_checkpoint(final_path, net, &optimizer);
  out << "wrote " << curve_path.string() << " and " << final_path.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- eval

struct EvalOptions {
  std::string scenario;
  std::string checkpoint;
  std::string out;
  int episodes = 200;
  std::uint64_t seed = 0;
  std::string mode = "sample";
};

int cmd_eval(const EvalOptions& o, std::ostream& out) {
  require_path(o.scenario, "--scenario");
  require_path(o.checkpoint, "--checkpoint");
  if (o.episodes < 1) throw ConfigError("field 'episodes' must be >= 1");
  const ActionSelection mode = action_selection_from_string(o.mode);
  const std::string scenario_bytes = read_bytes(o.scenario, "scenario");
  const ScenarioConfig scenario = load_scenario(o.scenario);
  const ActorCritic net = load_policy(o.checkpoint, scenario);
  const EvalStats s = evaluate(scenario, net, o.episodes, mode, o.seed);

  const fs::path dir = resolve_output_dir(o.out, scenario_label(scenario));
  const fs::path csv_path = dir / "eval_scores.csv";
  auto csv = open_output(csv_path);
  csv << "# atcmarl-eval v" << kEvalFormatVersion << "\n" << "episode,score\n";
  for (std::size_t k = 0; k < s.scores.size(); ++k) csv << (k + 1) << "," << s.scores[k] << "\n";
  close_output(csv, csv_path);
  const json report = {{"format_version", kEvalFormatVersion},
                       {"scenario", {{"path", fs::path(o.scenario).filename().string()},
                                     {"sha1", git_blob_sha1(scenario_bytes)}}},
                       {"checkpoint_sha1", git_blob_sha1(read_bytes(o.checkpoint, "checkpoint"))},
                       {"episodes", s.episodes},
                       {"seed", o.seed},
                       {"mode", to_string(mode)},
                       {"max_aircraft", scenario.max_aircraft},
                       {"mean", s.mean},
                       {"stddev", s.stddev},
                       {"median", s.median},
                       {"resolution_rate", s.resolution_rate}};
  write_json(dir / "eval_report.json", report);

  out << fmt::format("episodes {}  mode {}\n", s.episodes, to_string(mode));
  out << fmt::format("score mean {:.3f} +/- {:.3f}  median {}  (max {})\n", s.mean, s.stddev, s.median,
                     scenario.max_aircraft);
  out << fmt::format("conflict-free exits {:.1f}%\n", 100.0 * s.resolution_rate);
  return kExitOk;
}

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
  std::string scenario;
  std::string policy = "hold";
  std::string checkpoint;
  std::string trace;
  std::string out;
  std::string mode = "greedy";
  std::uint64_t seed = 0;
};

int cmd_simulate(const SimulateOptions& o, std::ostream& out) {
  require_path(o.scenario, "--scenario");
  bool known = false;
  std::string options;
  for (std::string_view p : kSimulatePolicies) {
    known = known || p == o.policy;
    options += (options.empty() ? "" : ", ") + std::string(p);
  }
  if (!known) throw ConfigError("unknown policy '" + o.policy + "' (valid: " + options + ")");
  const ScenarioConfig scenario = load_scenario(o.scenario);
  Environment env(scenario);
  env.record_trace(true);
  const std::uint64_t env_seed = derive_seed(o.seed, 2, 0);

  if (o.policy == "checkpoint") {
    require_path(o.checkpoint, "--checkpoint");
    const ActorCritic net = load_policy(o.checkpoint, scenario);
    run_episode(env, net, env_seed, derive_seed(o.seed, 3, 0), action_selection_from_string(o.mode), false);
  } else if (o.policy == "random") {
    std::mt19937_64 rng(derive_seed(o.seed, 3, 0));
    std::uniform_int_distribution<int> pick(0, kActionCount - 1);
    run_scripted_episode(env, env_seed, [&](const AgentObservation&) { return action_from_index(pick(rng)); });
  } else {
    const Action fixed = o.policy == "hold"    ? Action::Hold
                         : o.policy == "accel" ? Action::Accelerate
                                               : Action::Decelerate;
    run_scripted_episode(env, env_seed, [fixed](const AgentObservation&) { return fixed; });
  }

  fs::path trace_path = o.trace;
  if (trace_path.empty()) trace_path = resolve_output_dir(o.out, scenario_label(scenario)) / "trace.csv";
  auto trace = open_output(trace_path);
  write_trace_csv(trace, env.trace());
  close_output(trace, trace_path);

  int conflicted = 0;
  for (const AircraftState& a : env.aircraft()) conflicted += a.ever_in_conflict ? 1 : 0;
  out << fmt::format("policy {}  aircraft {}  goals {}  in conflict {}  epochs {}  delayed spawns {}\n", o.policy,
                     env.aircraft().size(), env.episode_score(), conflicted, env.steps(),
                     env.delayed_spawn_count());
  out << "wrote " << trace_path.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- inspect

void inspect_scenario(const fs::path& path, std::ostream& out) {
  const ScenarioConfig s = load_scenario(path);
  const SectorLayout& layout = *s.layout;
  out << fmt::format("scenario {} (format v{})\n", s.name, kScenarioFormatVersion);
  out << fmt::format("{} routes, {} crossings, {} merge points, conflict graph {}\n", layout.route_count(),
                     layout.crossings().size(), layout.merge_points().size(), conflict_graph(s));
  for (const Route& r : layout.routes()) {
    out << fmt::format("  {:<4} length {:.3f} nmi, {} waypoints\n", s.route_name(r.id()), r.length(),
                       r.waypoints().size());
  }
  for (const CrossingPoint& c : layout.crossings()) {
    const Point p = layout.position(c.routes[0], c.arc_positions[0]);
    out << fmt::format("  crossing {}@{:.3f} x {}@{:.3f} at ({:.3f}, {:.3f})\n", s.route_name(c.routes[0]),
                       c.arc_positions[0], s.route_name(c.routes[1]), c.arc_positions[1], p.x, p.y);
  }
  for (const MergePoint& m : layout.merge_points()) {
    std::string ups;
    for (std::size_t k = 0; k < m.upstream_routes.size(); ++k) {
      ups += fmt::format("{}{}@{:.3f}", k ? ", " : "", s.route_name(m.upstream_routes[k]), m.arc_positions[k]);
    }
    const Point p = m.shared_segment.front();
    out << fmt::format("  merge {} at ({:.3f}, {:.3f})\n", ups, p.x, p.y);
  }
  std::string arrivals;
  if (s.arrival_mode == ArrivalMode::DiscreteSet) {
    for (double c : s.inter_arrival_choices) arrivals += fmt::format("{}{}", arrivals.empty() ? "" : ",", c);
    arrivals = "{" + arrivals + "} s";
  } else {
    arrivals = fmt::format("[{}, {}] s", s.inter_arrival_min, s.inter_arrival_max);
  }
  out << fmt::format("max aircraft {}, inter-arrival {}, n_closest {}, observation width {}\n", s.max_aircraft,
                     arrivals, s.n_closest, ObservationLayout{s.n_closest}.size());
}

void inspect_checkpoint(const fs::path& path, std::ostream& out) {
  const CheckpointContents c = read_checkpoint(path);
  out << fmt::format("checkpoint v{}, optimizer state {}\n", c.version,
                     c.has_optimizer ? fmt::format("present (step {})", c.adam_steps) : std::string("absent"));
  std::size_t total = 0;
  for (const DenseLayer& l : c.params.layers) {
    out << fmt::format("  {:<12} {:>4} -> {:<4} {:>8} parameters\n", l.name, l.in, l.out, l.parameter_count());
    total += l.parameter_count();
  }
  out << fmt::format("total {} parameters\n", total);
}

int cmd_inspect(const std::string& path, std::ostream& out) {
  require_path(path, "inspect");
  const std::string bytes = read_bytes(path, "file");
  if (bytes.rfind("ATCNET", 0) == 0) {
    inspect_checkpoint(path, out);
  } else {
    inspect_scenario(path, out);
  }
  return kExitOk;
}

}  // namespace

std::string git_blob_sha1(std::string_view content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), header.data(), header.size()) != 1 ||
      EVP_DigestUpdate(ctx.get(), content.data(), content.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw IoError("SHA-1 computation failed");
  }
  std::string hex;
  for (unsigned int k = 0; k < len; ++k) hex += fmt::format("{:02x}", digest[k]);
  return hex;
}

std::string conflict_graph(const ScenarioConfig& scenario) {
  const SectorLayout& layout = *scenario.layout;
  std::string edges;
  const auto n = static_cast<RouteId>(layout.route_count());
  for (RouteId a = 0; a < n; ++a) {
    for (RouteId b = a + 1; b < n; ++b) {
      if (!layout.routes_conflict(a, b)) continue;
      edges += (edges.empty() ? "" : ", ") + scenario.route_name(a) + "-" + scenario.route_name(b);
    }
  }
  return "{" + edges + "}";
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-agent speed-advisory training for en-route sectors"};
  app.name("atcmarl");
  app.require_subcommand(1);

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "train the shared policy on a scenario");
  train_cmd->add_option("--scenario,-s", train.scenario, "scenario JSON file")->required();
  train_cmd->add_option("--config,-c", train.config, "trainer JSON (overrides the scenario's trainer section)");
  train_cmd->add_option("--out,-o", train.out, std::string("output directory (default $") + kOutputDirEnv +
                                                   " or runs/<scenario>)");
  train_cmd->add_option("--init-checkpoint", train.init_checkpoint, "start from this checkpoint");
  train_cmd->add_option("--checkpoint-every", train.checkpoint_every, "periodic checkpoint cadence, 0 disables")
      ->capture_default_str();
  train_cmd->add_option("--log-every", train.log_every, "progress line cadence, 0 silences")->capture_default_str();
  train.flags["episodes"] = train_cmd->add_option("--episodes,-n", train.episodes, "training episodes");
  train.flags["seed"] = train_cmd->add_option("--seed", train.seed, "base seed");
  train.flags["lr"] = train_cmd->add_option("--lr", train.lr, "Adam learning rate");
  train.flags["gamma"] = train_cmd->add_option("--gamma", train.gamma, "discount factor");
  train.flags["clip-epsilon"] = train_cmd->add_option("--clip-epsilon", train.clip_epsilon, "PPO clip range");
  train.flags["entropy-coef"] = train_cmd->add_option("--entropy-coef", train.entropy_coef, "entropy bonus");
  train.flags["value-weight"] = train_cmd->add_option("--value-weight", train.value_weight, "critic loss weight");
  train.flags["grad-clip"] = train_cmd->add_option("--grad-clip", train.grad_clip, "gradient-norm clip");
  train.flags["loss"] = train_cmd->add_option("--loss", train.loss, "ppo or a2c");
  train.flags["epochs"] = train_cmd->add_option("--epochs", train.epochs, "passes over each episode buffer");
  train.flags["minibatch"] = train_cmd->add_option("--minibatch", train.minibatch, "minibatch size, 0 = whole buffer");
  train.flags["parallel-envs"] = train_cmd->add_option("--parallel-envs", train.parallel_envs, "rollouts per update");
  train.flags["eval-interval"] = train_cmd->add_option("--eval-interval", train.eval_interval, "episodes between evals");
  train.flags["eval-episodes"] = train_cmd->add_option("--eval-episodes", train.eval_episodes, "episodes per eval");
  train.flags["normalize-advantages"] =
      train_cmd->add_option("--normalize-advantages", train.normalize_advantages, "true or false");

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--scenario,-s", eval.scenario, "scenario JSON file")->required();
  eval_cmd->add_option("--checkpoint,-k", eval.checkpoint, "checkpoint file")->required();
  eval_cmd->add_option("--episodes,-n", eval.episodes, "evaluation episodes")->capture_default_str();
  eval_cmd->add_option("--seed", eval.seed, "evaluation seed")->capture_default_str();
  eval_cmd->add_option("--mode", eval.mode, "sample or greedy")->capture_default_str();
  eval_cmd->add_option("--out,-o", eval.out, "output directory");

  SimulateOptions sim;
  auto* sim_cmd = app.add_subcommand("simulate", "roll out one episode and write its trace");
  sim_cmd->add_option("--scenario,-s", sim.scenario, "scenario JSON file")->required();
  sim_cmd->add_option("--policy,-p", sim.policy, "checkpoint, hold, accel, decel or random")->capture_default_str();
  sim_cmd->add_option("--checkpoint,-k", sim.checkpoint, "checkpoint for --policy checkpoint");
  sim_cmd->add_option("--mode", sim.mode, "sample or greedy (checkpoint policy)")->capture_default_str();
  sim_cmd->add_option("--seed", sim.seed, "episode seed")->capture_default_str();
  sim_cmd->add_option("--trace,-t", sim.trace, "trace CSV path (default <out>/trace.csv)");
  sim_cmd->add_option("--out,-o", sim.out, "output directory");

  std::string inspect_path;
  auto* inspect_cmd = app.add_subcommand("inspect", "summarize a scenario or checkpoint");
  inspect_cmd->add_option("path", inspect_path, "scenario JSON or checkpoint file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*train_cmd) return cmd_train(train, out);
    if (*eval_cmd) return cmd_eval(eval, out);
    if (*sim_cmd) return cmd_simulate(sim, out);
    return cmd_inspect(inspect_path, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const CheckpointError& e) {
    err << "checkpoint error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"atcmarl"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace atc::cli
