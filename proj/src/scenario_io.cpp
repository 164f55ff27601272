#include "atc/scenario_io.hpp"

#include <fstream>

#include "atc/errors.hpp"

namespace atc {

using nlohmann::json;

namespace {

template <typename T>
T field(const json& j, const char* name, T fallback) {
  if (!j.contains(name)) return fallback;
  try {
    return j.at(name).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("field '") + name + "': " + e.what());
  }
}

Point point_from(const json& p, const std::string& where) {
  if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
    throw ConfigError("field '" + where + "': expected [x, y]");
  }
  return {p[0].get<double>(), p[1].get<double>()};
}

std::vector<Point> points_from(const json& arr, const std::string& where) {
  if (!arr.is_array()) throw ConfigError("field '" + where + "': expected a list of points");
  std::vector<Point> pts;
  for (const json& p : arr) pts.push_back(point_from(p, where));
  return pts;
}

json points_to(const std::vector<Point>& pts) {
  json arr = json::array();
  for (const Point& p : pts) arr.push_back({p.x, p.y});
  return arr;
}

}  // namespace

ScenarioConfig scenario_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("scenario: expected a JSON object");
  const int version = field<int>(j, "format_version", kScenarioFormatVersion);
  if (version != kScenarioFormatVersion) {
    throw ConfigError("field 'format_version': unsupported version " + std::to_string(version));
  }
  if (!j.contains("routes")) throw ConfigError("field 'routes': missing");

  std::vector<Route> routes;
  std::vector<std::string> names;
  std::vector<CrossingPoint> crossings;
  std::vector<MergePoint> merges;
  try {
    for (const json& r : j.at("routes")) {
      const int id = field<int>(r, "id", static_cast<int>(routes.size()));
      routes.emplace_back(id, points_from(r.value("waypoints", json::array()),
                                          "routes[" + std::to_string(id) + "].waypoints"));
      names.push_back(field<std::string>(r, "name", ""));
    }
    for (const json& c : j.value("crossings", json::array())) {
      const auto ids = field<std::vector<int>>(c, "routes", {});
      const auto arcs = field<std::vector<double>>(c, "arc_positions", {});
      if (ids.size() != 2 || arcs.size() != 2) {
        throw ConfigError("field 'crossings': each entry needs 2 routes and 2 arc_positions");
      }
      CrossingPoint cp;
      cp.routes[0] = ids[0];
      cp.routes[1] = ids[1];
      cp.arc_positions[0] = arcs[0];
      cp.arc_positions[1] = arcs[1];
      crossings.push_back(cp);
    }
    for (const json& m : j.value("merge_points", json::array())) {
      MergePoint mp;
      mp.upstream_routes = field<std::vector<int>>(m, "upstream_routes", {});
      mp.arc_positions = field<std::vector<double>>(m, "arc_positions", {});
      mp.shared_segment = points_from(m.value("shared_segment", json::array()), "merge_points.shared_segment");
      merges.push_back(std::move(mp));
    }
  } catch (const ContractError& e) {
    throw ConfigError(std::string("field 'routes'/'crossings'/'merge_points': ") + e.what());
  } catch (const LookupError& e) {
    throw ConfigError(std::string("field 'crossings'/'merge_points': ") + e.what());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("field 'routes': ") + e.what());
  }

  ScenarioConfig cfg;
  cfg.name = field<std::string>(j, "name", cfg.name);
  cfg.route_names.resize(routes.size());
  for (std::size_t k = 0; k < routes.size(); ++k) {
    const auto id = static_cast<std::size_t>(routes[k].id());
    if (id < cfg.route_names.size()) cfg.route_names[id] = names[k];
  }
  try {
    cfg.layout = std::make_shared<const SectorLayout>(std::move(routes), std::move(crossings), std::move(merges));
  } catch (const ContractError& e) {
    throw ConfigError(std::string("field 'routes'/'crossings'/'merge_points': ") + e.what());
  } catch (const LookupError& e) {
    throw ConfigError(std::string("field 'crossings'/'merge_points': ") + e.what());
  }

  cfg.max_aircraft = field<int>(j, "max_aircraft", cfg.max_aircraft);
  if (j.contains("arrivals")) {
    const json& a = j.at("arrivals");
    const auto mode = field<std::string>(a, "mode", "discrete");
    if (mode == "discrete") {
      cfg.arrival_mode = ArrivalMode::DiscreteSet;
    } else if (mode == "continuous") {
      cfg.arrival_mode = ArrivalMode::ContinuousRange;
    } else {
      throw ConfigError("field 'arrivals.mode': expected 'discrete' or 'continuous'");
    }
    cfg.inter_arrival_choices = field<std::vector<double>>(a, "choices", cfg.inter_arrival_choices);
    cfg.inter_arrival_min = field<double>(a, "min", cfg.inter_arrival_min);
    cfg.inter_arrival_max = field<double>(a, "max", cfg.inter_arrival_max);
  }
  cfg.n_closest = field<int>(j, "n_closest", cfg.n_closest);
  cfg.los_nmi = field<double>(j, "los_nmi", cfg.los_nmi);
  cfg.alert_nmi = field<double>(j, "alert_nmi", cfg.alert_nmi);
  cfg.alpha = field<double>(j, "alpha", cfg.alpha);
  cfg.beta_reward = field<double>(j, "beta_reward", cfg.beta_reward);
  cfg.dt = field<double>(j, "dt", cfg.dt);
  cfg.sub_step = field<double>(j, "sub_step", cfg.sub_step);
  cfg.check_substeps = field<bool>(j, "check_substeps", cfg.check_substeps);
  if (j.contains("envelope")) {
    const json& e = j.at("envelope");
    cfg.envelope.v_min = field<double>(e, "v_min", cfg.envelope.v_min);
    cfg.envelope.v_max = field<double>(e, "v_max", cfg.envelope.v_max);
    cfg.envelope.accel = field<double>(e, "accel", cfg.envelope.accel);
    cfg.envelope.entry_speed = field<double>(e, "entry_speed", cfg.envelope.entry_speed);
  }
  cfg.rng_seed = field<std::uint64_t>(j, "rng_seed", cfg.rng_seed);
  cfg.validate();
  return cfg;
}

json scenario_to_json(const ScenarioConfig& cfg) {
  json j;
  j["format_version"] = kScenarioFormatVersion;
  j["name"] = cfg.name;
  json routes = json::array();
  for (const Route& r : cfg.layout->routes()) {
    routes.push_back({{"id", r.id()}, {"name", cfg.route_name(r.id())}, {"waypoints", points_to(r.waypoints())}});
  }
  j["routes"] = routes;
  json crossings = json::array();
  for (const CrossingPoint& c : cfg.layout->crossings()) {
    crossings.push_back({{"routes", {c.routes[0], c.routes[1]}},
                         {"arc_positions", {c.arc_positions[0], c.arc_positions[1]}}});
  }
  j["crossings"] = crossings;
  json merges = json::array();
  for (const MergePoint& m : cfg.layout->merge_points()) {
    merges.push_back({{"upstream_routes", m.upstream_routes},
                      {"arc_positions", m.arc_positions},
                      {"shared_segment", points_to(m.shared_segment)}});
  }
  j["merge_points"] = merges;
  j["max_aircraft"] = cfg.max_aircraft;
  j["arrivals"] = {{"mode", cfg.arrival_mode == ArrivalMode::DiscreteSet ? "discrete" : "continuous"},
                   {"choices", cfg.inter_arrival_choices},
                   {"min", cfg.inter_arrival_min},
                   {"max", cfg.inter_arrival_max}};
  j["n_closest"] = cfg.n_closest;
  j["los_nmi"] = cfg.los_nmi;
  j["alert_nmi"] = cfg.alert_nmi;
  j["alpha"] = cfg.alpha;
  j["beta_reward"] = cfg.beta_reward;
  j["dt"] = cfg.dt;
  j["sub_step"] = cfg.sub_step;
  j["check_substeps"] = cfg.check_substeps;
  j["envelope"] = {{"v_min", cfg.envelope.v_min},
                   {"v_max", cfg.envelope.v_max},
                   {"accel", cfg.envelope.accel},
                   {"entry_speed", cfg.envelope.entry_speed}};
  j["rng_seed"] = cfg.rng_seed;
  return j;
}

json read_json_file(const std::filesystem::path& path, const std::string& what) {
  std::ifstream in(path);
  if (path.empty() || !in) throw IoError(what + " not found: " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(what + " " + path.string() + " is not valid JSON: " + e.what());
  }
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  return scenario_from_json(read_json_file(path, "scenario"));
}

std::string to_string(LossVariant v) { return v == LossVariant::PPO ? "ppo" : "a2c"; }

LossVariant loss_variant_from_string(const std::string& s) {
  if (s == "ppo") return LossVariant::PPO;
  if (s == "a2c") return LossVariant::A2C;
  throw ConfigError("field 'loss': expected 'ppo' or 'a2c', got '" + s + "'");
}

std::string to_string(ActionSelection m) { return m == ActionSelection::Sample ? "sample" : "greedy"; }

ActionSelection action_selection_from_string(const std::string& s) {
  if (s == "sample") return ActionSelection::Sample;
  if (s == "greedy") return ActionSelection::Greedy;
  throw ConfigError("field 'action_selection': expected 'sample' or 'greedy', got '" + s + "'");
}

TrainerConfig trainer_from_json(const json& j, TrainerConfig c) {
  if (!j.is_object()) throw ConfigError("field 'trainer': expected an object");
  c.gamma = field<double>(j, "gamma", c.gamma);
  c.clip_epsilon = field<double>(j, "clip_epsilon", c.clip_epsilon);
  c.entropy_coef = field<double>(j, "entropy_coef", c.entropy_coef);
  c.value_weight = field<double>(j, "value_weight", c.value_weight);
  if (j.contains("loss")) c.loss = loss_variant_from_string(field<std::string>(j, "loss", "ppo"));
  c.epochs_per_update = field<int>(j, "epochs_per_update", c.epochs_per_update);
  c.minibatch_size = field<int>(j, "minibatch_size", c.minibatch_size);
  c.lr = field<double>(j, "lr", c.lr);
  c.max_episodes = field<int>(j, "episodes", c.max_episodes);
  c.eval_interval = field<int>(j, "eval_interval", c.eval_interval);
  c.eval_episodes = field<int>(j, "eval_episodes", c.eval_episodes);
  c.grad_clip = field<double>(j, "grad_clip", c.grad_clip);
  c.normalize_advantages = field<bool>(j, "normalize_advantages", c.normalize_advantages);
  c.parallel_envs = field<int>(j, "parallel_envs", c.parallel_envs);
  c.seed = field<std::uint64_t>(j, "seed", c.seed);
  return c;
}

json trainer_to_json(const TrainerConfig& c) {
  return {{"gamma", c.gamma},
          {"clip_epsilon", c.clip_epsilon},
          {"entropy_coef", c.entropy_coef},
          {"value_weight", c.value_weight},
          {"loss", to_string(c.loss)},
          {"epochs_per_update", c.epochs_per_update},
          {"minibatch_size", c.minibatch_size},
          {"lr", c.lr},
          {"episodes", c.max_episodes},
          {"eval_interval", c.eval_interval},
          {"eval_episodes", c.eval_episodes},
          {"grad_clip", c.grad_clip},
          {"normalize_advantages", c.normalize_advantages},
          {"parallel_envs", c.parallel_envs},
          {"seed", c.seed}};
}

}  // namespace atc
