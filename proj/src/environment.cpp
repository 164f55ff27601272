#include "atc/environment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "atc/errors.hpp"

namespace atc {

std::string ScenarioConfig::route_name(RouteId id) const {
  const auto k = static_cast<std::size_t>(id);
  if (k < route_names.size() && !route_names[k].empty()) return route_names[k];
  return "R" + std::to_string(id + 1);
}

void ScenarioConfig::validate() const {
  if (!layout) throw ConfigError("layout: missing");
  if (max_aircraft < 0) throw ConfigError("max_aircraft must be >= 0");
  if (n_closest < 1) throw ConfigError("n_closest must be >= 1");
  if (!(los_nmi > 0.0)) throw ConfigError("los_nmi must be > 0");
  if (!(los_nmi < alert_nmi)) throw ConfigError("alert_nmi must exceed los_nmi");
  if (!(alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
  if (!(beta_reward >= 0.0)) throw ConfigError("beta_reward must be >= 0");
  if (!(dt > 0.0)) throw ConfigError("dt must be > 0");
  if (!(sub_step > 0.0) || sub_step > dt) throw ConfigError("sub_step must lie in (0, dt]");
  const double ratio = dt / sub_step;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
    throw ConfigError("sub_step must divide dt");
  }
  if (arrival_mode == ArrivalMode::DiscreteSet) {
    if (inter_arrival_choices.empty()) throw ConfigError("inter_arrival_choices must be non-empty");
    for (double g : inter_arrival_choices) {
      if (!(g > 0.0)) throw ConfigError("inter_arrival_choices entries must be > 0");
    }
  } else if (!(inter_arrival_min > 0.0 && inter_arrival_max >= inter_arrival_min)) {
    throw ConfigError("inter_arrival_min/max must satisfy 0 < min <= max");
  }
  if (layout->route_count() > static_cast<std::size_t>(ObservationLayout::kRouteSlots)) {
    throw ConfigError("layout: at most " + std::to_string(ObservationLayout::kRouteSlots) +
                      " routes are supported by the observation encoding");
  }
  envelope.validate();
}

std::vector<ArrivalEvent> draw_arrival_schedule(const ScenarioConfig& config, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto routes = static_cast<int>(config.layout->route_count());
  std::vector<double> next_time(static_cast<std::size_t>(routes), 0.0);
  std::vector<bool> first(static_cast<std::size_t>(routes), true);
  std::vector<ArrivalEvent> events;
  events.reserve(static_cast<std::size_t>(config.max_aircraft));

  auto draw_gap = [&]() {
    if (config.arrival_mode == ArrivalMode::DiscreteSet) {
      std::uniform_int_distribution<std::size_t> pick(0, config.inter_arrival_choices.size() - 1);
      return config.inter_arrival_choices[pick(rng)];
    }
    std::uniform_real_distribution<double> gap(config.inter_arrival_min, config.inter_arrival_max);
    return gap(rng);
  };

  for (int k = 0; k < config.max_aircraft; ++k) {
    const auto r = static_cast<std::size_t>(k % routes);
    if (!first[r]) next_time[r] += draw_gap();
    first[r] = false;
    events.push_back({k, static_cast<RouteId>(r), next_time[r]});
  }
  std::stable_sort(events.begin(), events.end(), [](const ArrivalEvent& a, const ArrivalEvent& b) {
    return a.time < b.time;
  });
  return events;
}

std::vector<AircraftState> neighbor_filter(const AircraftState& ownship,
                                           std::span<const AircraftState> all_active,
                                           const SectorLayout& layout) {
  std::vector<AircraftState> out;
  for (const AircraftState& other : all_active) {
    if (!other.active || other.id == ownship.id) continue;
    if (other.route == ownship.route) {
      out.push_back(other);
      continue;
    }
    if (!layout.routes_conflict(ownship.route, other.route)) continue;
    bool relevant = false;
    for (const SharedPoint& sp : layout.shared_points(ownship.route, other.route)) {
      // Past a merge the intruder flies ownship's downstream segment.
      if (sp.kind == SharedPointKind::Merge || other.arc_pos <= sp.arc_on_other) {
        relevant = true;
        break;
      }
    }
    if (relevant) out.push_back(other);
  }
  return out;
}

std::vector<double> aircraft_features(const AircraftState& a, const ScenarioConfig& config) {
  const SectorLayout& layout = *config.layout;
  const Route& route = layout.route(a.route);
  const double scale = layout.max_route_length();
  const SpeedEnvelope& env = config.envelope;
  const double arc = std::clamp(a.arc_pos, 0.0, route.length());

  std::vector<double> f(ObservationLayout::kAircraftBlock, 0.0);
  f[0] = route.distance_to_goal(arc) / scale;
  f[1] = 2.0 * (a.speed - env.v_min) / (env.v_max - env.v_min) - 1.0;
  f[2] = a.acceleration / env.accel;
  const auto next = layout.next_intersection_distance(a.route, arc);
  f[3] = next ? next->distance / scale : kNoIntersectionFeature;
  f[4 + static_cast<std::size_t>(a.route)] = 1.0;
  f[4 + ObservationLayout::kRouteSlots] = 0.5 * config.los_nmi / config.alert_nmi;
  return f;
}

namespace {

Point position_of(const AircraftState& a, const SectorLayout& layout) {
  const Route& r = layout.route(a.route);
  return r.position_at(std::clamp(a.arc_pos, 0.0, r.length()));
}

}  // namespace

std::vector<double> build_observation(const AircraftState& ownship,
                                      std::span<const AircraftState> eligible,
                                      const ScenarioConfig& config) {
  const SectorLayout& layout = *config.layout;
  const ObservationLayout shape{config.n_closest};
  const Point own_pos = position_of(ownship, layout);

  struct Candidate {
    double separation;
    AircraftId id;
    const AircraftState* state;
  };
  std::vector<Candidate> candidates;
  candidates.reserve(eligible.size());
  for (const AircraftState& a : eligible) {
    candidates.push_back({euclidean_separation(own_pos, position_of(a, layout)), a.id, &a});
  }
  const auto take = std::min<std::size_t>(candidates.size(), static_cast<std::size_t>(shape.n_closest));
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take),
                    candidates.end(), [](const Candidate& a, const Candidate& b) {
                      return a.separation < b.separation ||
                             (a.separation == b.separation && a.id < b.id);
                    });

  std::vector<double> obs;
  obs.reserve(static_cast<std::size_t>(shape.size()));
  const auto own = aircraft_features(ownship, config);
  obs.insert(obs.end(), own.begin(), own.end());

  const double scale = layout.max_route_length();
  const double los_feature = config.los_nmi / config.alert_nmi;
  for (std::size_t slot = 0; slot < static_cast<std::size_t>(shape.n_closest); ++slot) {
    if (slot < take) {
      const Candidate& c = candidates[slot];
      obs.push_back(std::min(c.separation / scale, 1.0));
      obs.push_back(los_feature);
      const auto block = aircraft_features(*c.state, config);
      obs.insert(obs.end(), block.begin(), block.end());
    } else {
      obs.push_back(1.0);
      obs.push_back(0.0);
      obs.insert(obs.end(), ObservationLayout::kAircraftBlock, 0.0);
    }
  }
  return obs;
}

double reward_for_separation(double closest_nmi, const ScenarioConfig& config) {
  if (closest_nmi < config.los_nmi) return -1.0;
  if (closest_nmi < config.alert_nmi) return -config.alpha + config.beta_reward * closest_nmi;
  return 0.0;
}

double closest_separation(const AircraftState& ownship, std::span<const AircraftState> all,
                          const SectorLayout& layout) {
  const Point own = position_of(ownship, layout);
  double best = std::numeric_limits<double>::infinity();
  for (const AircraftState& other : all) {
    if (other.id == ownship.id) continue;
    best = std::min(best, euclidean_separation(own, position_of(other, layout)));
  }
  return best;
}

double reward(const AircraftState& ownship, std::span<const AircraftState> all_active,
              const ScenarioConfig& config) {
  std::vector<AircraftState> others;
  for (const AircraftState& a : all_active) {
    if (a.active) others.push_back(a);
  }
  return reward_for_separation(closest_separation(ownship, others, *config.layout), config);
}

void write_trace_csv(std::ostream& out, std::span<const TraceRow> rows) {
  out << "# atc-trace v" << kTraceFormatVersion << "\n";
  out << "time,aircraft_id,route,arc_pos,speed,action,reward,min_separation\n";
  const auto old_precision = out.precision(10);
  for (const TraceRow& r : rows) {
    out << r.time << ',' << r.id << ',' << r.route << ',' << r.arc_pos << ',' << r.speed << ','
        << action_name(r.action) << ',' << r.reward << ',';
    if (std::isfinite(r.min_separation)) {
      out << r.min_separation;
    } else {
      out << "inf";
    }
    out << '\n';
  }
  out.precision(old_precision);
}

Environment::Environment(ScenarioConfig config) : config_(std::move(config)) { config_.validate(); }

StepOutcome Environment::reset(std::uint64_t seed) {
  schedule_ = draw_arrival_schedule(config_, seed);
  next_arrival_ = 0;
  pending_.clear();
  aircraft_.clear();
  trace_.clear();
  time_ = 0.0;
  steps_ = 0;
  delayed_spawn_count_ = 0;
  started_ = true;

  StepOutcome out;
  out.time = time_;
  out.spawned = spawn_due(out.delayed_spawns);
  done_ = pending_.empty() && next_arrival_ == schedule_.size() && active_aircraft().empty();
  out.episode_done = done_;
  out.observations = observe();
  return out;
}

std::vector<AircraftId> Environment::spawn_due(std::vector<AircraftId>& delayed) {
  while (next_arrival_ < schedule_.size() && schedule_[next_arrival_].time <= time_ + 1e-9) {
    pending_.push_back(schedule_[next_arrival_++]);
  }
  std::vector<AircraftId> spawned;
  std::vector<ArrivalEvent> still_pending;
  for (const ArrivalEvent& ev : pending_) {
    const Point entry = layout().route(ev.route).position_at(0.0);
    bool blocked = false;
    for (const AircraftState& a : aircraft_) {
      if (a.active && euclidean_separation(entry, position_of(a, layout())) < config_.los_nmi) {
        blocked = true;
        break;
      }
    }
    if (blocked) {
      still_pending.push_back(ev);
      delayed.push_back(ev.id);
      ++delayed_spawn_count_;
      continue;
    }
    AircraftState s;
    s.id = ev.id;
    s.route = ev.route;
    s.arc_pos = 0.0;
    s.speed = config_.envelope.entry_speed;
    s.target_speed = s.speed;
    s.acceleration = 0.0;
    s.entered_at = time_;
    s.active = true;
    aircraft_.push_back(s);
    spawned.push_back(ev.id);
  }
  pending_ = std::move(still_pending);
  return spawned;
}

std::vector<AircraftState> Environment::active_aircraft() const {
  std::vector<AircraftState> out;
  for (const AircraftState& a : aircraft_) {
    if (a.active) out.push_back(a);
  }
  std::sort(out.begin(), out.end(),
            [](const AircraftState& a, const AircraftState& b) { return a.id < b.id; });
  return out;
}

std::vector<AgentObservation> Environment::observe() const {
  const auto active = active_aircraft();
  std::vector<AgentObservation> out;
  out.reserve(active.size());
  for (const AircraftState& own : active) {
    const auto eligible = neighbor_filter(own, active, layout());
    out.push_back({own.id, build_observation(own, eligible, config_)});
  }
  return out;
}

StepOutcome Environment::step(const std::map<AircraftId, Action>& actions) {
  if (!started_) throw StateError("step called before reset");
  if (done_) throw StateError("step called on a finished episode");

  std::vector<std::size_t> deciders;
  for (std::size_t i = 0; i < aircraft_.size(); ++i) {
    if (aircraft_[i].active) deciders.push_back(i);
  }
  std::sort(deciders.begin(), deciders.end(),
            [&](std::size_t a, std::size_t b) { return aircraft_[a].id < aircraft_[b].id; });
  for (std::size_t i : deciders) {
    if (!actions.contains(aircraft_[i].id)) {
      throw ContractError("missing action for active aircraft " + std::to_string(aircraft_[i].id));
    }
  }
  if (actions.size() != deciders.size()) {
    throw ContractError("actions supplied for aircraft that are not active");
  }

  StepOutcome out;
  const SpeedEnvelope& env = config_.envelope;
  std::vector<char> in_conflict(aircraft_.size(), 0);

  for (std::size_t i : deciders) {
    aircraft_[i] = command(aircraft_[i], actions.at(aircraft_[i].id), env);
  }
  if (config_.check_substeps) {
    const auto n = static_cast<long>(std::llround(config_.dt / config_.sub_step));
    std::vector<double> v_start;
    for (std::size_t i : deciders) v_start.push_back(aircraft_[i].speed);
    for (long k = 0; k < n; ++k) {
      for (std::size_t i : deciders) {
        aircraft_[i] = integrate(aircraft_[i], config_.sub_step, config_.sub_step, env);
      }
      if (k + 1 == n) break;  // the epoch boundary check below covers the last sub-step
      for (std::size_t p = 0; p < deciders.size(); ++p) {
        for (std::size_t q = p + 1; q < deciders.size(); ++q) {
          const auto& a = aircraft_[deciders[p]];
          const auto& b = aircraft_[deciders[q]];
          if (euclidean_separation(position_of(a, layout()), position_of(b, layout())) <
              config_.los_nmi) {
            in_conflict[deciders[p]] = in_conflict[deciders[q]] = 1;
          }
        }
      }
    }
    for (std::size_t p = 0; p < deciders.size(); ++p) {
      auto& a = aircraft_[deciders[p]];
      a.acceleration = (a.speed - v_start[p]) / config_.dt;
    }
  } else {
    for (std::size_t i : deciders) {
      aircraft_[i] = integrate(aircraft_[i], config_.dt, config_.sub_step, env);
    }
  }
  time_ += config_.dt;
  ++steps_;

  std::vector<char> exiting(aircraft_.size(), 0);
  for (std::size_t i : deciders) {
    const double length = layout().route(aircraft_[i].route).length();
    if (aircraft_[i].arc_pos >= length) {
      aircraft_[i].arc_pos = length;
      exiting[i] = 1;
      // Exiting aircraft no longer block the entry point.
      aircraft_[i].active = false;
    }
  }
  out.spawned = spawn_due(out.delayed_spawns);
  for (std::size_t i : deciders) {
    if (exiting[i]) aircraft_[i].active = true;
  }
  in_conflict.resize(aircraft_.size(), 0);

  // Post-integration population: every decider plus fresh arrivals.
  std::vector<std::size_t> population = deciders;
  for (std::size_t i = 0; i < aircraft_.size(); ++i) {
    if (aircraft_[i].active && std::find(deciders.begin(), deciders.end(), i) == deciders.end()) {
      population.push_back(i);
    }
  }
  std::vector<Point> pos;
  pos.reserve(population.size());
  for (std::size_t i : population) pos.push_back(position_of(aircraft_[i], layout()));

  std::vector<double> closest(population.size(), std::numeric_limits<double>::infinity());
  for (std::size_t p = 0; p < population.size(); ++p) {
    for (std::size_t q = p + 1; q < population.size(); ++q) {
      const double d = euclidean_separation(pos[p], pos[q]);
      closest[p] = std::min(closest[p], d);
      closest[q] = std::min(closest[q], d);
      if (d < config_.los_nmi) {
        in_conflict[population[p]] = in_conflict[population[q]] = 1;
        const AircraftId a = aircraft_[population[p]].id;
        const AircraftId b = aircraft_[population[q]].id;
        out.conflicts.push_back({std::min(a, b), std::max(a, b), d});
      }
    }
  }
  std::sort(out.conflicts.begin(), out.conflicts.end(),
            [](const ConflictEvent& x, const ConflictEvent& y) {
              return x.a < y.a || (x.a == y.a && x.b < y.b);
            });

  for (std::size_t i = 0; i < aircraft_.size(); ++i) {
    if (in_conflict[i]) aircraft_[i].ever_in_conflict = true;
  }

  for (std::size_t p = 0; p < deciders.size(); ++p) {
    AircraftState& a = aircraft_[deciders[p]];
    AgentResult r;
    r.id = a.id;
    r.min_separation = closest[p];
    r.reward = reward_for_separation(closest[p], config_);
    r.done = exiting[deciders[p]] != 0;
    out.results.push_back(r);
    if (record_trace_) {
      trace_.push_back({time_, a.id, a.route, a.arc_pos, a.speed, actions.at(a.id), r.reward,
                        r.min_separation});
    }
    if (r.done) {
      a.active = false;
      out.exits.push_back(a.id);
    }
  }

  done_ = pending_.empty() && next_arrival_ == schedule_.size() && active_aircraft().empty();
  out.time = time_;
  out.episode_done = done_;
  out.observations = observe();
  return out;
}

int Environment::episode_score() const {
  if (!started_ || !done_) throw StateError("episode_score requires a finished episode");
  int score = 0;
  for (const AircraftState& a : aircraft_) {
    if (!a.active && !a.ever_in_conflict) ++score;
  }
  return score;
}

}  // namespace atc
