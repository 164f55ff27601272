#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "atc/dynamics.hpp"
#include "atc/geometry.hpp"

namespace atc {

enum class ArrivalMode {
  DiscreteSet,      // gaps drawn uniformly from inter_arrival_choices
  ContinuousRange,  // gaps drawn from U(inter_arrival_min, inter_arrival_max)
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::shared_ptr<const SectorLayout> layout;
  // Display names by route id; empty entries fall back to "R<id + 1>".
  std::vector<std::string> route_names;
  int max_aircraft = 30;
  ArrivalMode arrival_mode = ArrivalMode::DiscreteSet;
  std::vector<double> inter_arrival_choices{240.0, 300.0, 360.0};
  double inter_arrival_min = 240.0;
  double inter_arrival_max = 360.0;
  int n_closest = 3;
  double los_nmi = 3.0;
  double alert_nmi = 10.0;
  double alpha = 0.1;
  double beta_reward = 0.005;
  double dt = 12.0;
  double sub_step = 1.0;
  // Also flag conflicts at integration sub-steps, not only at decision epochs.
  bool check_substeps = false;
  SpeedEnvelope envelope;
  std::uint64_t rng_seed = 0;

  // Throws ConfigError naming the offending field.
  void validate() const;
  std::string route_name(RouteId id) const;
};

// Feature layout of one agent's observation. Each aircraft block holds
// (dist_to_goal, speed, acceleration, dist_to_intersection, route one-hot,
// half_los); each neighbor slot is (d, LOS(o,i), aircraft block).
struct ObservationLayout {
  static constexpr int kRouteSlots = 3;
  static constexpr int kAircraftBlock = 5 + kRouteSlots;
  static constexpr int kSlotWidth = 2 + kAircraftBlock;

  int n_closest = 3;

  int own_width() const { return kAircraftBlock; }
  int local_width() const { return n_closest * kSlotWidth; }
  int size() const { return own_width() + local_width(); }
};

// Value of the "distance to intersection" feature once every shared point is behind.
inline constexpr double kNoIntersectionFeature = -1.0;

struct ArrivalEvent {
  AircraftId id = 0;
  RouteId route = 0;
  double time = 0.0;
};

// Per-route gaps, round-robin over routes until max_aircraft events. The first
// aircraft on each route is scheduled at t=0. Sorted by (time, id).
std::vector<ArrivalEvent> draw_arrival_schedule(const ScenarioConfig& config, std::uint64_t seed);

// Aircraft eligible for ownship's observation: same route, or a conflicting
// route with the shared point not yet passed. Traffic on a merge's shared
// downstream segment is physically on ownship's route and stays eligible.
std::vector<AircraftState> neighbor_filter(const AircraftState& ownship,
                                           std::span<const AircraftState> all_active,
                                           const SectorLayout& layout);

std::vector<double> aircraft_features(const AircraftState& a, const ScenarioConfig& config);

// The n_closest eligible aircraft by separation (ties by lower id), nearest first,
// remaining slots padded with the sentinel encoding.
std::vector<double> build_observation(const AircraftState& ownship,
                                      std::span<const AircraftState> eligible,
                                      const ScenarioConfig& config);

double reward_for_separation(double closest_nmi, const ScenarioConfig& config);

// Distance to the closest other aircraft in `all`, +inf when alone.
double closest_separation(const AircraftState& ownship, std::span<const AircraftState> all,
                          const SectorLayout& layout);

double reward(const AircraftState& ownship, std::span<const AircraftState> all_active,
              const ScenarioConfig& config);

struct AgentObservation {
  AircraftId id = 0;
  std::vector<double> features;
};

struct AgentResult {
  AircraftId id = 0;
  double reward = 0.0;
  bool done = false;  // exited this epoch
  double min_separation = 0.0;
};

struct ConflictEvent {
  AircraftId a = 0;  // a < b
  AircraftId b = 0;
  double separation = 0.0;
};

struct StepOutcome {
  double time = 0.0;
  // Active agents after the step (survivors and new arrivals), sorted by id.
  std::vector<AgentObservation> observations;
  // Agents active at decision time, sorted by id.
  std::vector<AgentResult> results;
  bool episode_done = false;
  std::vector<ConflictEvent> conflicts;
  std::vector<AircraftId> exits;
  std::vector<AircraftId> spawned;
  std::vector<AircraftId> delayed_spawns;
};

struct TraceRow {
  double time = 0.0;
  AircraftId id = 0;
  RouteId route = 0;
  double arc_pos = 0.0;
  double speed = 0.0;
  Action action = Action::Hold;
  double reward = 0.0;
  double min_separation = 0.0;
};

inline constexpr int kTraceFormatVersion = 1;
void write_trace_csv(std::ostream& out, std::span<const TraceRow> rows);

// Single-threaded episodic environment. Independent instances share only the
// immutable layout.
class Environment {
 public:
  explicit Environment(ScenarioConfig config);

  StepOutcome reset(std::uint64_t seed);
  // One action per active agent; throws ContractError otherwise.
  StepOutcome step(const std::map<AircraftId, Action>& actions);

  // Aircraft that exited never having been in conflict. Throws StateError
  // before the episode is done.
  int episode_score() const;

  bool done() const { return done_; }
  double time() const { return time_; }
  const ScenarioConfig& config() const { return config_; }
  const SectorLayout& layout() const { return *config_.layout; }
  ObservationLayout observation_layout() const { return {config_.n_closest}; }
  const std::vector<ArrivalEvent>& schedule() const { return schedule_; }
  // Every aircraft spawned so far, active or exited, indexed by spawn order.
  const std::vector<AircraftState>& aircraft() const { return aircraft_; }
  std::vector<AircraftState> active_aircraft() const;
  int steps() const { return steps_; }
  int delayed_spawn_count() const { return delayed_spawn_count_; }

  void record_trace(bool on) { record_trace_ = on; }
  const std::vector<TraceRow>& trace() const { return trace_; }

 private:
  std::vector<AircraftId> spawn_due(std::vector<AircraftId>& delayed);
  std::vector<AgentObservation> observe() const;

  ScenarioConfig config_;
  std::vector<ArrivalEvent> schedule_;
  std::size_t next_arrival_ = 0;
  std::vector<ArrivalEvent> pending_;
  std::vector<AircraftState> aircraft_;
  double time_ = 0.0;
  int steps_ = 0;
  bool done_ = true;
  bool started_ = false;
  int delayed_spawn_count_ = 0;
  bool record_trace_ = false;
  std::vector<TraceRow> trace_;
};

}  // namespace atc
