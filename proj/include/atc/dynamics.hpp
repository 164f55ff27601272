#pragma once

#include <string_view>

#include "atc/geometry.hpp"

namespace atc {

enum class Action : int { Decelerate = 0, Hold = 1, Accelerate = 2 };

inline constexpr int kActionCount = 3;

std::string_view action_name(Action a);
Action action_from_index(int index);

// Speeds in knots, accel in knots per second.
struct SpeedEnvelope {
  double v_min = 430.0;
  double v_max = 520.0;
  double accel = 1.0;
  double entry_speed = 470.0;

  // Throws ConfigError when the envelope is inconsistent.
  void validate() const;
};

using AircraftId = int;

struct AircraftState {
  AircraftId id = 0;
  RouteId route = 0;
  double arc_pos = 0.0;       // nmi
  double speed = 0.0;         // kts
  double acceleration = 0.0;  // kts/s, mean over the last integrate call
  double target_speed = 0.0;  // kts
  double entered_at = 0.0;    // s
  bool active = false;
  bool ever_in_conflict = false;
};

// Sets the commanded target speed. Throws StateError on an inactive aircraft.
AircraftState command(AircraftState state, Action action, const SpeedEnvelope& envelope);

// Advances the aircraft by dt seconds in sub_step increments. Within a
// sub-step the speed ramps toward target at envelope.accel and then holds, and
// the displacement is the exact integral of that piecewise-linear profile.
// arc_pos is not clamped to the route; the environment handles exits.
AircraftState integrate(AircraftState state, double dt, double sub_step,
                        const SpeedEnvelope& envelope);

inline constexpr double kSecondsPerHour = 3600.0;

}  // namespace atc
