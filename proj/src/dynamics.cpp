#include "atc/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "atc/errors.hpp"

namespace atc {

std::string_view action_name(Action a) {
  switch (a) {
    case Action::Decelerate:
      return "DECEL";
    case Action::Hold:
      return "HOLD";
    case Action::Accelerate:
      return "ACCEL";
  }
  return "?";
}

Action action_from_index(int index) {
  if (index < 0 || index >= kActionCount) {
    throw ContractError("action index " + std::to_string(index) + " outside {0,1,2}");
  }
  return static_cast<Action>(index);
}

void SpeedEnvelope::validate() const {
  if (!(v_min > 0.0)) throw ConfigError("envelope.v_min must be > 0");
  if (!(v_max > v_min)) throw ConfigError("envelope.v_max must exceed envelope.v_min");
  if (!(accel > 0.0)) throw ConfigError("envelope.accel must be > 0");
  if (!(entry_speed >= v_min && entry_speed <= v_max)) {
    throw ConfigError("envelope.entry_speed must lie within [v_min, v_max]");
  }
}

AircraftState command(AircraftState state, Action action, const SpeedEnvelope& envelope) {
  if (!state.active) {
    throw StateError("command issued to inactive aircraft " + std::to_string(state.id));
  }
  switch (action) {
    case Action::Decelerate:
      state.target_speed = envelope.v_min;
      break;
    case Action::Hold:
      state.target_speed = std::clamp(state.speed, envelope.v_min, envelope.v_max);
      break;
    case Action::Accelerate:
      state.target_speed = envelope.v_max;
      break;
  }
  return state;
}

AircraftState integrate(AircraftState state, double dt, double sub_step,
                        const SpeedEnvelope& envelope) {
  if (!(dt > 0.0) || !(sub_step > 0.0)) throw ContractError("dt and sub_step must be positive");
  const double ratio = dt / sub_step;
  const auto steps = static_cast<long>(std::llround(ratio));
  if (steps < 1 || std::abs(ratio - static_cast<double>(steps)) > 1e-9 * ratio) {
    throw ContractError("sub_step must divide dt");
  }
  const double h = dt / static_cast<double>(steps);
  const double target = std::clamp(state.target_speed, envelope.v_min, envelope.v_max);
  const double v_start = state.speed;

  for (long k = 0; k < steps; ++k) {
    const double v0 = state.speed;
    const double gap = target - v0;
    const double ramp = std::min(std::abs(gap) / envelope.accel, h);
    const double v_ramp_end = v0 + std::copysign(envelope.accel * ramp, gap);
    // Trapezoid over the ramp, rectangle for the remainder of the sub-step.
    const double distance_kts_s = 0.5 * (v0 + v_ramp_end) * ramp + v_ramp_end * (h - ramp);
    state.arc_pos += distance_kts_s / kSecondsPerHour;
    state.speed = (ramp < h) ? target : v_ramp_end;
    state.speed = std::clamp(state.speed, envelope.v_min, envelope.v_max);
  }
  state.acceleration = (state.speed - v_start) / dt;
  return state;
}

}  // namespace atc
