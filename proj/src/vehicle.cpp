#include "shuttlesim/vehicle.hpp"

#include "shuttlesim/geom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace shuttlesim {

void VehicleParams::validate() const {
  if (!(wheelbase > 0.0)) {
    throw std::invalid_argument("vehicle: wheelbase must be > 0");
  }
  if (!(max_steer > 0.0 && max_steer < std::numbers::pi / 2)) {
    throw std::invalid_argument("vehicle: max_steer must be in (0, pi/2)");
  }
  if (!(cruise_speed > 0.0 && cruise_speed <= 11.176)) {
    throw std::invalid_argument("vehicle: cruise_speed must be in (0, 11.176] m/s");
  }
  if (std::isnan(steer_rate_limit) || steer_rate_limit <= 0.0) {
    throw std::invalid_argument("vehicle: steer_rate_limit must be > 0");
  }
}

VehicleState step_bicycle(const VehicleState& state, double steer, const VehicleParams& params,
                          double dt) {
  if (!(dt > 0.0 && dt <= 0.1)) {
    throw std::invalid_argument("step_bicycle: dt must be in (0, 0.1]");
  }
  const double delta = std::clamp(steer, -params.max_steer, params.max_steer);
  const double v = state.speed;
  VehicleState next = state;
  next.x += v * std::cos(state.yaw) * dt;
  next.y += v * std::sin(state.yaw) * dt;
  next.yaw = normalize_angle(state.yaw + v / params.wheelbase * std::tan(delta) * dt);
  return next;  // speed unchanged: cruise control holds it
}

double pure_pursuit_steer(double heading_error, const VehicleParams& params, double lookahead) {
  if (!(lookahead > 0.0)) {
    throw std::invalid_argument("pure_pursuit_steer: lookahead must be > 0");
  }
  const double delta =
      std::atan(2.0 * params.wheelbase * std::sin(heading_error) / lookahead);
  return std::clamp(delta, -params.max_steer, params.max_steer);
}

double heading_error_to_goal(const VehicleState& state, const Eigen::Vector2d& goal) {
  const double bearing = std::atan2(goal.y() - state.y, goal.x() - state.x);
  return normalize_angle(bearing - state.yaw);
}

}  // namespace shuttlesim
