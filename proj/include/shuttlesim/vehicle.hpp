#pragma once

#include "shuttlesim/route.hpp"

#include <Eigen/Core>

#include <limits>

namespace shuttlesim {

struct VehicleState {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;    // radians, normalized to (-pi, pi]
  double speed = 0.0;  // m/s, >= 0

  Eigen::Vector2d position() const { return {x, y}; }
};

struct VehicleParams {
  double wheelbase = 3.0;        // m, front-to-rear axle
  double max_steer = 0.5;        // rad
  double cruise_speed = 11.176;  // m/s (25 mph)
  // rad/s; infinity = no rate limiting (applied by the sim loop, not here)
  double steer_rate_limit = std::numeric_limits<double>::infinity();

  void validate() const;  // throws std::invalid_argument
};

// Kinematic single-track update at fixed dt (dt in (0, 0.1]); steer is
// clamped to +-max_steer, speed passes through unchanged.
VehicleState step_bicycle(const VehicleState& state, double steer, const VehicleParams& params,
                          double dt);

// Pure pursuit steering from heading error e to the goal point:
// delta = atan(2 L sin(e) / lookahead), clamped to +-max_steer.
double pure_pursuit_steer(double heading_error, const VehicleParams& params, double lookahead);

// Angle from the vehicle heading to the bearing of the goal point,
// normalized to (-pi, pi]. This is the e(t) fed to pure_pursuit_steer.
double heading_error_to_goal(const VehicleState& state, const Eigen::Vector2d& goal);

}  // namespace shuttlesim
