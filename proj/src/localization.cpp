#include "shuttlesim/localization.hpp"

#include <cmath>
#include <stdexcept>

namespace shuttlesim {

Pose6 predict_initial_guess(const LocalizationState& state, double dt) {
  if (dt < 0.0) throw std::invalid_argument("predict_initial_guess: dt must be >= 0");
  const Pose6& p = state.prev_pose;
  const double ds = state.prev_velocity.v * dt;
  return Pose6(p.x + ds * std::cos(p.yaw), p.y + ds * std::sin(p.yaw), p.z, p.roll, p.pitch,
               p.yaw + state.prev_velocity.yaw_rate * dt);
}

Pose6 localize_scan(const NdtGrid& map_grid, const PointCloud& scan, LocalizationState& state,
                    const LocalizerConfig& cfg, double dt) {
  const Pose6 predicted = predict_initial_guess(state, dt);
  const Transform t_lidar = pose_to_transform(cfg.lidar_extrinsic);
  const Pose6 sensor_guess = transform_to_pose(pose_to_transform(predicted) * t_lidar).pose;

  state.last_result = register_scan(map_grid, scan, sensor_guess, cfg.registration);

  if (!state.last_result.converged) {
    // Hold and flag: keep driving on the prediction, freeze the velocity
    // estimate so repeated misses cannot run away.
    state.degraded = true;
    state.prev_pose = predicted;
    return predicted;
  }

  const Transform t_ndt = pose_to_transform(state.last_result.pose);
  const Pose6 vehicle = transform_to_pose(t_ndt * t_lidar.inverse()).pose;

  if (dt > 0.0) {
    const double dx = vehicle.x - state.prev_pose.x;
    const double dy = vehicle.y - state.prev_pose.y;
    const double forward = dx * std::cos(vehicle.yaw) + dy * std::sin(vehicle.yaw);
    state.prev_velocity.v = forward / dt;
    state.prev_velocity.yaw_rate = normalize_angle(vehicle.yaw - state.prev_pose.yaw) / dt;
  }
  state.degraded = false;
  state.prev_pose = vehicle;
  return vehicle;
}

Pose6 to_global(const Pose6& vehicle_pose_map, const LocalizerConfig& cfg) {
  return compose(cfg.gps_anchor, vehicle_pose_map);
}

}  // namespace shuttlesim
