#pragma once

#include "shuttlesim/geom.hpp"
#include "shuttlesim/ndt.hpp"

namespace shuttlesim {

struct LocalizerConfig {
  Pose6 lidar_extrinsic;  // sensor pose in the vehicle frame (T_lidar)
  Pose6 gps_anchor;       // map origin in the global frame (T_o_gps)
  RegistrationParams registration;
};

struct PlanarTwist {
  double v = 0.0;         // m/s along the heading
  double yaw_rate = 0.0;  // rad/s
};

struct LocalizationState {
  Pose6 prev_pose;          // vehicle in map frame
  PlanarTwist prev_velocity;
  ScanMatchResult last_result;
  bool degraded = false;    // last frame fell back to the prediction
};

// Constant-velocity extrapolation of prev_pose in the plane; z, roll and
// pitch are held.
Pose6 predict_initial_guess(const LocalizationState& state, double dt);

// One localization frame. The scan (sensor frame) is registered against the
// map grid starting from the predicted vehicle pose composed with the lidar
// extrinsic. Registration yields the sensor pose in the map frame (T_ndt);
// the vehicle pose is T_ndt composed with the inverse extrinsic. On a
// non-converged registration the predicted pose is returned, the state is
// flagged degraded, and the velocity estimate is left untouched.
Pose6 localize_scan(const NdtGrid& map_grid, const PointCloud& scan, LocalizationState& state,
                    const LocalizerConfig& cfg, double dt);

// Global pose: gps_anchor composed with the map-frame vehicle pose.
Pose6 to_global(const Pose6& vehicle_pose_map, const LocalizerConfig& cfg);

}  // namespace shuttlesim
