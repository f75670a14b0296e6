#pragma once

#include "shuttlesim/geom.hpp"
#include "shuttlesim/scene.hpp"

#include <cstdint>
#include <vector>

namespace shuttlesim {

// Multi-channel spinning lidar. One ray is fired per (channel, azimuth)
// pair; azimuth_step must divide 2*pi to within 1e-9.
struct LidarConfig {
  std::vector<double> elevation_angles;  // radians, one per channel
  double azimuth_step = 0.0;             // radians
  double min_range = 0.5;                // meters
  double max_range = 100.0;              // meters
  double range_noise_sigma = 0.01;       // meters, additive Gaussian on range
  Pose6 mount;                           // sensor pose in the vehicle frame

  int channels() const { return static_cast<int>(elevation_angles.size()); }
  int azimuth_count() const;
  void validate() const;  // throws std::invalid_argument

  // 16 channels uniform in [-15 deg, +15 deg], 0.4 deg azimuth step,
  // 0.5-100 m range, 1 cm range noise, mounted 1.8 m above the vehicle
  // origin.
  static LidarConfig basic_16(double mount_height = 1.8);
};

// Casts one ray per (channel, azimuth) pair from the sensor pose, applies
// seeded Gaussian range noise, drops returns outside [min_range, max_range]
// and reports the surviving points in the sensor frame, channel-major.
// Deterministic for fixed (scene, pose, cfg, seed).
PointCloud simulate_scan(const Scene& scene, const Pose6& sensor_pose_world,
                         const LidarConfig& cfg, std::uint64_t seed);

}  // namespace shuttlesim
