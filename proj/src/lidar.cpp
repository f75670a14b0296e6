#include "shuttlesim/lidar.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace shuttlesim {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

int LidarConfig::azimuth_count() const {
  return static_cast<int>(std::llround(kTwoPi / azimuth_step));
}

void LidarConfig::validate() const {
  if (elevation_angles.empty()) {
    throw std::invalid_argument("lidar: at least one channel required");
  }
  if (!(min_range > 0.0) || !(min_range < max_range)) {
    throw std::invalid_argument("lidar: require 0 < min_range < max_range");
  }
  if (!(azimuth_step > 0.0)) {
    throw std::invalid_argument("lidar: azimuth_step must be > 0");
  }
  const double n = std::llround(kTwoPi / azimuth_step);
  if (std::abs(n * azimuth_step - kTwoPi) > 1e-9) {
    throw std::invalid_argument("lidar: azimuth_step must divide 2*pi");
  }
  if (range_noise_sigma < 0.0) {
    throw std::invalid_argument("lidar: range_noise_sigma must be >= 0");
  }
}

LidarConfig LidarConfig::basic_16(double mount_height) {
  LidarConfig cfg;
  const double lo = -15.0 * std::numbers::pi / 180.0;
  const double hi = 15.0 * std::numbers::pi / 180.0;
  for (int i = 0; i < 16; ++i) {
    cfg.elevation_angles.push_back(lo + (hi - lo) * i / 15.0);
  }
  cfg.azimuth_step = kTwoPi / 900;  // 0.4 deg
  cfg.min_range = 0.5;
  cfg.max_range = 100.0;
  cfg.range_noise_sigma = 0.01;
  cfg.mount = Pose6(0, 0, mount_height, 0, 0, 0);
  return cfg;
}

PointCloud simulate_scan(const Scene& scene, const Pose6& sensor_pose_world,
                         const LidarConfig& cfg, std::uint64_t seed) {
  cfg.validate();

  const Transform t = pose_to_transform(sensor_pose_world);
  const Eigen::Matrix3d r = t.linear();
  const Point3 origin = t.translation();
  const int n_az = cfg.azimuth_count();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  PointCloud cloud;
  cloud.frame = Frame::Sensor;
  cloud.points.reserve(static_cast<std::size_t>(cfg.channels()) * n_az);

  for (double elev : cfg.elevation_angles) {
    const double ce = std::cos(elev);
    const double se = std::sin(elev);
    for (int k = 0; k < n_az; ++k) {
      const double az = k * cfg.azimuth_step;
      const Point3 dir_sensor(ce * std::cos(az), ce * std::sin(az), se);
      const auto hit = ray_cast(scene, origin, r * dir_sensor);
      if (!hit) continue;
      double range = *hit;
      if (cfg.range_noise_sigma > 0.0) {
        range += cfg.range_noise_sigma * noise(rng);
      }
      if (range < cfg.min_range || range > cfg.max_range) continue;
      cloud.points.push_back(dir_sensor * range);
    }
  }
  return cloud;
}

}  // namespace shuttlesim
