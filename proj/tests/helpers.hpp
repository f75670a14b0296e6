// Shared synthetic fixtures for the unit and acceptance tests.
#pragma once

#include "shuttlesim/geom.hpp"
#include "shuttlesim/lidar.hpp"
#include "shuttlesim/ndt.hpp"
#include "shuttlesim/scene.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <unordered_map>
#include <vector>

namespace testfix {

// Three orthogonal planar lattices (ground + two walls), 0.25 m pitch.
// Every 1 m NDT voxel the lattice touches holds >= 6 points, and within each
// voxel the lattice is symmetric about the cell mean per axis, so the score
// gradient at identity vanishes to roundoff.
inline shuttlesim::PointCloud make_room_cloud() {
  shuttlesim::PointCloud cloud;
  cloud.frame = shuttlesim::Frame::Sensor;
  const double step = 0.25;
  for (double x = -5.0; x <= 5.0 + 1e-9; x += step) {
    for (double y = -5.0; y <= 5.0 + 1e-9; y += step) {
      cloud.points.emplace_back(x, y, 0.0);  // ground
    }
  }
  for (double y = -5.0; y <= 5.0 + 1e-9; y += step) {
    for (double z = 0.25; z <= 3.0 + 1e-9; z += step) {
      cloud.points.emplace_back(5.0, y, z);  // wall x = 5
    }
  }
  for (double x = -5.0; x <= 5.0 + 1e-9; x += step) {
    for (double z = 0.25; z <= 3.0 + 1e-9; z += step) {
      cloud.points.emplace_back(x, -5.0, z);  // wall y = -5
    }
  }
  return cloud;
}

// Octahedral constellations (+-0.1 m along each axis) centered on voxel
// centers: an exact stationary point of the NDT score at identity.
inline shuttlesim::PointCloud make_octahedron_cloud() {
  shuttlesim::PointCloud cloud;
  cloud.frame = shuttlesim::Frame::Sensor;
  const std::vector<shuttlesim::Point3> centers = {
      {0.5, 0.5, 0.5}, {3.5, 0.5, 0.5}, {0.5, 3.5, 0.5}, {3.5, 3.5, 1.5}, {2.5, -1.5, 0.5}};
  for (const auto& c : centers) {
    for (int axis = 0; axis < 3; ++axis) {
      for (double s : {-0.1, 0.1}) {
        shuttlesim::Point3 p = c;
        p[axis] += s;
        cloud.points.push_back(p);
      }
    }
  }
  return cloud;
}

// 40 m indoor guideway hall for the mapping and localization tests: side
// walls at y = +/-6 with end caps, buttress stubs, benches and crates lining
// both walls, service columns, and a corrugated ceiling. Deliberately no
// floor plane: lidar rings on any large horizontal surface replay almost
// exactly between nearby vantages, so scan matching sees a false maximum at
// the previous pose; keeping horizontal surfaces small, at varied heights,
// and at irregular spacings gives height structure without that replay.
inline shuttlesim::Scene make_hall_scene() {
  shuttlesim::Scene s;
  s.ground_z = 0.0;
  s.has_ground = false;
  s.boxes.push_back({{-8.0, 6.0, 0.0}, {32.0, 6.3, 3.0}});    // north wall
  s.boxes.push_back({{-8.0, -6.3, 0.0}, {32.0, -6.0, 3.0}});  // south wall
  s.boxes.push_back({{32.0, -6.3, 0.0}, {32.3, 6.3, 3.5}});   // far end cap
  s.boxes.push_back({{-8.3, -6.3, 0.0}, {-8.0, 6.3, 3.5}});   // near end cap
  // buttress stubs jutting into the hall at irregular stations
  const double stubs[] = {-5.0, 2.0, 9.0, 17.0, 24.0, 29.0};
  for (double x : stubs) {
    s.boxes.push_back({{x, 4.8, 0.0}, {x + 0.4, 6.0, 3.0}});
    s.boxes.push_back({{x + 2.2, -6.0, 0.0}, {x + 2.6, -4.8, 3.0}});
  }
  // benches: small horizontal tops at varied heights, alternating sides
  const double bench_h[] = {0.35, 0.6, 0.85, 1.1, 1.35, 0.5, 0.95, 0.7};
  int bi = 0;
  for (double x = -6.5; x < 30.0; x += 3.5) {
    const double h = bench_h[bi % 8];
    if (bi % 2 == 0) s.boxes.push_back({{x, 1.8, 0.0}, {x + 0.9, 3.2, h}});
    else s.boxes.push_back({{x, -3.2, 0.0}, {x + 0.9, -1.8, h}});
    ++bi;
  }
  // wall-side crates
  const double bx[][6] = {
      {-6.0, 4.0, 0.0, -4.5, 5.8, 1.2},  {-2.5, -5.8, 0.0, -0.5, -4.4, 2.2},
      {1.0, 4.6, 0.0, 3.5, 5.9, 1.6},    {5.0, -5.9, 0.0, 6.0, -4.8, 2.5},
      {7.5, 4.2, 0.0, 10.0, 5.9, 1.0},   {11.5, -5.5, 0.0, 12.7, -4.2, 1.8},
      {14.0, 4.8, 0.0, 16.0, 5.9, 2.4},  {17.5, -5.9, 0.0, 20.0, -4.6, 1.4},
      {21.0, 4.4, 0.0, 22.2, 5.8, 2.0},  {23.5, -5.8, 0.0, 25.5, -4.9, 1.1},
      {26.5, 4.0, 0.0, 28.0, 5.9, 2.6},  {29.5, -5.9, 0.0, 31.0, -4.3, 1.9},
  };
  for (const auto& b : bx) s.boxes.push_back({{b[0], b[1], b[2]}, {b[3], b[4], b[5]}});
  // floor pallets flanking the drive line: low tops at mixed heights within
  // a few meters of every vantage anchor height and pitch where the distant
  // ceiling cannot, and their footprints are small and aperiodic so the low
  // rings never see a repeating pattern
  const double pal[][6] = {
      {-6.2, 0.8, 0.0, -5.0, 1.7, 0.22},   {-3.4, -1.5, 0.0, -2.3, -0.7, 0.12},
      {-0.8, 0.9, 0.0, 0.6, 1.8, 0.27},    {1.9, -1.8, 0.0, 2.8, -0.9, 0.09},
      {4.4, 0.7, 0.0, 5.5, 1.5, 0.18},     {6.9, -1.4, 0.0, 8.2, -0.6, 0.24},
      {9.6, 1.0, 0.0, 10.5, 2.0, 0.11},    {12.1, -1.9, 0.0, 13.4, -1.0, 0.21},
      {14.8, 0.6, 0.0, 15.9, 1.4, 0.15},   {17.3, -1.3, 0.0, 18.1, -0.5, 0.26},
      {19.8, 0.9, 0.0, 21.2, 1.9, 0.10},   {22.6, -1.7, 0.0, 23.7, -0.8, 0.19},
      {25.3, 0.7, 0.0, 26.3, 1.6, 0.23},   {27.9, -1.5, 0.0, 29.1, -0.6, 0.13},
      {30.4, 1.1, 0.0, 31.4, 2.1, 0.17},
  };
  for (const auto& b : pal) s.boxes.push_back({{b[0], b[1], b[2]}, {b[3], b[4], b[5]}});
  // side canopies over the bench and crate zones, at a different height per
  // side, leaving the center aisle open to the sky. A roof across the aisle
  // would hand scan matching a vertical alias: climbing shrinks the ceiling
  // rings, and directly ahead that radial shrink mimics the forward shift to
  // the previous vantage. Over the sides the shrink is mostly lateral, so
  // the canopies pin height without that escape.
  s.boxes.push_back({{-8.0, 3.3, 2.95}, {32.0, 6.0, 3.15}});
  s.boxes.push_back({{-8.0, -6.0, 3.1}, {32.0, -3.3, 3.3}});
  // service columns, kept well off the drive line
  const double cyl[][4] = {
      {-4.0, 4.1, 0.8, 2.6},  {0.5, -4.3, 1.0, 2.4}, {6.5, 4.0, 0.7, 3.0},
      {13.0, -4.2, 0.9, 2.4}, {19.5, 4.1, 1.0, 2.8}, {25.0, -4.0, 0.8, 2.2},
      {30.0, 4.2, 0.9, 2.6},
  };
  for (const auto& c : cyl) s.cylinders.push_back({{c[0], c[1], 0.0}, c[2], c[3]});
  return s;
}

// 32-channel lidar used for the mapping drives. Doubling the channel count
// over the 16-beam default tightens the elevation ring spacing, and the fan
// reaches further down than up (-25 to +15 degrees, as survey-grade 32-beam
// units do): from a 1.8 m mast the steep down-channels are what sample the
// pallet tops and bench faces within a few meters, which is where height and
// pitch get pinned.
inline shuttlesim::LidarConfig make_mapping_lidar() {
  shuttlesim::LidarConfig lidar = shuttlesim::LidarConfig::basic_16();
  lidar.elevation_angles.clear();
  for (int c = 0; c < 32; ++c) {
    lidar.elevation_angles.push_back((-25.0 + 40.0 * c / 31.0) * std::numbers::pi / 180.0);
  }
  return lidar;
}

// Straight 20-scan drive through the hall at 1.05 m spacing (sensor at
// z = 1.8 m). Scans are in the sensor frame; truth[k] is the world pose of
// scan k's sensor.
struct MappingDrive {
  std::vector<shuttlesim::PointCloud> scans;
  std::vector<shuttlesim::Transform> truth;
};

inline MappingDrive make_hall_drive(std::uint64_t seed0 = 100) {
  const shuttlesim::Scene scene = make_hall_scene();
  const shuttlesim::LidarConfig lidar = make_mapping_lidar();
  MappingDrive drive;
  for (int k = 0; k < 20; ++k) {
    shuttlesim::Pose6 pose;
    pose.x = 19.95 * k / 19.0;
    pose.z = 1.8;
    drive.truth.push_back(shuttlesim::pose_to_transform(pose));
    drive.scans.push_back(shuttlesim::simulate_scan(scene, pose, lidar, seed0 + k));
  }
  return drive;
}

// Map-frame pose of scan `idx` under ground truth: the map frame is the
// first scan's sensor frame.
inline shuttlesim::Transform truth_in_map(const MappingDrive& drive, std::size_t idx) {
  return drive.truth.front().inverse() * drive.truth.at(idx);
}

// RMS nearest-neighbor distance from every point of `query` to `ref`,
// via a coarse hash grid over `ref`. Search widens one Chebyshev shell at a
// time; a shell at distance r only holds points >= (r-1)*bucket away, so the
// scan stops once the best match beats the next shell's lower bound.
inline double nn_rms(const shuttlesim::PointCloud& query, const shuttlesim::PointCloud& ref,
                     double bucket = 0.5) {
  using shuttlesim::NdtGrid;
  const auto cell_of = [bucket](const shuttlesim::Point3& p) {
    return std::array<int, 3>{static_cast<int>(std::floor(p.x() / bucket)),
                              static_cast<int>(std::floor(p.y() / bucket)),
                              static_cast<int>(std::floor(p.z() / bucket))};
  };
  std::unordered_map<std::uint64_t, std::vector<shuttlesim::Point3>> buckets;
  for (const auto& p : ref.points) buckets[NdtGrid::pack_index(cell_of(p))].push_back(p);

  double sum_sq = 0.0;
  for (const auto& q : query.points) {
    const std::array<int, 3> c = cell_of(q);
    double best_sq = std::numeric_limits<double>::infinity();
    for (int r = 0; r < 64; ++r) {
      for (int dx = -r; dx <= r; ++dx) {
        for (int dy = -r; dy <= r; ++dy) {
          for (int dz = -r; dz <= r; ++dz) {
            if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != r) continue;
            const auto it = buckets.find(NdtGrid::pack_index({c[0] + dx, c[1] + dy, c[2] + dz}));
            if (it == buckets.end()) continue;
            for (const auto& p : it->second) best_sq = std::min(best_sq, (p - q).squaredNorm());
          }
        }
      }
      if (best_sq <= r * bucket * (r * bucket)) break;
    }
    sum_sq += best_sq;
  }
  return query.empty() ? 0.0 : std::sqrt(sum_sq / static_cast<double>(query.size()));
}

// Compact structured scene (ground + boxes + cylinders) surrounding the
// origin; used for registration recovery statistics. The close-in cylinders
// matter: their round walls constrain every planar direction at once, where
// the axis-aligned boxes only pin their face normals.
inline shuttlesim::Scene make_structured_scene() {
  shuttlesim::Scene s;
  s.ground_z = 0.0;
  s.boxes.push_back({{6.0, -2.0, 0.0}, {8.0, 2.0, 2.5}});
  s.boxes.push_back({{-9.0, -3.0, 0.0}, {-7.0, 3.0, 3.0}});
  s.boxes.push_back({{-2.0, 6.0, 0.0}, {3.0, 8.0, 2.0}});
  s.boxes.push_back({{-3.0, -9.0, 0.0}, {2.0, -7.0, 2.8}});
  s.boxes.push_back({{9.0, 7.0, 0.0}, {12.0, 10.0, 2.2}});
  s.cylinders.push_back({{-8.0, 9.0, 0.0}, 1.2, 3.0});
  s.cylinders.push_back({{4.5, -1.5, 0.0}, 0.6, 2.5});
  s.cylinders.push_back({{-4.0, 3.0, 0.0}, 0.5, 2.2});
  s.cylinders.push_back({{0.5, -4.0, 0.0}, 0.45, 2.8});
  return s;
}

}  // namespace testfix
