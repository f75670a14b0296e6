#include "shuttlesim/mapping.hpp"

#include "shuttlesim/errors.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace shuttlesim {

namespace {

// Relative pose magnitudes used for keyframe gating.
double translation_between(const Pose6& a, const Pose6& b) {
  return (b.translation() - a.translation()).norm();
}

double rotation_between(const Pose6& a, const Pose6& b) {
  const Eigen::Matrix3d ra = pose_to_transform(a).rotation();
  const Eigen::Matrix3d rb = pose_to_transform(b).rotation();
  return Eigen::AngleAxisd(ra.transpose() * rb).angle();
}

}  // namespace

void MapParams::validate() const {
  if (!(leaf_size > 0.0)) throw std::invalid_argument("mapping: leaf_size must be > 0");
  if (!(keyframe_translation > 0.0) || !(keyframe_rotation > 0.0)) {
    throw std::invalid_argument("mapping: keyframe gates must be > 0");
  }
  if (!(ndt_cell_size > 0.0)) throw std::invalid_argument("mapping: ndt_cell_size must be > 0");
  if (ndt_min_points < 4) throw std::invalid_argument("mapping: ndt_min_points must be >= 4");
}

PointCloud voxel_downsample(const PointCloud& cloud, double leaf) {
  if (!(leaf > 0.0)) throw std::invalid_argument("voxel_downsample: leaf must be > 0");

  struct Bucket {
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    int n = 0;
  };
  std::unordered_map<std::uint64_t, Bucket> buckets;
  buckets.reserve(cloud.size());
  for (const Point3& p : cloud.points) {
    std::array<int, 3> index;
    for (int i = 0; i < 3; ++i) index[i] = static_cast<int>(std::floor(p[i] / leaf));
    Bucket& b = buckets[NdtGrid::pack_index(index)];
    b.sum += p;
    b.n += 1;
  }

  std::vector<std::uint64_t> keys;
  keys.reserve(buckets.size());
  for (const auto& [key, b] : buckets) keys.push_back(key);
  std::sort(keys.begin(), keys.end());

  PointCloud out;
  out.frame = cloud.frame;
  out.points.reserve(keys.size());
  for (std::uint64_t key : keys) {
    const Bucket& b = buckets.at(key);
    out.points.push_back(b.sum / b.n);
  }
  return out;
}

MapBuild build_map(const std::vector<PointCloud>& scans, const MapParams& params) {
  params.validate();
  if (scans.empty()) throw std::invalid_argument("build_map: no scans");

  MapBuild build;
  build.map_cloud = voxel_downsample(scans[0], params.leaf_size);
  build.map_cloud.frame = Frame::Map;
  build.keyframes.emplace_back(0, Pose6());

  // Leaf-voxel occupancy of the map cloud. Appending is first-wins: points of
  // later keyframes only fill voxels no earlier keyframe touched, so settled
  // structure never shifts when new scans overlap it.
  const auto leaf_key = [&params](const Point3& p) {
    std::array<int, 3> index;
    for (int i = 0; i < 3; ++i) {
      index[i] = static_cast<int>(std::floor(p[i] / params.leaf_size));
    }
    return NdtGrid::pack_index(index);
  };
  std::unordered_set<std::uint64_t> occupied;
  occupied.reserve(build.map_cloud.size());
  for (const Point3& p : build.map_cloud.points) occupied.insert(leaf_key(p));

  // Registration runs against a grid fed with every keyframe's placed points,
  // not the deduplicated map cloud: dedup freezes each leaf voxel at the
  // first scan that touched it, so cell Gaussians keep single-sweep sampling
  // patterns and reward re-alignment of the ring pattern over coincidence of
  // the underlying surface. Pooling all sweeps widens each cell's covariance
  // to the real surface spread, which pulls the score maximum onto it.
  PointCloud reg_cloud = build.map_cloud;
  NdtGrid grid = build_grid(reg_cloud, params.ndt_cell_size, params.ndt_min_points);
  Pose6 prev_pose;  // identity: scan 0 defines the map frame

  for (std::size_t i = 1; i < scans.size(); ++i) {
    const PointCloud scan = voxel_downsample(scans[i], params.leaf_size);
    ScanMatchResult result;
    try {
      result = register_scan(grid, scan, prev_pose, params.registration);
    } catch (const DegenerateInputError&) {
      build.diverged.push_back(i);
      continue;
    }
    if (!result.converged) {
      build.diverged.push_back(i);
      continue;
    }
    prev_pose = result.pose;

    const Pose6& last_kf = build.keyframes.back().second;
    if (translation_between(last_kf, result.pose) < params.keyframe_translation &&
        rotation_between(last_kf, result.pose) < params.keyframe_rotation) {
      continue;
    }

    const Transform t = pose_to_transform(result.pose);
    PointCloud placed;
    placed.frame = Frame::Map;
    placed.points.reserve(scan.size());
    for (const Point3& p : scan.points) placed.points.push_back(t * p);
    placed = voxel_downsample(placed, params.leaf_size);
    for (const Point3& p : placed.points) {
      if (occupied.insert(leaf_key(p)).second) build.map_cloud.points.push_back(p);
    }
    reg_cloud.points.insert(reg_cloud.points.end(), placed.points.begin(),
                            placed.points.end());
    build.keyframes.emplace_back(i, result.pose);
    grid = build_grid(reg_cloud, params.ndt_cell_size, params.ndt_min_points);
  }
  return build;
}

NdtGrid map_grid(const MapBuild& build, const MapParams& params) {
  return build_grid(build.map_cloud, params.ndt_cell_size, params.ndt_min_points);
}

}  // namespace shuttlesim
