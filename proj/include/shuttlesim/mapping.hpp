#pragma once

#include "shuttlesim/geom.hpp"
#include "shuttlesim/ndt.hpp"

#include <cstddef>
#include <numbers>
#include <utility>
#include <vector>

namespace shuttlesim {

struct MapParams {
  double leaf_size = 0.2;                                    // m, voxel downsampling
  double keyframe_translation = 1.0;                         // m
  double keyframe_rotation = 5.0 * std::numbers::pi / 180.0;  // rad
  double ndt_cell_size = 1.0;                   // m
  int ndt_min_points = 6;
  RegistrationParams registration;

  void validate() const;  // throws std::invalid_argument
};

struct MapBuild {
  PointCloud map_cloud;  // map frame, downsampled at leaf_size
  std::vector<std::pair<std::size_t, Pose6>> keyframes;  // (scan index, sensor pose)
  std::vector<std::size_t> diverged;  // scan indices skipped for failed registration
};

// One point per occupied voxel at the members' centroid; output ordered by
// voxel index, so the result is deterministic regardless of input order
// within a voxel-stable permutation.
PointCloud voxel_downsample(const PointCloud& cloud, double leaf);

// Sequential scan-to-map NDT mapping. Scan 0 fixes the map frame; each later
// scan is registered against the current map grid from the previous scan's
// pose, appended as a keyframe once it has moved past the gates, and the grid
// is rebuilt after every appended keyframe.
MapBuild build_map(const std::vector<PointCloud>& scans, const MapParams& params = {});

// Grid over the current map cloud with the build's NDT parameters.
NdtGrid map_grid(const MapBuild& build, const MapParams& params = {});

}  // namespace shuttlesim
