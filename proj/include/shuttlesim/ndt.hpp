#pragma once

#include "shuttlesim/geom.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>

namespace shuttlesim {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

// One voxel of the NDT map: the Gaussian fitted to the points that fell
// into the voxel. Covariance is stored after eigenvalue regularization
// (eigenvalues below 0.001 * lambda_max are clamped up to that floor) so
// the cached inverse always exists.
struct NdtCell {
  Point3 mean = Point3::Zero();
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d inverse_covariance = Eigen::Matrix3d::Identity();
  int count = 0;
  double norm_const = 0.0;  // 1 / ((2 pi)^{3/2} sqrt(det covariance))

  // Builds a regularized cell from raw first/second moments.
  static NdtCell from_moments(const Point3& mean, const Eigen::Matrix3d& covariance, int count);
};

// Clamp eigenvalues below 0.001 * lambda_max up to that floor. Idempotent
// to within roundoff. A fully degenerate matrix (lambda_max ~ 0) falls back
// to a 1e-9 * I floor.
Eigen::Matrix3d regularize_covariance(const Eigen::Matrix3d& covariance);

// Sparse voxel -> Gaussian map of a point cloud.
class NdtGrid {
 public:
  NdtGrid() = default;
  NdtGrid(double cell_size, const Point3& origin) : cell_size_(cell_size), origin_(origin) {}

  double cell_size() const { return cell_size_; }
  const Point3& origin() const { return origin_; }
  std::size_t size() const { return cells_.size(); }
  bool empty() const { return cells_.empty(); }

  std::array<int, 3> voxel_index_of(const Point3& p) const;

  // The cell of the voxel containing p, or nullptr when that voxel has no
  // distribution.
  const NdtCell* cell_at(const Point3& p) const;

  void insert_cell(const std::array<int, 3>& index, NdtCell cell);
  const std::unordered_map<std::uint64_t, NdtCell>& cells() const { return cells_; }

  static std::uint64_t pack_index(const std::array<int, 3>& index);
  static std::array<int, 3> unpack_index(std::uint64_t key);

 private:
  double cell_size_ = 1.0;
  Point3 origin_ = Point3::Zero();
  std::unordered_map<std::uint64_t, NdtCell> cells_;
};

// Fit one Gaussian per voxel holding at least min_points points (min_points
// must be >= 4 so the sample covariance has a chance at full rank). Voxels
// below the threshold get no cell.
NdtGrid build_grid(const PointCloud& cloud, double cell_size, int min_points);

// Gaussian density of the cell at x, in m^-3.
double cell_density(const NdtCell& cell, const Point3& x);

// Sum over cloud points of the density of the voxel containing the
// transformed point. Points landing in empty voxels contribute zero.
double score(const NdtGrid& grid, const PointCloud& cloud, const Pose6& pose);

// Analytic gradient of score with respect to (x, y, z, roll, pitch, yaw).
Vector6d score_gradient(const NdtGrid& grid, const PointCloud& cloud, const Pose6& pose);

struct RegistrationParams {
  int max_iterations = 50;
  double tol_translation = 1e-4;  // m, accepted-step norm threshold
  double tol_rotation = 1e-5;     // rad
  int max_step_halvings = 12;
  double max_step_translation = 1.0;  // m, cap on any one step
  double max_step_rotation = 0.5;     // rad
};

struct ScanMatchResult {
  Pose6 pose;
  double score = 0.0;
  int iterations = 0;
  bool converged = false;
  double final_step_norm = 0.0;  // norm of the last accepted 6-vector step
};

// Maximize the score over the 6-DOF z-y-x Euler pose starting from
// initial_guess: Newton steps where the Hessian is negative definite,
// gradient ascent otherwise, with step halving so the score never
// decreases. Throws std::invalid_argument on an empty grid and
// DegenerateInputError when the cloud has fewer than 10 points.
ScanMatchResult register_scan(const NdtGrid& grid, const PointCloud& cloud,
                              const Pose6& initial_guess, const RegistrationParams& params = {});

// JSON round trip: {cell_size, origin, cells: [{index, mean,
// covariance (upper triangle), count}]}, cells sorted by voxel index.
std::string grid_to_json(const NdtGrid& grid);
NdtGrid grid_from_json(const std::string& json_text);
void save_grid(const NdtGrid& grid, const std::string& path);
NdtGrid load_grid(const std::string& path);

}  // namespace shuttlesim
