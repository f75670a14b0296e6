#include "shuttlesim/ndt.hpp"

#include "shuttlesim/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace shuttlesim {

namespace {

constexpr double kEigenvalueRatioFloor = 1e-3;
constexpr double kEigenvalueAbsFloor = 1e-9;   // m^2, fully degenerate cells
constexpr double kMinUsableScore = 1e-12;      // below this the pose has no cell support
constexpr int kIndexBits = 21;
constexpr int kIndexOffset = 1 << 20;

struct CellMoments {
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  Eigen::Matrix3d sum_outer = Eigen::Matrix3d::Zero();
  int n = 0;
};

// R = Rz(yaw) Ry(pitch) Rx(roll) and its first and second derivatives with
// respect to the three angles (0 = roll, 1 = pitch, 2 = yaw).
struct RotationDerivatives {
  Eigen::Matrix3d r;
  std::array<Eigen::Matrix3d, 3> dr;
  std::array<std::array<Eigen::Matrix3d, 3>, 3> ddr;
};

RotationDerivatives rotation_derivatives(double roll, double pitch, double yaw) {
  const double ca = std::cos(roll), sa = std::sin(roll);
  const double cb = std::cos(pitch), sb = std::sin(pitch);
  const double cc = std::cos(yaw), sc = std::sin(yaw);

  Eigen::Matrix3d rx, drx, ddrx;
  rx << 1, 0, 0, 0, ca, -sa, 0, sa, ca;
  drx << 0, 0, 0, 0, -sa, -ca, 0, ca, -sa;
  ddrx << 0, 0, 0, 0, -ca, sa, 0, -sa, -ca;

  Eigen::Matrix3d ry, dry, ddry;
  ry << cb, 0, sb, 0, 1, 0, -sb, 0, cb;
  dry << -sb, 0, cb, 0, 0, 0, -cb, 0, -sb;
  ddry << -cb, 0, -sb, 0, 0, 0, sb, 0, -cb;

  Eigen::Matrix3d rz, drz, ddrz;
  rz << cc, -sc, 0, sc, cc, 0, 0, 0, 1;
  drz << -sc, -cc, 0, cc, -sc, 0, 0, 0, 0;
  ddrz << -cc, sc, 0, -sc, -cc, 0, 0, 0, 0;

  RotationDerivatives out;
  out.r = rz * ry * rx;
  out.dr[0] = rz * ry * drx;
  out.dr[1] = rz * dry * rx;
  out.dr[2] = drz * ry * rx;
  out.ddr[0][0] = rz * ry * ddrx;
  out.ddr[0][1] = out.ddr[1][0] = rz * dry * drx;
  out.ddr[0][2] = out.ddr[2][0] = drz * ry * drx;
  out.ddr[1][1] = rz * ddry * rx;
  out.ddr[1][2] = out.ddr[2][1] = drz * dry * rx;
  out.ddr[2][2] = ddrz * ry * rx;
  return out;
}

struct Evaluation {
  double score = 0.0;
  Vector6d gradient = Vector6d::Zero();
  Matrix6d hessian = Matrix6d::Zero();
};

Pose6 pose_from_vector(const Vector6d& v) {
  return Pose6(v[0], v[1], v[2], v[3], v[4], v[5]);
}

Vector6d vector_from_pose(const Pose6& p) {
  Vector6d v;
  v << p.x, p.y, p.z, p.roll, p.pitch, p.yaw;
  return v;
}

Evaluation evaluate(const NdtGrid& grid, const PointCloud& cloud, const Pose6& pose,
                    bool derivatives) {
  Evaluation out;
  const RotationDerivatives rot = rotation_derivatives(pose.roll, pose.pitch, pose.yaw);
  const Eigen::Vector3d t(pose.x, pose.y, pose.z);

  Eigen::Matrix<double, 3, 6> jac;
  jac.setZero();
  jac.block<3, 3>(0, 0).setIdentity();

  for (const Point3& x : cloud.points) {
    const Point3 xt = rot.r * x + t;
    const NdtCell* cell = grid.cell_at(xt);
    if (cell == nullptr) continue;

    const Eigen::Vector3d q = xt - cell->mean;
    const Eigen::Vector3d lq = cell->inverse_covariance * q;
    const double dens = cell->norm_const * std::exp(-0.5 * q.dot(lq));
    out.score += dens;
    if (!derivatives || dens == 0.0) continue;

    for (int a = 0; a < 3; ++a) jac.col(3 + a) = rot.dr[a] * x;

    Vector6d u;
    for (int i = 0; i < 6; ++i) u[i] = lq.dot(jac.col(i));
    out.gradient -= dens * u;

    Matrix6d h = u * u.transpose() - jac.transpose() * (cell->inverse_covariance * jac);
    for (int a = 0; a < 3; ++a) {
      for (int b = a; b < 3; ++b) {
        const double second = lq.dot(rot.ddr[a][b] * x);
        h(3 + a, 3 + b) -= second;
        if (a != b) h(3 + b, 3 + a) -= second;
      }
    }
    out.hessian += dens * h;
  }
  return out;
}

void finalize_cell(NdtCell& cell) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cell.covariance);
  const Eigen::Vector3d ev = es.eigenvalues();
  if (ev.minCoeff() <= 0.0) {
    throw std::invalid_argument("ndt: cell covariance is not positive definite");
  }
  cell.inverse_covariance =
      es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  const double det = ev.prod();
  cell.norm_const = 1.0 / (std::pow(2.0 * std::numbers::pi, 1.5) * std::sqrt(det));
}

}  // namespace

Eigen::Matrix3d regularize_covariance(const Eigen::Matrix3d& covariance) {
  const Eigen::Matrix3d sym = 0.5 * (covariance + covariance.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(sym);
  Eigen::Vector3d ev = es.eigenvalues();
  const double lambda_max = ev.maxCoeff();
  if (lambda_max < kEigenvalueAbsFloor) {
    return kEigenvalueAbsFloor * Eigen::Matrix3d::Identity();
  }
  const double floor = kEigenvalueRatioFloor * lambda_max;
  // The slack keeps the operation exactly idempotent: eigenvalues recomputed
  // from a previously clamped matrix land within roundoff of the floor and
  // must not trigger another reconstruction.
  if (ev.minCoeff() >= floor * (1.0 - 1e-12)) return sym;
  ev = ev.cwiseMax(floor);
  const Eigen::Matrix3d rebuilt = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (rebuilt + rebuilt.transpose());
}

NdtCell NdtCell::from_moments(const Point3& mean, const Eigen::Matrix3d& covariance, int count) {
  NdtCell cell;
  cell.mean = mean;
  cell.covariance = regularize_covariance(covariance);
  cell.count = count;
  finalize_cell(cell);
  return cell;
}

std::uint64_t NdtGrid::pack_index(const std::array<int, 3>& index) {
  std::uint64_t key = 0;
  for (int i = 0; i < 3; ++i) {
    const long long shifted = static_cast<long long>(index[i]) + kIndexOffset;
    if (shifted < 0 || shifted >= (1LL << kIndexBits)) {
      throw std::invalid_argument("ndt: voxel index out of range");
    }
    key = (key << kIndexBits) | static_cast<std::uint64_t>(shifted);
  }
  return key;
}

std::array<int, 3> NdtGrid::unpack_index(std::uint64_t key) {
  std::array<int, 3> index;
  for (int i = 2; i >= 0; --i) {
    index[i] = static_cast<int>(key & ((1u << kIndexBits) - 1)) - kIndexOffset;
    key >>= kIndexBits;
  }
  return index;
}

std::array<int, 3> NdtGrid::voxel_index_of(const Point3& p) const {
  std::array<int, 3> index;
  for (int i = 0; i < 3; ++i) {
    index[i] = static_cast<int>(std::floor((p[i] - origin_[i]) / cell_size_));
  }
  return index;
}

const NdtCell* NdtGrid::cell_at(const Point3& p) const {
  const auto index = voxel_index_of(p);
  for (int i = 0; i < 3; ++i) {
    const long long shifted = static_cast<long long>(index[i]) + kIndexOffset;
    if (shifted < 0 || shifted >= (1LL << kIndexBits)) return nullptr;
  }
  const auto it = cells_.find(pack_index(index));
  return it == cells_.end() ? nullptr : &it->second;
}

void NdtGrid::insert_cell(const std::array<int, 3>& index, NdtCell cell) {
  cells_[pack_index(index)] = std::move(cell);
}

NdtGrid build_grid(const PointCloud& cloud, double cell_size, int min_points) {
  if (!(cell_size > 0.0)) {
    throw std::invalid_argument("build_grid: cell_size must be > 0");
  }
  if (min_points < 4) {
    throw std::invalid_argument("build_grid: min_points must be >= 4");
  }

  NdtGrid grid(cell_size, Point3::Zero());
  std::unordered_map<std::uint64_t, CellMoments> moments;
  moments.reserve(cloud.size() / 4 + 1);

  for (const Point3& p : cloud.points) {
    const auto index = grid.voxel_index_of(p);
    const std::uint64_t key = NdtGrid::pack_index(index);
    // Accumulate relative to the voxel corner to keep the second moment
    // well conditioned far from the origin.
    const Point3 corner(index[0] * cell_size, index[1] * cell_size, index[2] * cell_size);
    const Eigen::Vector3d local = p - corner;
    CellMoments& m = moments[key];
    m.sum += local;
    m.sum_outer += local * local.transpose();
    m.n += 1;
  }

  for (const auto& [key, m] : moments) {
    if (m.n < min_points) continue;
    const Eigen::Vector3d mean_local = m.sum / m.n;
    const Eigen::Matrix3d cov =
        (m.sum_outer - m.n * (mean_local * mean_local.transpose())) / (m.n - 1);
    const auto index = NdtGrid::unpack_index(key);
    const Point3 corner(index[0] * cell_size, index[1] * cell_size, index[2] * cell_size);
    grid.insert_cell(index, NdtCell::from_moments(corner + mean_local, cov, m.n));
  }
  return grid;
}

double cell_density(const NdtCell& cell, const Point3& x) {
  const Eigen::Vector3d q = x - cell.mean;
  return cell.norm_const * std::exp(-0.5 * q.dot(cell.inverse_covariance * q));
}

double score(const NdtGrid& grid, const PointCloud& cloud, const Pose6& pose) {
  return evaluate(grid, cloud, pose, false).score;
}

Vector6d score_gradient(const NdtGrid& grid, const PointCloud& cloud, const Pose6& pose) {
  return evaluate(grid, cloud, pose, true).gradient;
}

namespace {

// Deterministic stall-escape offsets: axis-aligned hops at fractions and
// multiples of the cell size plus small rotations, in a fixed preference
// order. Thin planar cells give the score narrow "teeth" a pure ascent
// cannot cross, and repeated sensor sweeps of the same surfaces leave false
// maxima near the previous vantage separated from the true pose by roughly
// the inter-scan displacement; the long hops reach across both. A candidate
// pose only counts as a maximum once none of these hops improves on it.
//
// Rotations pivot about `anchor` (the transformed scan's centroid), not the
// sensor origin: a wrong yaw settles into the translation that best
// compensates it, so a sensor-centered turn undoes that compensation and
// scores worse even when the yaw itself improves. Premultiplying by Rz(a)
// adds a to yaw under the z-y-x Euler convention and shifts the translation
// by (Rz(a) - I)(t - anchor), which keeps the pivot point fixed; roll and
// pitch probes are small enough (1 degree) to stay sensor-centered.
std::vector<Vector6d> pattern_probes(double cell_size, const Vector6d& p,
                                     const Eigen::Vector3d& anchor) {
  std::vector<Vector6d> probes;
  for (double m : {0.1 * cell_size, 0.25 * cell_size, 0.5 * cell_size, 1.0 * cell_size,
                   2.0 * cell_size, 3.0 * cell_size}) {
    for (int axis = 0; axis < 3; ++axis) {
      for (double s : {1.0, -1.0}) {
        Vector6d v = Vector6d::Zero();
        v(axis) = s * m;
        probes.push_back(v);
      }
    }
  }
  const double deg = std::numbers::pi / 180.0;
  const Eigen::Vector3d arm = p.head<3>() - anchor;
  for (double a : {1.0 * deg, 3.0 * deg, 8.0 * deg}) {
    for (double s : {1.0, -1.0}) {
      Vector6d v = Vector6d::Zero();
      v(5) = s * a;
      const Eigen::Matrix3d rz = Eigen::AngleAxisd(s * a, Eigen::Vector3d::UnitZ()).matrix();
      v.head<3>() = (rz - Eigen::Matrix3d::Identity()) * arm;
      probes.push_back(v);
    }
  }
  for (int axis : {3, 4}) {
    for (double s : {1.0, -1.0}) {
      Vector6d v = Vector6d::Zero();
      v(axis) = s * deg;
      probes.push_back(v);
    }
  }
  return probes;
}

}  // namespace

ScanMatchResult register_scan(const NdtGrid& grid, const PointCloud& cloud,
                              const Pose6& initial_guess, const RegistrationParams& params) {
  if (grid.empty()) {
    throw std::invalid_argument("register_scan: empty grid");
  }
  if (cloud.size() < 10) {
    throw DegenerateInputError("register_scan: cloud has fewer than 10 points");
  }

  Vector6d p = vector_from_pose(initial_guess);
  Evaluation eval = evaluate(grid, cloud, pose_from_vector(p), true);

  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& pt : cloud.points) centroid += pt;
  centroid /= static_cast<double>(cloud.size());

  // One damped-Newton ascent step with a step-halving line search on the
  // literal score. When the Hessian is not negative definite its spectrum is
  // shifted so it is, then the step follows (shift*I - H)^{-1} g; the
  // per-direction curvature scaling lets razor-thin planar cells (huge
  // negative curvature) coexist with nearly flat in-plane directions, where
  // a raw gradient step would be hopelessly ill-proportioned. Updates q and
  // ev in place and returns the accepted step, zero if no trial improved.
  const auto ascend_once = [&](Vector6d& q, Evaluation& ev) -> Vector6d {
    const double gnorm = ev.gradient.norm();
    Vector6d dir = Vector6d::Zero();
    if (gnorm > 1e-15) {
      Eigen::SelfAdjointEigenSolver<Matrix6d> es(ev.hessian);
      const Vector6d& lam = es.eigenvalues();
      double shift = 0.0;
      if (lam(5) >= 0.0) {
        shift = lam(5) + std::max(1e-3 * lam.cwiseAbs().maxCoeff(), 1e-9);
      }
      const Vector6d gq = es.eigenvectors().transpose() * ev.gradient;
      dir = es.eigenvectors() * gq.cwiseQuotient(Vector6d::Constant(shift) - lam);
    }
    const double tn = dir.head<3>().norm();
    if (tn > params.max_step_translation) dir *= params.max_step_translation / tn;
    const double rn = dir.tail<3>().norm();
    if (rn > params.max_step_rotation) dir *= params.max_step_rotation / rn;

    double step_scale = 1.0;
    for (int h = 0; h <= params.max_step_halvings; ++h) {
      const Vector6d trial = q + step_scale * dir;
      Evaluation next = evaluate(grid, cloud, pose_from_vector(trial), true);
      if (next.score > ev.score) {
        q = vector_from_pose(pose_from_vector(trial));  // renormalize angles
        ev = next;
        return step_scale * dir;
      }
      step_scale *= 0.5;
    }
    return Vector6d::Zero();
  };

  ScanMatchResult result;
  result.converged = false;

  // Escapes are capped per call: each one strictly improves the score, but
  // dense tooth landscapes offer endless marginal basins, and chaining
  // through them would exhaust the iteration budget without converging.
  constexpr int kMaxEscapes = 6;
  int escapes = 0;

  for (int iter = 1; iter <= params.max_iterations; ++iter) {
    result.iterations = iter;

    if (eval.score < kMinUsableScore && eval.gradient.norm() < 1e-12) {
      continue;  // no cell support anywhere near: nothing to climb
    }

    const Vector6d accepted_step = ascend_once(p, eval);
    const bool accepted = accepted_step.squaredNorm() > 0.0;
    if (accepted) {
      result.final_step_norm = accepted_step.norm();
      if (accepted_step.head<3>().norm() >= params.tol_translation ||
          accepted_step.tail<3>().norm() >= params.tol_rotation) {
        continue;  // healthy progress
      }
    }

    // The ascent stalled (line search failed) or its steps shrank below
    // tolerance. Confirm against the probe pattern before declaring a
    // maximum; a hop that improves the score restarts the ascent from the
    // far side of a tooth.
    if (eval.score < kMinUsableScore) {
      continue;  // zero plateau: probes of a few cells cannot help either
    }
    const Eigen::Vector3d anchor =
        pose_to_transform(pose_from_vector(p)) * centroid;
    const std::vector<Vector6d> probes = pattern_probes(grid.cell_size(), p, anchor);
    double best_score = eval.score;
    Vector6d best_step = Vector6d::Zero();
    bool hopped = false;
    std::vector<std::pair<double, std::size_t>> ranked;
    ranked.reserve(probes.size());
    for (std::size_t i = 0; i < probes.size(); ++i) {
      const Vector6d trial = p + probes[i];
      const double s = evaluate(grid, cloud, pose_from_vector(trial), false).score;
      ranked.emplace_back(s, i);
      if (s > best_score) {
        best_score = s;
        best_step = probes[i];
        hopped = true;
      }
    }
    if (hopped) {
      p = vector_from_pose(pose_from_vector(p + best_step));
      eval = evaluate(grid, cloud, pose_from_vector(p), true);
      result.final_step_norm = best_step.norm();
      continue;
    }

    // No probe outscores the candidate outright, but one can still sit on
    // the slope of a better basin whose rim is below the current tooth: a
    // wrong-yaw pose settles into a compensating translation that any single
    // hop only partially undoes. Re-ascend from the highest-ranked probes
    // and take the best climbed pose that beats the candidate; only when
    // every restart falls short is this a maximum.
    if (escapes >= kMaxEscapes) {
      if (!accepted) result.final_step_norm = 0.0;
      result.converged = true;
      break;
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    const std::size_t restarts = std::min<std::size_t>(12, ranked.size());
    Vector6d escape_pose = Vector6d::Zero();
    Evaluation escape_eval;
    bool escaped = false;
    for (std::size_t r = 0; r < restarts; ++r) {
      Vector6d q = vector_from_pose(pose_from_vector(p + probes[ranked[r].second]));
      Evaluation ev_q = evaluate(grid, cloud, pose_from_vector(q), true);
      for (int m = 0; m < 8; ++m) {
        const Vector6d s = ascend_once(q, ev_q);
        if (s.squaredNorm() == 0.0) break;
        if (s.head<3>().norm() < params.tol_translation &&
            s.tail<3>().norm() < params.tol_rotation) break;
      }
      if (ev_q.score > eval.score && (!escaped || ev_q.score > escape_eval.score)) {
        escaped = true;
        escape_pose = q;
        escape_eval = ev_q;
      }
    }
    if (escaped) {
      ++escapes;
      Vector6d jump = escape_pose - p;
      for (int i = 3; i < 6; ++i) jump(i) = normalize_angle(jump(i));
      result.final_step_norm = jump.norm();
      p = escape_pose;
      eval = escape_eval;
      continue;
    }

    if (!accepted) result.final_step_norm = 0.0;
    result.converged = true;
    break;
  }

  result.pose = pose_from_vector(p);
  result.score = eval.score;
  return result;
}

std::string grid_to_json(const NdtGrid& grid) {
  nlohmann::json j;
  j["cell_size"] = grid.cell_size();
  j["origin"] = {grid.origin().x(), grid.origin().y(), grid.origin().z()};

  std::vector<std::uint64_t> keys;
  keys.reserve(grid.cells().size());
  for (const auto& [key, cell] : grid.cells()) keys.push_back(key);
  std::sort(keys.begin(), keys.end());

  nlohmann::json cells = nlohmann::json::array();
  for (std::uint64_t key : keys) {
    const NdtCell& cell = grid.cells().at(key);
    const auto index = NdtGrid::unpack_index(key);
    const Eigen::Matrix3d& c = cell.covariance;
    cells.push_back({{"index", {index[0], index[1], index[2]}},
                     {"mean", {cell.mean.x(), cell.mean.y(), cell.mean.z()}},
                     {"covariance", {c(0, 0), c(0, 1), c(0, 2), c(1, 1), c(1, 2), c(2, 2)}},
                     {"count", cell.count}});
  }
  j["cells"] = std::move(cells);
  return j.dump() + "\n";
}

NdtGrid grid_from_json(const std::string& json_text) {
  const nlohmann::json j = nlohmann::json::parse(json_text);
  NdtGrid grid(j.at("cell_size").get<double>(),
               Point3(j.at("origin")[0].get<double>(), j.at("origin")[1].get<double>(),
                      j.at("origin")[2].get<double>()));
  for (const auto& jc : j.at("cells")) {
    NdtCell cell;
    cell.mean = Point3(jc.at("mean")[0].get<double>(), jc.at("mean")[1].get<double>(),
                       jc.at("mean")[2].get<double>());
    const auto& cv = jc.at("covariance");
    Eigen::Matrix3d c;
    c << cv[0].get<double>(), cv[1].get<double>(), cv[2].get<double>(),  //
        cv[1].get<double>(), cv[3].get<double>(), cv[4].get<double>(),   //
        cv[2].get<double>(), cv[4].get<double>(), cv[5].get<double>();
    cell.covariance = c;
    cell.count = jc.at("count").get<int>();
    finalize_cell(cell);  // stored covariance is already regularized
    grid.insert_cell({jc.at("index")[0].get<int>(), jc.at("index")[1].get<int>(),
                      jc.at("index")[2].get<int>()},
                     std::move(cell));
  }
  return grid;
}

void save_grid(const NdtGrid& grid, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("ndt: cannot write " + path);
  out << grid_to_json(grid);
  if (!out) throw IoError("ndt: failed writing " + path);
}

NdtGrid load_grid(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("ndt: cannot read " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return grid_from_json(text);
}

}  // namespace shuttlesim
