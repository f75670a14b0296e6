#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <vector>

namespace shuttlesim {

using Point3 = Eigen::Vector3d;
using Transform = Eigen::Isometry3d;

// Normalize an angle into (-pi, pi]. Throws std::invalid_argument on
// non-finite input.
double normalize_angle(double theta);

// Rigid body pose: translation in meters plus intrinsic z-y-x Euler angles
// in radians. The rotation is built as R = Rz(yaw) * Ry(pitch) * Rx(roll),
// i.e. yaw about z first, then pitch about the new y, then roll about the
// new x. Angles are kept normalized to (-pi, pi].
struct Pose6 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;

  Pose6() = default;
  Pose6(double x_, double y_, double z_, double roll_, double pitch_, double yaw_);

  Eigen::Vector3d translation() const { return {x, y, z}; }

  bool operator==(const Pose6&) const = default;
};

enum class Frame { Sensor, Map, World };

// Ordered list of 3D points tagged with the frame they are expressed in.
// Iteration order is the storage order and is deterministic.
struct PointCloud {
  std::vector<Point3> points;
  Frame frame = Frame::Sensor;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

// R = Rz(yaw) * Ry(pitch) * Rx(roll); translation column (x, y, z).
Transform pose_to_transform(const Pose6& p);

// Matrix product a * b of two rigid transforms.
Transform compose(const Transform& a, const Transform& b);

// Pose-level composition: transform_to_pose(Ta * Tb). Away from gimbal lock
// this is exact up to Euler round-trip precision (~1e-9).
Pose6 compose(const Pose6& a, const Pose6& b);

// Exact rigid inverse (R^T, -R^T t); never a general matrix inversion.
Transform invert(const Transform& t);

Point3 transform_point(const Transform& t, const Point3& p);

// Euler extraction result. gimbal_lock is set when |pitch| is within 1e-6
// of pi/2; in that case roll is fixed to 0 and yaw absorbs the remaining
// in-plane rotation.
struct EulerPose {
  Pose6 pose;
  bool gimbal_lock = false;
};

// Recover the z-y-x Euler pose from a rigid transform. Pitch is returned in
// [-pi/2, pi/2]; pose_to_transform(result.pose) reproduces t to ~1e-9 away
// from the gimbal-lock region.
EulerPose transform_to_pose(const Transform& t);

}  // namespace shuttlesim
