#include "shuttlesim/geom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace shuttlesim {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kGimbalLockTol = 1e-6;
}  // namespace

double normalize_angle(double theta) {
  if (!std::isfinite(theta)) {
    throw std::invalid_argument("normalize_angle: non-finite angle");
  }
  double a = std::fmod(theta, 2.0 * kPi);
  if (a <= -kPi) {
    a += 2.0 * kPi;
  } else if (a > kPi) {
    a -= 2.0 * kPi;
  }
  return a;
}

Pose6::Pose6(double x_, double y_, double z_, double roll_, double pitch_, double yaw_)
    : x(x_),
      y(y_),
      z(z_),
      roll(normalize_angle(roll_)),
      pitch(normalize_angle(pitch_)),
      yaw(normalize_angle(yaw_)) {
  if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z)) {
    throw std::invalid_argument("Pose6: non-finite translation");
  }
}

Transform pose_to_transform(const Pose6& p) {
  Transform t = Transform::Identity();
  t.linear() = (Eigen::AngleAxisd(p.yaw, Eigen::Vector3d::UnitZ()) *
                Eigen::AngleAxisd(p.pitch, Eigen::Vector3d::UnitY()) *
                Eigen::AngleAxisd(p.roll, Eigen::Vector3d::UnitX()))
                   .toRotationMatrix();
  t.translation() = Eigen::Vector3d(p.x, p.y, p.z);
  return t;
}

Transform compose(const Transform& a, const Transform& b) { return a * b; }

Pose6 compose(const Pose6& a, const Pose6& b) {
  return transform_to_pose(pose_to_transform(a) * pose_to_transform(b)).pose;
}

Transform invert(const Transform& t) {
  Transform inv = Transform::Identity();
  inv.linear() = t.linear().transpose();
  inv.translation() = -(t.linear().transpose() * t.translation());
  return inv;
}

Point3 transform_point(const Transform& t, const Point3& p) { return t * p; }

EulerPose transform_to_pose(const Transform& t) {
  const Eigen::Matrix3d& r = t.linear();
  const Eigen::Vector3d& tr = t.translation();

  EulerPose out;
  out.pose.x = tr.x();
  out.pose.y = tr.y();
  out.pose.z = tr.z();

  // R(2,0) = -sin(pitch) and hypot(R(2,1), R(2,2)) = |cos(pitch)| for the
  // z-y-x sequence. The atan2 form stays well conditioned at the poles,
  // where asin of a clamped sine loses half the significant digits.
  const double sp = std::clamp(-r(2, 0), -1.0, 1.0);
  const double pitch = std::atan2(sp, std::hypot(r(2, 1), r(2, 2)));

  if (std::abs(std::abs(pitch) - kPi / 2.0) < kGimbalLockTol) {
    // cos(pitch) ~ 0: roll and yaw are coupled. Convention: roll = 0, yaw
    // carries the full in-plane rotation. With pitch = +-pi/2 and roll = 0,
    // R(0,1) = -sin(yaw) and R(1,1) = cos(yaw).
    out.gimbal_lock = true;
    out.pose.roll = 0.0;
    out.pose.pitch = pitch;
    out.pose.yaw = normalize_angle(std::atan2(-r(0, 1), r(1, 1)));
    return out;
  }

  out.pose.roll = normalize_angle(std::atan2(r(2, 1), r(2, 2)));
  out.pose.pitch = pitch;
  out.pose.yaw = normalize_angle(std::atan2(r(1, 0), r(0, 0)));
  return out;
}

}  // namespace shuttlesim
