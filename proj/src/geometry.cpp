#include "stereoloc/geometry.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/LU>

#include "stereoloc/error.hpp"

namespace stereoloc {

Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return s;
}

Rotation Rotation::from_matrix(const Mat3& m) {
  if (!m.allFinite() || (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9 ||
      std::abs(m.determinant() - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidInput, "matrix is not a rotation");
  }
  return Rotation(m);
}

Rotation Rotation::from_quaternion(const Eigen::Quaterniond& q) {
  return Rotation(q.normalized().toRotationMatrix());
}

Rotation Rotation::exp(const Vec3& omega) {
  const double theta2 = omega.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Mat3 w = skew(omega);
  double a, b;
  if (theta < 1e-4) {
    a = 1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0;
    b = 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta2;
  }
  return Rotation(Mat3::Identity() + a * w + b * w * w);
}

Vec3 Rotation::log() const {
  // The quaternion route stays accurate near both 0 and pi.
  Eigen::Quaterniond q(m_);
  if (q.w() < 0) q.coeffs() = -q.coeffs();
  const double sin_half = q.vec().norm();
  if (sin_half < 1e-12) return 2.0 * q.vec() / q.w();
  const double theta = 2.0 * std::atan2(sin_half, q.w());
  return q.vec() * (theta / sin_half);
}

namespace {

// V(omega) = I + b*W + c*W^2 with b = (1-cos)/theta^2, c = (theta-sin)/theta^3.
Mat3 left_jacobian(const Vec3& omega) {
  const double theta2 = omega.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Mat3 w = skew(omega);
  double b, c;
  if (theta < 1e-4) {
    b = 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0;
    c = 1.0 / 6.0 - theta2 / 120.0 + theta2 * theta2 / 5040.0;
  } else {
    b = (1.0 - std::cos(theta)) / theta2;
    c = (theta - std::sin(theta)) / (theta2 * theta);
  }
  return Mat3::Identity() + b * w + c * w * w;
}

}  // namespace

Pose se3_exp(const Vec3& omega, const Vec3& v) {
  return {Rotation::exp(omega), left_jacobian(omega) * v};
}

Vec6 se3_log(const Pose& pose) {
  const Vec3 omega = pose.rotation.log();
  Vec6 xi;
  xi.head<3>() = omega;
  xi.tail<3>() = left_jacobian(omega).partialPivLu().solve(pose.translation);
  return xi;
}

void Intrinsics::validate() const {
  if (!(fx > 0) || !(fy > 0) || width <= 0 || height <= 0 || !(cx >= 0) || !(cx < width) ||
      !(cy >= 0) || !(cy < height)) {
    throw Error(ErrorCode::kInvalidInput, "intrinsics out of range");
  }
}

StereoRig StereoRig::rectified(const Intrinsics& k, double baseline) {
  StereoRig rig;
  rig.left = k;
  rig.right = k;
  rig.right_from_left.translation = Vec3(-baseline, 0, 0);
  return rig;
}

bool StereoRig::is_rectified(double tol) const {
  const Vec3& t = right_from_left.translation;
  return (right_from_left.rotation.matrix() - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(t.y()) <= tol && std::abs(t.z()) <= tol && t.x() < 0;
}

void StereoRig::validate() const {
  left.validate();
  right.validate();
  if (!(baseline() > 0)) throw Error(ErrorCode::kInvalidInput, "stereo baseline must be positive");
}

std::optional<Vec2> project_camera(const Vec3& x_cam, const Intrinsics& k) {
  if (!(x_cam.z() > kMinProjectionDepth)) return std::nullopt;
  const double inv_z = 1.0 / x_cam.z();
  return Vec2(k.fx * x_cam.x() * inv_z + k.cx, k.fy * x_cam.y() * inv_z + k.cy);
}

Landmark triangulate_rectified(double u_left, double u_right, double v, const StereoRig& rig,
                               double min_disparity) {
  const double d = u_left - u_right;
  if (!(d > min_disparity)) {
    throw Error(ErrorCode::kInfiniteDepth, "disparity " + std::to_string(d) + " px");
  }
  const Intrinsics& k = rig.left;
  const double z = k.fx * rig.baseline() / d;
  return {(u_left - k.cx) * z / k.fx, (v - k.cy) * z / k.fy, z};
}

}  // namespace stereoloc
