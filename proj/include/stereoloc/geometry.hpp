#pragma once

#include <optional>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace stereoloc {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;

/// Element of SO(3). Always orthonormal with determinant +1.
class Rotation {
 public:
  Rotation() : m_(Mat3::Identity()) {}

  /// Throws Error(kInvalidInput) unless `m` is a rotation to 1e-9.
  static Rotation from_matrix(const Mat3& m);
  /// Rodrigues exponential of an axis-angle vector (radians).
  static Rotation exp(const Vec3& omega);
  static Rotation from_quaternion(const Eigen::Quaterniond& q);

  /// Axis-angle vector with angle in [0, pi].
  Vec3 log() const;
  const Mat3& matrix() const { return m_; }
  Eigen::Quaterniond quaternion() const { return Eigen::Quaterniond(m_); }
  Rotation inverse() const { return Rotation(m_.transpose()); }

  Rotation operator*(const Rotation& other) const { return Rotation(m_ * other.m_); }
  Vec3 operator*(const Vec3& v) const { return m_ * v; }

 private:
  explicit Rotation(const Mat3& m) : m_(m) {}
  Mat3 m_;
};

/// Rigid transform. World-to-camera convention: x_cam = R * x_world + t.
struct Pose {
  Rotation rotation;
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }

  Vec3 operator*(const Vec3& p) const { return rotation * p + translation; }
  Pose operator*(const Pose& other) const {
    return {rotation * other.rotation, rotation * other.translation + translation};
  }
  Pose inverse() const {
    Rotation rt = rotation.inverse();
    return {rt, -(rt * translation)};
  }
  /// Camera center in the frame the pose maps from.
  Vec3 center() const { return -(rotation.inverse() * translation); }
};

/// Tangent vectors are ordered (omega, v).
Pose se3_exp(const Vec3& omega, const Vec3& v);
inline Pose se3_exp(const Vec6& xi) { return se3_exp(xi.head<3>(), xi.tail<3>()); }
Vec6 se3_log(const Pose& pose);

using Landmark = Vec3;

struct Intrinsics {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;

  /// Throws Error(kInvalidInput) when the invariants fail.
  void validate() const;
  bool contains(const Vec2& px, double margin = 0.0) const {
    return px.x() >= margin && px.y() >= margin && px.x() <= width - 1 - margin &&
           px.y() <= height - 1 - margin;
  }
  Vec3 unproject(const Vec2& px) const {
    return {(px.x() - cx) / fx, (px.y() - cy) / fy, 1.0};
  }
};

struct StereoRig {
  Intrinsics left;
  Intrinsics right;
  Pose right_from_left;

  static StereoRig rectified(const Intrinsics& k, double baseline);

  double baseline() const { return right_from_left.translation.norm(); }
  /// Identity relative rotation and translation along -x (right camera at +x).
  bool is_rectified(double tol = 1e-9) const;
  void validate() const;
};

inline constexpr double kMinProjectionDepth = 1e-6;

/// Pinhole projection of a camera-frame point; nullopt when Z <= kMinProjectionDepth.
std::optional<Vec2> project_camera(const Vec3& x_cam, const Intrinsics& k);

/// Projects a world landmark through a world-to-camera pose.
inline std::optional<Vec2> project(const Landmark& p, const Pose& c, const Intrinsics& k) {
  return project_camera(c * p, k);
}

/// Depth from disparity on a rectified pair. Result is in the left camera frame.
/// Throws Error(kInfiniteDepth) when u_left - u_right <= min_disparity.
Landmark triangulate_rectified(double u_left, double u_right, double v, const StereoRig& rig,
                               double min_disparity = 0.5);

Mat3 skew(const Vec3& v);

}  // namespace stereoloc
