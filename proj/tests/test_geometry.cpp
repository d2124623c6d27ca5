#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "stereoloc/calibration.hpp"
#include "stereoloc/error.hpp"
#include "stereoloc/geometry.hpp"
#include "test_util.hpp"

namespace sl = stereoloc;
using sl::Vec2;
using sl::Vec3;

TEST(Se3, ZeroTangentIsIdentity) {
  const sl::Pose p = sl::se3_exp(Vec3::Zero(), Vec3::Zero());
  EXPECT_TRUE(p.rotation.matrix().isApprox(sl::Mat3::Identity(), 0.0));
  EXPECT_EQ(p.translation, Vec3::Zero());
}

TEST(Se3, QuarterTurnAboutZMapsXToY) {
  const sl::Pose p = sl::se3_exp(Vec3(0, 0, std::numbers::pi / 2), Vec3::Zero());
  EXPECT_LT((p.rotation * Vec3::UnitX() - Vec3::UnitY()).norm(), 1e-15);
}

TEST(Se3, LogInvertsExp) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi * 0.999);
  for (int n = 0; n < 500; ++n) {
    Vec3 omega = sl::testing::random_vec(rng, 1.0).normalized() * angle(rng);
    if (n % 50 == 0) omega *= 1e-9;  // series branch
    const Vec3 v = sl::testing::random_vec(rng, 5.0);
    sl::Vec6 xi;
    xi << omega, v;
    EXPECT_LT((sl::se3_log(sl::se3_exp(omega, v)) - xi).norm(), 1e-9) << "sample " << n;
  }
}

TEST(Rotation, FromMatrixRejectsNonOrthonormal) {
  sl::Mat3 m = sl::Mat3::Identity();
  m(0, 1) = 1e-3;
  EXPECT_THROW(sl::Rotation::from_matrix(m), sl::Error);
}

TEST(Rotation, SmallAngleExpMatchesFirstOrder) {
  const Vec3 w(1e-10, -2e-10, 3e-10);
  const sl::Mat3 expected = sl::Mat3::Identity() + sl::skew(w);
  EXPECT_LT((sl::Rotation::exp(w).matrix() - expected).norm(), 1e-19);
}

TEST(Project, OpticalAxisHitsPrincipalPoint) {
  const sl::Intrinsics k{100, 100, 640, 360, 1280, 720};
  const auto px = sl::project(Vec3(0, 0, 1), sl::Pose::identity(), k);
  ASSERT_TRUE(px);
  EXPECT_EQ(*px, Vec2(640, 360));
}

TEST(Project, PinholeRatio) {
  const sl::Intrinsics k{100, 100, 0, 0, 100, 100};
  const auto px = sl::project(Vec3(1, 0, 2), sl::Pose::identity(), k);
  ASSERT_TRUE(px);
  EXPECT_DOUBLE_EQ(px->x(), 50.0);
  EXPECT_DOUBLE_EQ(px->y(), 0.0);
}

TEST(Project, BehindCameraIsFlagged) {
  const sl::Intrinsics k{100, 100, 0, 0, 100, 100};
  EXPECT_FALSE(sl::project(Vec3(0, 0, -1), sl::Pose::identity(), k));
  EXPECT_FALSE(sl::project(Vec3(0, 0, 0), sl::Pose::identity(), k));
}

TEST(Triangulate, ClosedFormDepth) {
  const sl::Intrinsics k{700, 700, 640, 360, 1280, 720};
  const auto rig = sl::StereoRig::rectified(k, 0.12);
  const Vec3 x = sl::triangulate_rectified(650.0, 640.0, 360.0, rig);
  EXPECT_NEAR(x.z(), 8.4, 1e-12);
}

TEST(Triangulate, ZeroDisparityIsInfinite) {
  const sl::Intrinsics k{700, 700, 640, 360, 1280, 720};
  const auto rig = sl::StereoRig::rectified(k, 0.12);
  try {
    sl::triangulate_rectified(600.0, 600.0, 100.0, rig);
    FAIL() << "expected a throw";
  } catch (const sl::Error& e) {
    EXPECT_EQ(e.code(), sl::ErrorCode::kInfiniteDepth);
  }
  EXPECT_THROW(sl::triangulate_rectified(600.4, 600.0, 100.0, rig), sl::Error);
}

TEST(Triangulate, ProjectionRoundTrip) {
  std::mt19937_64 rng(5);
  const sl::Intrinsics k{700, 700, 640, 360, 1280, 720};
  const auto rig = sl::StereoRig::rectified(k, 0.12);
  std::uniform_real_distribution<double> depth(1.0, 40.0);
  for (int n = 0; n < 200; ++n) {
    Vec3 x = sl::testing::random_vec(rng, 3.0);
    x.z() = depth(rng);
    const auto l = sl::project(x, sl::Pose::identity(), rig.left);
    const auto r = sl::project(x, rig.right_from_left, rig.right);
    ASSERT_TRUE(l && r);
    EXPECT_NEAR(l->y(), r->y(), 1e-9);
    const Vec3 back = sl::triangulate_rectified(l->x(), r->x(), l->y(), rig);
    EXPECT_LT((back - x).norm(), 1e-9);
  }
}

TEST(Calibration, ParsesRectifiedRig) {
  std::istringstream in(
      "# test rig\n"
      "left.fx = 450\nleft.fy = 451\nleft.cx = 320\nleft.cy = 240\nleft.width = 640\nleft.height = 480\n"
      "right.fx = 450\nright.fy = 451\nright.cx = 320\nright.cy = 240\nright.width = 640\nright.height = 480\n"
      "baseline = 0.12\n");
  const sl::StereoRig rig = sl::parse_calibration(in);
  EXPECT_DOUBLE_EQ(rig.left.fy, 451);
  EXPECT_DOUBLE_EQ(rig.baseline(), 0.12);
  EXPECT_TRUE(rig.is_rectified());
}

TEST(Calibration, RoundTripIsExact) {
  const auto rig = sl::StereoRig::rectified({458.654, 457.296, 367.215, 248.375, 752, 480}, 0.110078);
  std::stringstream s;
  sl::write_calibration(s, rig);
  const auto back = sl::parse_calibration(s);
  EXPECT_EQ(back.left.fx, rig.left.fx);
  EXPECT_EQ(back.right.cy, rig.right.cy);
  EXPECT_EQ(back.baseline(), rig.baseline());
}

TEST(Calibration, RejectsMissingKeysAndConflicts) {
  std::istringstream missing("left.fx = 450\n");
  EXPECT_THROW(sl::parse_calibration(missing), sl::Error);
  std::istringstream conflict(
      "left.fx = 450\nleft.fy = 450\nleft.cx = 320\nleft.cy = 240\nleft.width = 640\nleft.height = 480\n"
      "right.fx = 450\nright.fy = 450\nright.cx = 320\nright.cy = 240\nright.width = 640\nright.height = 480\n"
      "baseline = 0.2\nright_from_left.rotation = 1 0 0 0 1 0 0 0 1\nright_from_left.translation = -0.1 0 0\n");
  EXPECT_THROW(sl::parse_calibration(conflict), sl::Error);
}
