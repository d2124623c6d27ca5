#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Cholesky>
#include <gtest/gtest.h>

#include "stereoloc/backend.hpp"
#include "stereoloc/error.hpp"
#include "stereoloc/io.hpp"
#include "stereoloc/synthetic.hpp"
#include "test_util.hpp"

namespace sl = stereoloc;
using sl::Vec2;
using sl::Vec3;

namespace {

sl::BAProblem single_observation(const Vec3& x, const Vec2& pixel) {
  sl::BAProblem p;
  p.cameras.push_back({{100, 100, 50, 50, 100, 100}, sl::Pose::identity()});
  p.poses.push_back(sl::Pose::identity());
  p.landmarks.push_back(x);
  p.observations.push_back({0, 0, pixel, true, 0});
  return p;
}

}  // namespace

TEST(Residual, ExactProjectionIsZero) {
  const auto p = single_observation(Vec3(0.2, -0.1, 2.0), Vec2(60, 45));
  const auto r = sl::residual(p, p.observations[0], sl::BAState::initial(p));
  ASSERT_TRUE(r);
  EXPECT_LT(r->norm(), 1e-12);
}

TEST(Residual, OffsetIsReturnedVerbatim) {
  const auto p = single_observation(Vec3(0.2, -0.1, 2.0), Vec2(61, 47));
  const auto r = sl::residual(p, p.observations[0], sl::BAState::initial(p));
  ASSERT_TRUE(r);
  EXPECT_NEAR(r->x(), 1.0, 1e-12);
  EXPECT_NEAR(r->y(), 2.0, 1e-12);
}

TEST(Residual, MatchesProjectOracle) {
  std::mt19937_64 rng(2);
  auto p = sl::testing::random_problem(rng, 4, 20, 0.0, true);
  sl::BAState s = sl::BAState::initial(p);
  for (auto& pose : s.poses) pose = sl::se3_exp(sl::testing::random_vec(rng, 0.02), sl::testing::random_vec(rng, 0.05)) * pose;
  for (const auto& o : p.observations) {
    const auto& cam = p.cameras[static_cast<std::size_t>(o.camera)];
    const auto px = sl::project(s.landmarks[static_cast<std::size_t>(o.landmark)],
                                cam.from_body * s.poses[static_cast<std::size_t>(o.pose)], cam.intrinsics);
    const auto r = sl::residual(p, o, s);
    ASSERT_EQ(px.has_value(), r.has_value());
    if (r) EXPECT_LT((*r - (o.pixel - *px)).norm(), 1e-12);
  }
}

TEST(Residual, BehindCameraIsInvalid) {
  const auto p = single_observation(Vec3(0, 0, -2.0), Vec2(50, 50));
  EXPECT_FALSE(sl::residual(p, p.observations[0], sl::BAState::initial(p)));
  EXPECT_EQ(sl::cost(p, sl::BAState::initial(p)), 0.0);
}

TEST(Cost, ThreeFourFive) {
  const auto p = single_observation(Vec3(0, 0, 1.0), Vec2(53, 54));
  EXPECT_NEAR(sl::cost(p, sl::BAState::initial(p)), 25.0, 1e-12);
}

TEST(Cost, MatchesNaiveSum) {
  std::mt19937_64 rng(3);
  auto p = sl::testing::random_problem(rng, 3, 15, 2.0);
  p.observations[4].visible = false;
  const auto s = sl::BAState::initial(p);
  double sum = 0;
  for (const auto& o : p.observations) {
    if (!o.visible) continue;
    const auto px = sl::project(s.landmarks[static_cast<std::size_t>(o.landmark)], s.poses[static_cast<std::size_t>(o.pose)],
                                p.cameras[0].intrinsics);
    sum += (o.pixel - *px).squaredNorm();
  }
  EXPECT_NEAR(sl::cost(p, s), sum, 1e-9 * sum);
}

TEST(Jacobian, OpticalAxisDerivative) {
  const auto p = single_observation(Vec3(0, 0, 4.0), Vec2(50, 50));
  auto q = p;
  q.fix_first_pose = false;
  const auto lin = sl::jacobian_update(q, sl::BAState::initial(q));
  ASSERT_EQ(lin.blocks.size(), 1u);
  const sl::Mat23 dproj = -lin.blocks[0].d_landmark;  // residual is o - P
  EXPECT_NEAR(dproj(0, 0), 100.0 / 4.0, 1e-12);
  EXPECT_NEAR(dproj(0, 1), 0.0, 1e-12);
  EXPECT_NEAR(dproj(1, 1), 100.0 / 4.0, 1e-12);
}

TEST(Jacobian, InvisibleObservationHasNoBlock) {
  auto p = single_observation(Vec3(0, 0, 4.0), Vec2(50, 50));
  p.observations[0].visible = false;
  EXPECT_TRUE(sl::jacobian_update(p, sl::BAState::initial(p)).blocks.empty());
}

TEST(Jacobian, MatchesCentralDifferences) {
  std::mt19937_64 rng(4);
  auto p = sl::testing::random_problem(rng, 5, 20, 1.0, true);
  p.fix_first_pose = false;
  const auto s = sl::BAState::initial(p);
  const auto lin = sl::jacobian_update(p, s);
  const double h = 1e-6;
  for (std::size_t k = 0; k < lin.blocks.size(); k += 3) {
    const auto& b = lin.blocks[k];
    const auto& o = p.observations[static_cast<std::size_t>(b.observation)];
    sl::Mat26 fd_pose;
    for (int a = 0; a < 6; ++a) {
      sl::Vec6 d = sl::Vec6::Zero();
      d[a] = h;
      sl::BAState sp = s, sm = s;
      sp.poses[static_cast<std::size_t>(b.pose)] = sl::se3_exp(d) * s.poses[static_cast<std::size_t>(b.pose)];
      sm.poses[static_cast<std::size_t>(b.pose)] = sl::se3_exp(sl::Vec6(-d)) * s.poses[static_cast<std::size_t>(b.pose)];
      fd_pose.col(a) = (*sl::residual(p, o, sp) - *sl::residual(p, o, sm)) / (2 * h);
    }
    sl::Mat23 fd_lm;
    for (int a = 0; a < 3; ++a) {
      sl::BAState sp = s, sm = s;
      sp.landmarks[static_cast<std::size_t>(b.landmark)][a] += h;
      sm.landmarks[static_cast<std::size_t>(b.landmark)][a] -= h;
      fd_lm.col(a) = (*sl::residual(p, o, sp) - *sl::residual(p, o, sm)) / (2 * h);
    }
    EXPECT_LE((fd_pose - b.d_pose).norm(), 1e-5 * b.d_pose.norm()) << "block " << k;
    EXPECT_LE((fd_lm - b.d_landmark).norm(), 1e-5 * b.d_landmark.norm()) << "block " << k;
  }
}

TEST(Schur, UnitLandmarkBlock) {
  std::mt19937_64 rng(5);
  sl::Linearization lin;
  lin.num_pose_params = 1;
  const sl::Mat6 a = sl::Mat6::Random();
  lin.pose_hessian = {a * a.transpose() + 10 * sl::Mat6::Identity()};
  lin.pose_gradient = {sl::Vec6::Random()};
  lin.landmark_hessian = {Eigen::Matrix3d::Identity()};
  lin.landmark_gradient = {Vec3::Random()};
  const sl::Mat63 e = sl::Mat63::Random();
  lin.couplings = {{{0, e}}};
  const auto sys = sl::schur_eliminate(lin, 0.0);
  EXPECT_LT((sys.schur - (lin.pose_hessian[0] - e * e.transpose())).norm(), 1e-12);
  EXPECT_LT((sys.rhs - (lin.pose_gradient[0] - e * lin.landmark_gradient[0])).norm(), 1e-12);
}

TEST(Schur, ZeroCouplingLeavesPoseBlock) {
  sl::Linearization lin;
  lin.num_pose_params = 2;
  const sl::Mat6 a = sl::Mat6::Random();
  lin.pose_hessian = {a * a.transpose() + sl::Mat6::Identity(), 2 * sl::Mat6::Identity()};
  lin.pose_gradient = {sl::Vec6::Ones(), sl::Vec6::Zero()};
  lin.landmark_hessian = {3 * Eigen::Matrix3d::Identity()};
  lin.landmark_gradient = {Vec3::Ones()};
  lin.couplings = {{}};
  const auto sys = sl::schur_eliminate(lin, 0.0);
  EXPECT_TRUE((sys.schur.block<6, 6>(0, 0) == lin.pose_hessian[0]));
  EXPECT_TRUE((sys.schur.block<6, 6>(6, 6) == lin.pose_hessian[1]));
  EXPECT_TRUE((sys.schur.block<6, 6>(0, 6).isZero(0)));
}

TEST(Schur, SingularLandmarkNamesIt) {
  sl::Linearization lin;
  lin.landmark_hessian = {Eigen::Matrix3d::Identity(), Eigen::Matrix3d::Zero()};
  lin.landmark_gradient = {Vec3::Zero(), Vec3::Zero()};
  lin.couplings = {{}, {}};
  try {
    sl::schur_eliminate(lin, 0.0);
    FAIL();
  } catch (const sl::Error& e) {
    EXPECT_EQ(e.code(), sl::ErrorCode::kNumericalFailure);
    EXPECT_NE(std::string(e.what()).find("landmark 1"), std::string::npos);
  }
}

TEST(Schur, MatchesDenseSolve) {
  std::mt19937_64 rng(6);
  for (int n = 0; n < 50; ++n) {
    auto p = sl::testing::random_problem(rng, 2 + n % 4, 5 + n % 20, 1.0, n % 2 == 0);
    const auto lin = sl::jacobian_update(p, sl::BAState::initial(p));
    const double lambda = std::pow(10.0, -4 + n % 6);
    const Eigen::VectorXd got = sl::testing::stack(sl::cholesky_solve(sl::schur_eliminate(lin, lambda)));
    const Eigen::VectorXd ref = sl::testing::dense_step(lin, static_cast<int>(p.landmarks.size()), lambda);
    EXPECT_LE((got - ref).norm(), 1e-8 * ref.norm()) << "instance " << n;
  }
}

TEST(Cholesky, IdentityAndDiagonal) {
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(6);
  e1[0] = 1;
  EXPECT_EQ(sl::cholesky_substitute(sl::cholesky_factor(Eigen::MatrixXd::Identity(6, 6)), e1), e1);
  const Eigen::VectorXd d = (Eigen::VectorXd(4) << 2, 4, 8, 0.5).finished();
  const Eigen::VectorXd b = (Eigen::VectorXd(4) << 1, 1, 1, 1).finished();
  const Eigen::VectorXd x = sl::cholesky_substitute(sl::cholesky_factor(d.asDiagonal().toDenseMatrix()), b);
  EXPECT_LT((x - b.cwiseQuotient(d)).norm(), 1e-15);
}

TEST(Cholesky, MatchesDenseSolver) {
  std::mt19937_64 rng(7);
  for (int n = 0; n < 30; ++n) {
    const int size = 6 * (1 + n % 8);
    Eigen::MatrixXd a = Eigen::MatrixXd::Random(size, size);
    if (n % 2) {  // banded, to exercise the envelope
      for (int i = 0; i < size; ++i)
        for (int j = 0; j < size; ++j)
          if (std::abs(i - j) > 7) a(i, j) = 0;
    }
    const Eigen::MatrixXd spd = a * a.transpose() + size * Eigen::MatrixXd::Identity(size, size);
    const Eigen::VectorXd b = Eigen::VectorXd::Random(size);
    const Eigen::VectorXd ref = spd.llt().solve(b);
    const Eigen::VectorXd got = sl::cholesky_substitute(sl::cholesky_factor(spd), b);
    EXPECT_LE((got - ref).norm(), 1e-10 * ref.norm());
  }
}

TEST(Cholesky, IndefiniteThrows) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(3, 3);
  m(2, 2) = -1;
  try {
    sl::cholesky_factor(m);
    FAIL();
  } catch (const sl::Error& e) {
    EXPECT_EQ(e.code(), sl::ErrorCode::kIndefiniteSystem);
  }
}

TEST(Gain, PerfectPredictionAccepts) {
  const auto d = sl::gain_ratio(10.0, 4.0, 6.0, 1e-3, 2);
  EXPECT_DOUBLE_EQ(d.rho, 1.0);
  EXPECT_TRUE(d.accept);
}

TEST(Gain, CostIncreaseRejectsAndGrowsLambda) {
  const auto d = sl::gain_ratio(10.0, 12.0, 6.0, 1e-3, 2);
  EXPECT_LT(d.rho, 0);
  EXPECT_FALSE(d.accept);
  EXPECT_DOUBLE_EQ(d.lambda, 2e-3);
  EXPECT_DOUBLE_EQ(d.nu, 4);
  const auto again = sl::gain_ratio(10.0, 12.0, 6.0, d.lambda, d.nu);
  EXPECT_DOUBLE_EQ(again.lambda, 8e-3);
}

TEST(Gain, NonPositivePredictionIsModelError) {
  const auto d = sl::gain_ratio(10.0, 5.0, 0.0, 1.0, 2);
  EXPECT_TRUE(d.model_error);
  EXPECT_FALSE(d.accept);
}

TEST(Gain, UnitRhoShrinksLambdaByThird) {
  double lambda = 1.0, nu = 2, cost = 100;
  for (int i = 1; i <= 8; ++i) {
    const auto d = sl::gain_ratio(cost, cost - 1, 1.0, lambda, nu);
    ASSERT_TRUE(d.accept);
    EXPECT_NEAR(d.lambda, std::pow(1.0 / 3.0, i), 1e-15);
    lambda = d.lambda;
    nu = d.nu;
    cost -= 1;
  }
}

TEST(Lm, NoiselessWindowConverges) {
  sl::SceneConfig c;
  c.frames = 10;
  c.landmarks = 200;
  const auto scene = sl::generate_scene(c);
  auto wp = sl::make_window_problem(scene, 0, 10);
  const auto truth = wp.problem.poses;
  const auto truth_lm = wp.problem.landmarks;
  std::mt19937_64 rng(1);
  sl::perturb(wp.problem, 0.01, rng);
  const auto r = sl::lm_optimize(wp.problem);
  EXPECT_LT(r.report.final_cost, 1e-12);
  for (std::size_t j = 0; j < truth.size(); ++j) {
    EXPECT_LT((r.poses[j].translation - truth[j].translation).norm(), 1e-6);
    EXPECT_LT((r.poses[j].rotation * truth[j].rotation.inverse()).log().norm(), 1e-6);
  }
  EXPECT_EQ(r.poses[0].translation, wp.problem.poses[0].translation);  // gauge pose untouched
  EXPECT_EQ(r.report.accepted, static_cast<int>(r.report.trace.size()) -
                                   static_cast<int>(std::count_if(r.report.trace.begin(), r.report.trace.end(),
                                                                  [](const auto& t) { return !t.accepted; })));
}

TEST(Lm, OptimalInputStopsImmediately) {
  sl::SceneConfig c;
  c.frames = 5;
  c.landmarks = 150;
  const auto wp = sl::make_window_problem(sl::generate_scene(c), 0, 5);
  const auto r = sl::lm_optimize(wp.problem);
  EXPECT_LE(r.report.iterations, 2);
  EXPECT_LT(r.report.final_cost, 1e-12);
}

TEST(Lm, NoisyWindowRmsNearNoise) {
  sl::SceneConfig c;
  c.frames = 10;
  c.landmarks = 300;
  c.pixel_noise = 1.0;
  const auto scene = sl::generate_scene(c);
  auto wp = sl::make_window_problem(scene, 0, 10);
  std::mt19937_64 rng(2);
  sl::perturb(wp.problem, 0.01, rng);
  const auto r = sl::lm_optimize(wp.problem);
  const double rms = sl::rms_reprojection(wp.problem, r.poses, r.landmarks);
  EXPECT_LE(rms, 1.2);
  EXPECT_GT(rms, 0.8);
  EXPECT_LE(r.report.final_cost, r.report.initial_cost);
}

TEST(Lm, PartTimesBoundedByWallTime) {
  std::mt19937_64 rng(8);
  const auto p = sl::testing::random_problem(rng, 5, 40, 1.0);
  const auto r = sl::lm_optimize(p);
  EXPECT_GE(r.report.times.ju, 0);
  EXPECT_LE(r.report.times.sum(), r.report.wall_time * 1.01 + 1e-4);
}

TEST(Lm, RejectsInvalidProblem) {
  auto p = single_observation(Vec3(0, 0, 2), Vec2(50, 50));
  EXPECT_THROW(sl::lm_optimize(p), sl::Error);  // one observation per landmark
  p.observations.push_back({3, 0, Vec2(50, 50), true, 0});
  EXPECT_THROW(sl::lm_optimize(p), sl::Error);
}

TEST(Snapshot, RoundTrip) {
  std::mt19937_64 rng(9);
  auto p = sl::testing::random_problem(rng, 3, 10, 0.5, true);
  p.observations[2].visible = false;
  std::stringstream s;
  sl::write_snapshot(s, p);
  const auto back = sl::read_snapshot(s);
  ASSERT_EQ(back.poses.size(), p.poses.size());
  ASSERT_EQ(back.landmarks.size(), p.landmarks.size());
  ASSERT_EQ(back.cameras.size(), 2u);
  ASSERT_EQ(back.observations.size(), p.observations.size());
  for (std::size_t j = 0; j < p.poses.size(); ++j) {
    EXPECT_LT((back.poses[j].translation - p.poses[j].translation).norm(), 1e-12);
    EXPECT_LT((back.poses[j].rotation.matrix() - p.poses[j].rotation.matrix()).norm(), 1e-12);
  }
  EXPECT_FALSE(back.observations[2].visible);
  EXPECT_EQ(back.observations[5].camera, p.observations[5].camera);
  EXPECT_LT(std::abs(sl::cost(back, sl::BAState::initial(back)) - sl::cost(p, sl::BAState::initial(p))), 1e-6);
}

TEST(Snapshot, MalformedInputThrows) {
  std::istringstream bad("2 1 5\n1 2\n");
  EXPECT_THROW(sl::read_snapshot(bad), sl::Error);
}
