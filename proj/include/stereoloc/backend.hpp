#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "stereoloc/geometry.hpp"

namespace stereoloc {

using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat63 = Eigen::Matrix<double, 6, 3>;
using Mat26 = Eigen::Matrix<double, 2, 6>;
using Mat23 = Eigen::Matrix<double, 2, 3>;

/// A camera rigidly attached to the window pose frame. Camera 0 is the
/// reference camera and normally has an identity `from_body`.
struct CameraModel {
  Intrinsics intrinsics;
  Pose from_body;
};

struct Observation {
  int pose = 0;
  int landmark = 0;
  Vec2 pixel = Vec2::Zero();
  bool visible = true;
  int camera = 0;
};

struct BAProblem {
  std::vector<Pose> poses;
  std::vector<Landmark> landmarks;
  std::vector<Observation> observations;
  std::vector<CameraModel> cameras;
  std::size_t window_capacity = 50;
  /// Holds poses[0] constant to remove the gauge freedom.
  bool fix_first_pose = true;

  /// Throws Error(kInvalidInput) on out-of-range indices, an overfull window,
  /// or a landmark with fewer than two visible observations.
  void validate() const;
};

struct BAState {
  std::vector<Pose> poses;
  std::vector<Landmark> landmarks;
  double lambda = 1e-4;
  int iteration = 0;
  double cost = 0;

  static BAState initial(const BAProblem& problem);
};

/// o_ij - P(p_i, c_j); nullopt when the landmark is behind the camera.
std::optional<Vec2> residual(const BAProblem& problem, const Observation& obs, const BAState& state);

/// Sum of squared residual norms over visible, projectable observations.
double cost(const BAProblem& problem, const BAState& state);

// --- JU -------------------------------------------------------------------

struct ObservationBlock {
  int observation = 0;
  int pose = 0;
  int landmark = 0;
  int pose_param = -1;  // -1 when the pose is held fixed
  Mat26 d_pose;         // d residual / d left se(3) increment (omega, v)
  Mat23 d_landmark;     // d residual / d landmark position
  Vec2 residual;
};

struct Coupling {
  int pose_param = 0;
  Mat63 block;  // sum over the landmark's observations from this pose of Jc^T Jp
};

/// Jacobian blocks of every usable observation together with the undamped
/// normal-equation blocks they induce (B_j, C_i, E_ij and g = -J^T r).
struct Linearization {
  std::vector<ObservationBlock> blocks;
  std::vector<int> pose_param;  // pose index -> parameter block, or -1
  int num_pose_params = 0;

  std::vector<Mat6> pose_hessian;
  std::vector<Vec6> pose_gradient;
  std::vector<Eigen::Matrix3d> landmark_hessian;
  std::vector<Vec3> landmark_gradient;
  std::vector<std::vector<Coupling>> couplings;  // per landmark, sorted by pose_param

  double gradient_max_norm() const;
  /// Marquardt scaling diagonal, floored away from zero.
  Vec6 pose_damping(int param) const;
  Vec3 landmark_damping(int landmark) const;
};

inline constexpr double kMinDampingDiagonal = 1e-9;

Linearization jacobian_update(const BAProblem& problem, const BAState& state);

// --- SE -------------------------------------------------------------------

struct ReducedSystem {
  Eigen::MatrixXd schur;  // 6b x 6b, b = number of free poses
  Eigen::VectorXd rhs;
  struct LandmarkBlock {
    Eigen::Matrix3d inverse;  // (C_i + lambda diag C_i)^-1
    Vec3 solved_rhs;          // inverse * g_i
    std::vector<Coupling> weighted;  // E_ij * inverse
  };
  std::vector<LandmarkBlock> landmarks;
};

/// Damps the block diagonals multiplicatively and eliminates every landmark:
/// S = B - E C^-1 E^T. Throws Error(kNumericalFailure) naming a singular landmark.
ReducedSystem schur_eliminate(const Linearization& lin, double lambda);

// --- CFS ------------------------------------------------------------------

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// In-place lower Cholesky factor of a symmetric positive-definite matrix,
/// restricted to the row envelope (leading zeros of each row are skipped).
/// Only the lower triangle is read. Throws Error(kIndefiniteSystem).
RowMajorMatrix cholesky_factor(const Eigen::MatrixXd& spd);
/// Solves L L^T x = b with the factor from cholesky_factor.
Eigen::VectorXd cholesky_substitute(const RowMajorMatrix& lower, const Eigen::VectorXd& b);

struct Increment {
  Eigen::VectorXd poses;           // 6 per free pose, (omega, v)
  std::vector<Vec3> landmarks;
};

/// Pose increments from the reduced system, then landmark increments by
/// back-substitution.
Increment cholesky_solve(const ReducedSystem& sys);

// --- GRE ------------------------------------------------------------------

struct GainDecision {
  double rho = 0;
  bool accept = false;
  bool model_error = false;
  double lambda = 0;
  double nu = 2;
};

/// Nielsen's schedule: on accept lambda *= max(1/3, 1 - (2 rho - 1)^3), nu = 2;
/// on reject lambda *= nu, nu *= 2. A non-positive prediction forces a reject.
GainDecision gain_ratio(double cost_old, double cost_new, double predicted_reduction, double lambda,
                        double nu);

/// delta^T (lambda D delta + g) for the quadratic model of the summed squares.
double predicted_reduction(const Linearization& lin, const Increment& inc, double lambda);

/// exp(delta) * c for free poses, p + delta for landmarks.
BAState apply_increment(const BAState& state, const Linearization& lin, const Increment& inc);

// --- LM driver --------------------------------------------------------------

struct LmConfig {
  int max_iterations = 100;
  double relative_cost_tolerance = 1e-10;
  double gradient_tolerance = 1e-10;
  double max_lambda = 1e12;
  double initial_lambda = 1e-4;
  /// Absolute floor: a cost at or below this is already converged.
  double min_cost = 1e-20;
};

/// Seconds spent in each part of the solver.
struct PartTimes {
  double ju = 0;
  double se = 0;
  double cfs = 0;
  double cc = 0;
  double gre = 0;

  double sum() const { return ju + se + cfs + cc + gre; }
  PartTimes& operator+=(const PartTimes& o);
};

enum class Termination { kMaxIterations, kRelativeCostChange, kGradient, kLambda, kCost };
const char* to_string(Termination t);

struct IterationRecord {
  int iteration = 0;
  double cost = 0;       // cost after the iteration
  double lambda = 0;     // lambda used for the step
  double rho = 0;
  bool accepted = false;
};

struct LmReport {
  double initial_cost = 0;
  double final_cost = 0;
  int iterations = 0;
  int accepted = 0;
  Termination termination = Termination::kMaxIterations;
  PartTimes times;
  double wall_time = 0;
  std::vector<IterationRecord> trace;
};

struct LmResult {
  std::vector<Pose> poses;
  std::vector<Landmark> landmarks;
  LmReport report;
};

/// Iterates CC -> JU -> SE -> CFS -> GRE until a stopping rule fires.
/// Throws Error(kNumericalFailure) if damping escalation never yields a solvable step.
LmResult lm_optimize(const BAProblem& problem, const LmConfig& config = {});

/// Root-mean-square reprojection error per image coordinate (pixels) over
/// usable observations; Gaussian pixel noise of std s gives about s.
double rms_reprojection(const BAProblem& problem, const std::vector<Pose>& poses,
                        const std::vector<Landmark>& landmarks);

}  // namespace stereoloc
