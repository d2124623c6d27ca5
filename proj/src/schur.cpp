#include <Eigen/Cholesky>

#include "stereoloc/backend.hpp"
#include "stereoloc/error.hpp"

namespace stereoloc {

ReducedSystem schur_eliminate(const Linearization& lin, double lambda) {
  const int n = 6 * lin.num_pose_params;
  ReducedSystem sys;
  sys.schur = Eigen::MatrixXd::Zero(n, n);
  sys.rhs = Eigen::VectorXd::Zero(n);

  for (int j = 0; j < lin.num_pose_params; ++j) {
    Mat6 b = lin.pose_hessian[static_cast<std::size_t>(j)];
    b.diagonal() += lambda * lin.pose_damping(j);
    sys.schur.block<6, 6>(6 * j, 6 * j) = b;
    sys.rhs.segment<6>(6 * j) = lin.pose_gradient[static_cast<std::size_t>(j)];
  }

  sys.landmarks.resize(lin.landmark_hessian.size());
  for (std::size_t i = 0; i < lin.landmark_hessian.size(); ++i) {
    Eigen::Matrix3d c = lin.landmark_hessian[i];
    c.diagonal() += lambda * lin.landmark_damping(static_cast<int>(i));
    Eigen::LLT<Eigen::Matrix3d> llt(c);
    auto& out = sys.landmarks[i];
    if (llt.info() == Eigen::Success) out.inverse = llt.solve(Eigen::Matrix3d::Identity());
    if (llt.info() != Eigen::Success || !out.inverse.allFinite()) {
      throw Error(ErrorCode::kNumericalFailure,
                  "landmark " + std::to_string(i) + " block is singular at lambda " + std::to_string(lambda));
    }
    out.solved_rhs = out.inverse * lin.landmark_gradient[i];

    const auto& couplings = lin.couplings[i];
    out.weighted.resize(couplings.size());
    for (std::size_t a = 0; a < couplings.size(); ++a) {
      out.weighted[a].pose_param = couplings[a].pose_param;
      out.weighted[a].block.noalias() = couplings[a].block * out.inverse;
    }
    // Couplings are sorted by pose, so row >= col fills the lower triangle.
    for (std::size_t a = 0; a < couplings.size(); ++a) {
      const int ra = 6 * couplings[a].pose_param;
      sys.rhs.segment<6>(ra).noalias() -= out.weighted[a].block * lin.landmark_gradient[i];
      for (std::size_t b = 0; b <= a; ++b) {
        const int cb = 6 * couplings[b].pose_param;
        sys.schur.block<6, 6>(ra, cb).noalias() -= out.weighted[a].block * couplings[b].block.transpose();
      }
    }
  }
  sys.schur.triangularView<Eigen::StrictlyUpper>() = sys.schur.transpose();
  return sys;
}

}  // namespace stereoloc
