#include <cmath>
#include <string>
#include <vector>

#include "stereoloc/backend.hpp"
#include "stereoloc/error.hpp"

namespace stereoloc {
namespace {

// Column of the first nonzero entry in each row of the lower triangle.
std::vector<Eigen::Index> row_envelope(const RowMajorMatrix& m) {
  std::vector<Eigen::Index> first(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Eigen::Index f = 0;
    while (f < i && m(i, f) == 0.0) ++f;
    first[static_cast<std::size_t>(i)] = f;
  }
  return first;
}

}  // namespace

RowMajorMatrix cholesky_factor(const Eigen::MatrixXd& spd) {
  if (spd.rows() != spd.cols()) throw Error(ErrorCode::kInvalidInput, "matrix is not square");
  const Eigen::Index n = spd.rows();
  RowMajorMatrix l = spd.triangularView<Eigen::Lower>();
  const auto first = row_envelope(l);

  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index fi = first[static_cast<std::size_t>(i)];
    for (Eigen::Index j = fi; j < i; ++j) {
      const Eigen::Index k0 = std::max(fi, first[static_cast<std::size_t>(j)]);
      double s = l(i, j);
      if (j > k0) s -= l.row(i).segment(k0, j - k0).dot(l.row(j).segment(k0, j - k0));
      l(i, j) = s / l(j, j);
    }
    double d = l(i, i);
    if (i > fi) d -= l.row(i).segment(fi, i - fi).squaredNorm();
    if (!(d > 0) || !std::isfinite(d)) {
      throw Error(ErrorCode::kIndefiniteSystem, "non-positive pivot at row " + std::to_string(i));
    }
    l(i, i) = std::sqrt(d);
  }
  return l;
}

Eigen::VectorXd cholesky_substitute(const RowMajorMatrix& lower, const Eigen::VectorXd& b) {
  const Eigen::Index n = lower.rows();
  const auto first = row_envelope(lower);
  Eigen::VectorXd x = b;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index fi = first[static_cast<std::size_t>(i)];
    if (i > fi) x(i) -= lower.row(i).segment(fi, i - fi).dot(x.segment(fi, i - fi));
    x(i) /= lower(i, i);
  }
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    x(i) /= lower(i, i);
    const Eigen::Index fi = first[static_cast<std::size_t>(i)];
    if (i > fi) x.segment(fi, i - fi) -= x(i) * lower.row(i).segment(fi, i - fi).transpose();
  }
  return x;
}

Increment cholesky_solve(const ReducedSystem& sys) {
  Increment inc;
  inc.poses = sys.schur.rows() > 0 ? cholesky_substitute(cholesky_factor(sys.schur), sys.rhs)
                                   : Eigen::VectorXd();
  inc.landmarks.resize(sys.landmarks.size());
  for (std::size_t i = 0; i < sys.landmarks.size(); ++i) {
    const auto& lm = sys.landmarks[i];
    Vec3 dp = lm.solved_rhs;
    for (const auto& w : lm.weighted) dp.noalias() -= w.block.transpose() * inc.poses.segment<6>(6 * w.pose_param);
    inc.landmarks[i] = dp;
  }
  return inc;
}

}  // namespace stereoloc
