#include <algorithm>
#include <string>

#include "stereoloc/backend.hpp"
#include "stereoloc/error.hpp"

namespace stereoloc {

void BAProblem::validate() const {
  if (poses.size() > window_capacity) {
    throw Error(ErrorCode::kInvalidInput, "window holds " + std::to_string(poses.size()) +
                                              " poses, capacity " + std::to_string(window_capacity));
  }
  if (cameras.empty()) throw Error(ErrorCode::kInvalidInput, "problem has no camera model");
  for (const auto& cam : cameras) cam.intrinsics.validate();
  std::vector<int> seen(landmarks.size(), 0);
  for (const auto& o : observations) {
    if (o.pose < 0 || o.pose >= static_cast<int>(poses.size()) || o.landmark < 0 ||
        o.landmark >= static_cast<int>(landmarks.size()) || o.camera < 0 ||
        o.camera >= static_cast<int>(cameras.size())) {
      throw Error(ErrorCode::kInvalidInput, "observation index out of range");
    }
    if (o.visible) ++seen[static_cast<std::size_t>(o.landmark)];
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (seen[i] < 2) {
      throw Error(ErrorCode::kInvalidInput,
                  "landmark " + std::to_string(i) + " has fewer than two visible observations");
    }
  }
}

BAState BAState::initial(const BAProblem& problem) {
  BAState s;
  s.poses = problem.poses;
  s.landmarks = problem.landmarks;
  return s;
}

std::optional<Vec2> residual(const BAProblem& problem, const Observation& obs, const BAState& state) {
  const CameraModel& cam = problem.cameras[static_cast<std::size_t>(obs.camera)];
  const Vec3 x_cam = cam.from_body * (state.poses[static_cast<std::size_t>(obs.pose)] *
                                      state.landmarks[static_cast<std::size_t>(obs.landmark)]);
  const auto px = project_camera(x_cam, cam.intrinsics);
  if (!px) return std::nullopt;
  return Vec2(obs.pixel - *px);
}

double cost(const BAProblem& problem, const BAState& state) {
  double sum = 0;
  for (const auto& obs : problem.observations) {
    if (!obs.visible) continue;
    if (auto r = residual(problem, obs, state)) sum += r->squaredNorm();
  }
  return sum;
}

double Linearization::gradient_max_norm() const {
  double m = 0;
  for (const auto& g : pose_gradient) m = std::max(m, g.cwiseAbs().maxCoeff());
  for (const auto& g : landmark_gradient) m = std::max(m, g.cwiseAbs().maxCoeff());
  return m;
}

Vec6 Linearization::pose_damping(int param) const {
  return pose_hessian[static_cast<std::size_t>(param)].diagonal().cwiseMax(kMinDampingDiagonal);
}

Vec3 Linearization::landmark_damping(int landmark) const {
  return landmark_hessian[static_cast<std::size_t>(landmark)].diagonal().cwiseMax(kMinDampingDiagonal);
}

Linearization jacobian_update(const BAProblem& problem, const BAState& state) {
  Linearization lin;
  lin.pose_param.assign(state.poses.size(), -1);
  for (std::size_t j = 0; j < state.poses.size(); ++j) {
    if (j == 0 && problem.fix_first_pose) continue;
    lin.pose_param[j] = lin.num_pose_params++;
  }
  const auto np = static_cast<std::size_t>(lin.num_pose_params);
  const auto nl = state.landmarks.size();
  lin.pose_hessian.assign(np, Mat6::Zero());
  lin.pose_gradient.assign(np, Vec6::Zero());
  lin.landmark_hessian.assign(nl, Eigen::Matrix3d::Zero());
  lin.landmark_gradient.assign(nl, Vec3::Zero());
  lin.couplings.assign(nl, {});
  lin.blocks.reserve(problem.observations.size());

  for (std::size_t k = 0; k < problem.observations.size(); ++k) {
    const Observation& obs = problem.observations[k];
    if (!obs.visible) continue;
    const CameraModel& cam = problem.cameras[static_cast<std::size_t>(obs.camera)];
    const Pose& pose = state.poses[static_cast<std::size_t>(obs.pose)];
    const Vec3 x_body = pose * state.landmarks[static_cast<std::size_t>(obs.landmark)];
    const Vec3 x_cam = cam.from_body * x_body;
    if (!(x_cam.z() > kMinProjectionDepth)) continue;

    const Intrinsics& in = cam.intrinsics;
    const double inv_z = 1.0 / x_cam.z();
    const double u = in.fx * x_cam.x() * inv_z + in.cx;
    const double v = in.fy * x_cam.y() * inv_z + in.cy;
    // Residual is o - P, so every derivative carries a minus sign.
    Mat23 d_proj;
    d_proj << -in.fx * inv_z, 0, in.fx * x_cam.x() * inv_z * inv_z,  //
        0, -in.fy * inv_z, in.fy * x_cam.y() * inv_z * inv_z;
    const Mat23 d_body = d_proj * cam.from_body.rotation.matrix();

    ObservationBlock b;
    b.observation = static_cast<int>(k);
    b.pose = obs.pose;
    b.landmark = obs.landmark;
    b.pose_param = lin.pose_param[static_cast<std::size_t>(obs.pose)];
    b.residual = obs.pixel - Vec2(u, v);
    b.d_landmark = d_body * pose.rotation.matrix();
    b.d_pose.leftCols<3>() = -d_body * skew(x_body);
    b.d_pose.rightCols<3>() = d_body;

    const auto i = static_cast<std::size_t>(obs.landmark);
    lin.landmark_hessian[i].noalias() += b.d_landmark.transpose() * b.d_landmark;
    lin.landmark_gradient[i].noalias() -= b.d_landmark.transpose() * b.residual;
    if (b.pose_param >= 0) {
      const auto j = static_cast<std::size_t>(b.pose_param);
      lin.pose_hessian[j].noalias() += b.d_pose.transpose() * b.d_pose;
      lin.pose_gradient[j].noalias() -= b.d_pose.transpose() * b.residual;
      auto& list = lin.couplings[i];
      auto it = std::find_if(list.begin(), list.end(),
                             [&](const Coupling& c) { return c.pose_param == b.pose_param; });
      if (it == list.end()) {
        list.push_back({b.pose_param, Mat63::Zero()});
        it = list.end() - 1;
      }
      it->block.noalias() += b.d_pose.transpose() * b.d_landmark;
    }
    lin.blocks.push_back(b);
  }
  for (auto& list : lin.couplings) {
    std::sort(list.begin(), list.end(),
              [](const Coupling& a, const Coupling& b) { return a.pose_param < b.pose_param; });
  }
  return lin;
}

}  // namespace stereoloc
