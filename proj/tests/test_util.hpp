#pragma once

#include <random>
#include <set>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>

#include "stereoloc/backend.hpp"
#include "stereoloc/geometry.hpp"
#include "stereoloc/image.hpp"

namespace stereoloc::testing {

inline Vec3 random_vec(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

inline GrayImage random_image(std::mt19937_64& rng, int w, int h) {
  std::uniform_int_distribution<int> u(0, 255);
  std::vector<std::uint8_t> px(static_cast<std::size_t>(w * h));
  for (auto& p : px) p = static_cast<std::uint8_t>(u(rng));
  return GrayImage(w, h, std::move(px));
}

// Segment-test oracle: tries every start position on the radius-3 circle.
struct BruteForceFast {
  static constexpr int kCircle[16][2] = {{0, -3}, {1, -3},  {2, -2},  {3, -1}, {3, 0},   {3, 1},
                                         {2, 2},  {1, 3},   {0, 3},   {-1, 3}, {-2, 2},  {-3, 1},
                                         {-3, 0}, {-3, -1}, {-2, -2}, {-1, -3}};

  static bool is_corner(const GrayImage& img, int x, int y, int t) {
    const int c = img(x, y);
    for (int sign : {1, -1}) {
      for (int start = 0; start < 16; ++start) {
        bool all = true;
        for (int i = 0; i < 9 && all; ++i) {
          const int* o = kCircle[(start + i) % 16];
          const int d = img(x + o[0], y + o[1]) - c;
          all = sign > 0 ? d > t : d < -t;
        }
        if (all) return true;
      }
    }
    return false;
  }

  static std::set<std::pair<int, int>> corners(const GrayImage& img, int t) {
    std::set<std::pair<int, int>> out;
    for (int y = 3; y < img.height() - 3; ++y)
      for (int x = 3; x < img.width() - 3; ++x)
        if (is_corner(img, x, y, t)) out.emplace(x, y);
    return out;
  }
};

// Blocky random texture: produces many segment-test corners.
inline GrayImage block_image(std::mt19937_64& rng, int w, int h, int block) {
  std::uniform_int_distribution<int> u(0, 255);
  std::vector<int> cells(static_cast<std::size_t>((w / block + 1) * (h / block + 1)));
  for (auto& c : cells) c = u(rng);
  GrayImage img(w, h, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      img(x, y) = static_cast<std::uint8_t>(cells[static_cast<std::size_t>((y / block) * (w / block + 1) + x / block)]);
  return img;
}

/// Small BA instance: poses near the origin looking along +z, landmarks in
/// front, every landmark seen by every pose (optionally with pixel noise).
inline BAProblem random_problem(std::mt19937_64& rng, int poses, int landmarks, double noise = 0.0,
                                bool stereo = false) {
  BAProblem p;
  const Intrinsics k{400, 410, 320, 240, 640, 480};
  p.cameras.push_back({k, Pose::identity()});
  if (stereo) p.cameras.push_back({k, Pose{Rotation(), Vec3(-0.2, 0, 0)}});
  for (int j = 0; j < poses; ++j) {
    p.poses.push_back(se3_exp(random_vec(rng, 0.05), random_vec(rng, 0.3)));
  }
  std::uniform_real_distribution<double> depth(4.0, 10.0);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < landmarks; ++i) {
    Vec3 x = random_vec(rng, 2.0);
    x.z() = depth(rng);
    p.landmarks.push_back(x);
  }
  for (int j = 0; j < poses; ++j) {
    for (int i = 0; i < landmarks; ++i) {
      for (int c = 0; c < static_cast<int>(p.cameras.size()); ++c) {
        const Pose cam = p.cameras[static_cast<std::size_t>(c)].from_body * p.poses[static_cast<std::size_t>(j)];
        const auto px = project(p.landmarks[static_cast<std::size_t>(i)], cam, k);
        if (!px) continue;
        p.observations.push_back({j, i, *px + noise * Vec2(n(rng), n(rng)), true, c});
      }
    }
  }
  return p;
}

// Dense damped normal equations assembled from the Jacobian blocks alone.
inline Eigen::VectorXd dense_step(const Linearization& lin, int num_landmarks, double lambda) {
  const int np = 6 * lin.num_pose_params;
  const int n = np + 3 * num_landmarks;
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(2 * static_cast<Eigen::Index>(lin.blocks.size()), n);
  Eigen::VectorXd r(2 * static_cast<Eigen::Index>(lin.blocks.size()));
  for (std::size_t k = 0; k < lin.blocks.size(); ++k) {
    const auto& b = lin.blocks[k];
    const auto row = 2 * static_cast<Eigen::Index>(k);
    if (b.pose_param >= 0) j.block<2, 6>(row, 6 * b.pose_param) = b.d_pose;
    j.block<2, 3>(row, np + 3 * b.landmark) = b.d_landmark;
    r.segment<2>(row) = b.residual;
  }
  Eigen::MatrixXd h = j.transpose() * j;
  const Eigen::VectorXd d = h.diagonal().cwiseMax(kMinDampingDiagonal);
  h.diagonal() += lambda * d;
  return h.ldlt().solve(-j.transpose() * r);
}

inline Eigen::VectorXd stack(const Increment& inc) {
  Eigen::VectorXd out(inc.poses.size() + 3 * static_cast<Eigen::Index>(inc.landmarks.size()));
  out.head(inc.poses.size()) = inc.poses;
  for (std::size_t i = 0; i < inc.landmarks.size(); ++i)
    out.segment<3>(inc.poses.size() + 3 * static_cast<Eigen::Index>(i)) = inc.landmarks[i];
  return out;
}

}  // namespace stereoloc::testing
