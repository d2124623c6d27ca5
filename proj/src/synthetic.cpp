#include "stereoloc/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>

#include "stereoloc/error.hpp"

namespace stereoloc {
namespace {

Rotation head_motion(double t, double amplitude) {
  const Rotation yaw = Rotation::exp(Vec3(0, amplitude * std::sin(0.5 * t), 0));
  const Rotation pitch = Rotation::exp(Vec3(0.5 * amplitude * std::sin(0.7 * t + 0.3), 0, 0));
  const Rotation roll = Rotation::exp(Vec3(0, 0, 0.3 * amplitude * std::sin(1.1 * t + 1.0)));
  return yaw * pitch * roll;
}

Vec3 center_path(const SceneConfig& c, double t) {
  switch (c.shape) {
    case TrajectoryShape::kSideways:
      return {c.speed * t, 0.1 * std::sin(0.8 * t), 0.2 * std::sin(0.5 * t)};
    case TrajectoryShape::kForward:
      break;
  }
  return {0.5 * std::sin(0.6 * t), 0.15 * std::sin(0.9 * t), c.speed * t};
}

// Pose of the path at time t, world-to-camera.
Pose path_pose(const SceneConfig& c, double t) {
  const Rotation world_from_cam = head_motion(t, c.rotation_amplitude);
  const Rotation cam_from_world = world_from_cam.inverse();
  return {cam_from_world, -(cam_from_world * center_path(c, t))};
}

}  // namespace

Pose SyntheticScene::pose_at(double t) const { return path_pose(config, t); }

std::vector<const SceneObservation*> SyntheticScene::frame_observations(int frame) const {
  auto lo = std::lower_bound(observations.begin(), observations.end(), frame,
                             [](const SceneObservation& o, int f) { return o.frame < f; });
  std::vector<const SceneObservation*> out;
  for (auto it = lo; it != observations.end() && it->frame == frame; ++it) out.push_back(&*it);
  return out;
}

SyntheticScene generate_scene(const SceneConfig& config) {
  if (config.frames < 1 || config.landmarks < 1 || !(config.frame_rate > 0) || !(config.gyro_rate > 0)) {
    throw Error(ErrorCode::kGeneration, "scene needs frames, landmarks and positive rates");
  }
  config.intrinsics.validate();

  SyntheticScene scene;
  scene.config = config;
  scene.rig = StereoRig::rectified(config.intrinsics, config.baseline);
  std::mt19937_64 rng(config.seed);

  const double duration = (config.frames - 1) / config.frame_rate;
  Vec3 lo = config.box_min, hi = config.box_max;
  if (!(hi.z() > lo.z())) {
    if (config.shape == TrajectoryShape::kForward) {
      hi.z() = config.speed * duration + 25.0;
    } else {
      hi.z() = lo.z() + 12.0;
      hi.x() += config.speed * duration;
    }
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  // Separate stream so texture settings never move landmarks or noise.
  std::mt19937_64 texture_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  scene.landmarks.resize(static_cast<std::size_t>(config.landmarks));
  scene.dots.resize(scene.landmarks.size());
  for (std::size_t i = 0; i < scene.landmarks.size(); ++i) {
    for (int a = 0; a < 3; ++a) scene.landmarks[i][a] = lo[a] + (hi[a] - lo[a]) * unit(rng);
    scene.dots[i].amplitude =
        config.dot_amplitude_min + (config.dot_amplitude_max - config.dot_amplitude_min) * unit(rng);
    scene.dots[i].sigma = config.dot_sigma_min + (config.dot_sigma_max - config.dot_sigma_min) * unit(rng);
    for (int k = 0; k < config.satellites; ++k) {
      const double angle = 2 * std::numbers::pi * unit(texture_rng);
      const double r = config.satellite_offset_min + (config.satellite_offset_max - config.satellite_offset_min) * unit(texture_rng);
      const double g = config.satellite_gain_min + (config.satellite_gain_max - config.satellite_gain_min) * unit(texture_rng);
      scene.dots[i].satellites.push_back(
          {r * scene.dots[i].sigma * Vec2(std::cos(angle), std::sin(angle)), g * scene.dots[i].amplitude,
           config.satellite_sigma_scale * scene.dots[i].sigma});
    }
  }

  for (int j = 0; j < config.frames; ++j) {
    const double t = j / config.frame_rate;
    scene.timestamps.push_back(t);
    scene.poses.push_back(path_pose(config, t));
  }

  // Body rates by central differencing the analytic orientation.
  const double h = 1e-5;
  const double dt = 1.0 / config.gyro_rate;
  std::normal_distribution<double> gyro_noise(0.0, 1.0);
  const int samples = static_cast<int>(std::floor((duration + 0.1) / dt)) + 1;
  for (int n = 0; n < samples; ++n) {
    const double t = -0.05 + n * dt;
    const Rotation before = head_motion(t - h, config.rotation_amplitude);
    const Rotation after = head_motion(t + h, config.rotation_amplitude);
    ImuSample s;
    s.timestamp = t;
    s.angular_velocity = (before.inverse() * after).log() / (2 * h);
    if (config.gyro_noise > 0) {
      for (int a = 0; a < 3; ++a) s.angular_velocity[a] += config.gyro_noise * gyro_noise(rng);
    }
    scene.gyro.push_back(s);
  }

  std::normal_distribution<double> pixel_noise(0.0, 1.0);
  const std::array<Pose, 2> cam_from_left{Pose::identity(), scene.rig.right_from_left};
  for (int j = 0; j < config.frames; ++j) {
    int stereo_visible = 0;
    for (int i = 0; i < config.landmarks; ++i) {
      int seen = 0;
      for (int c = 0; c < 2; ++c) {
        const Vec3 x = cam_from_left[static_cast<std::size_t>(c)] *
                       (scene.poses[static_cast<std::size_t>(j)] * scene.landmarks[static_cast<std::size_t>(i)]);
        if (x.z() < config.min_depth || x.z() > config.max_depth) continue;
        const auto px = project_camera(x, config.intrinsics);
        if (!px || !config.intrinsics.contains(*px, config.image_margin)) continue;
        SceneObservation o;
        o.frame = j;
        o.landmark = i;
        o.camera = c;
        o.exact = *px;
        o.pixel = *px;
        if (config.pixel_noise > 0) {
          o.pixel.x() += config.pixel_noise * pixel_noise(rng);
          o.pixel.y() += config.pixel_noise * pixel_noise(rng);
        }
        scene.observations.push_back(o);
        ++seen;
      }
      stereo_visible += seen == 2;
    }
    if (stereo_visible == 0) {
      throw Error(ErrorCode::kGeneration, "frame " + std::to_string(j) + " sees no landmark in both cameras");
    }
  }
  return scene;
}

GrayImage render_view(const SyntheticScene& scene, int frame, int camera) {
  const Intrinsics& k = scene.config.intrinsics;
  std::vector<double> acc(static_cast<std::size_t>(k.width) * static_cast<std::size_t>(k.height),
                          scene.config.background);
  const Pose cam_from_world =
      (camera == 0 ? Pose::identity() : scene.rig.right_from_left) * scene.poses[static_cast<std::size_t>(frame)];
  for (std::size_t i = 0; i < scene.landmarks.size(); ++i) {
    const Vec3 x = cam_from_world * scene.landmarks[i];
    if (x.z() < scene.config.min_depth || x.z() > scene.config.max_depth) continue;
    const auto px = project_camera(x, k);
    if (!px) continue;
    const Dot& dot = scene.dots[i];
    const double inv = 1.0 / (2 * dot.sigma * dot.sigma);
    double extent = 4 * dot.sigma;
    for (const auto& sat : dot.satellites) extent = std::max(extent, sat.offset.norm() + 4 * sat.sigma);
    const int reach = static_cast<int>(std::ceil(extent));
    const int u0 = static_cast<int>(std::floor(px->x())), v0 = static_cast<int>(std::floor(px->y()));
    for (int v = v0 - reach; v <= v0 + reach + 1; ++v) {
      if (v < 0 || v >= k.height) continue;
      for (int u = u0 - reach; u <= u0 + reach + 1; ++u) {
        if (u < 0 || u >= k.width) continue;
        const Vec2 q(u, v);
        double value = dot.amplitude * std::exp(-(q - *px).squaredNorm() * inv);
        for (const auto& sat : dot.satellites)
          value += sat.amplitude * std::exp(-(q - *px - sat.offset).squaredNorm() / (2 * sat.sigma * sat.sigma));
        acc[static_cast<std::size_t>(v) * static_cast<std::size_t>(k.width) + static_cast<std::size_t>(u)] += value;
      }
    }
  }
  std::vector<std::uint8_t> px(acc.size());
  std::transform(acc.begin(), acc.end(), px.begin(),
                 [](double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); });
  return GrayImage(k.width, k.height, std::move(px));
}

WindowProblem make_window_problem(const SyntheticScene& scene, int first, int count) {
  if (first < 0 || count < 1 || first + count > static_cast<int>(scene.poses.size())) {
    throw Error(ErrorCode::kInvalidInput, "window range outside the scene");
  }
  WindowProblem out;
  BAProblem& p = out.problem;
  p.cameras = {CameraModel{scene.rig.left, Pose::identity()}, CameraModel{scene.rig.right, scene.rig.right_from_left}};
  p.window_capacity = std::max<std::size_t>(50, static_cast<std::size_t>(count));
  for (int j = first; j < first + count; ++j) p.poses.push_back(scene.poses[static_cast<std::size_t>(j)]);

  std::map<int, int> uses;
  for (const auto& o : scene.observations)
    if (o.frame >= first && o.frame < first + count) ++uses[o.landmark];
  std::map<int, int> index;
  for (const auto& [id, n] : uses) {
    if (n < 2) continue;
    index[id] = static_cast<int>(p.landmarks.size());
    p.landmarks.push_back(scene.landmarks[static_cast<std::size_t>(id)]);
    out.landmark_ids.push_back(id);
  }
  for (const auto& o : scene.observations) {
    if (o.frame < first || o.frame >= first + count) continue;
    auto it = index.find(o.landmark);
    if (it == index.end()) continue;
    Observation ob;
    ob.pose = o.frame - first;
    ob.landmark = it->second;
    ob.camera = o.camera;
    ob.pixel = o.pixel;
    p.observations.push_back(ob);
  }
  return out;
}

void perturb(BAProblem& problem, double fraction, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  const Vec3 origin = problem.poses.empty() ? Vec3::Zero() : problem.poses.front().center();
  for (auto& p : problem.landmarks) {
    for (int a = 0; a < 3; ++a) p[a] = origin[a] + (p[a] - origin[a]) * (1.0 + fraction * n(rng));
  }
  for (std::size_t j = 1; j < problem.poses.size(); ++j) {
    const Vec3 w(n(rng), n(rng), n(rng));
    const Vec3 dt(n(rng), n(rng), n(rng));
    Pose& pose = problem.poses[j];
    pose.rotation = Rotation::exp(fraction * w) * pose.rotation;
    pose.translation += fraction * dt;
  }
}

double trajectory_error(const std::vector<Pose>& estimate, const std::vector<Pose>& truth) {
  if (estimate.size() != truth.size()) throw Error(ErrorCode::kInvalidInput, "trajectory lengths differ");
  if (estimate.empty()) return 0.0;
  double sum = 0;
  for (std::size_t i = 0; i < estimate.size(); ++i) sum += (estimate[i].center() - truth[i].center()).squaredNorm();
  return std::sqrt(sum / static_cast<double>(estimate.size()));
}

double max_rotation_error(const std::vector<Pose>& estimate, const std::vector<Pose>& truth) {
  if (estimate.size() != truth.size()) throw Error(ErrorCode::kInvalidInput, "trajectory lengths differ");
  double worst = 0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    worst = std::max(worst, (estimate[i].rotation * truth[i].rotation.inverse()).log().norm());
  }
  return worst;
}

}  // namespace stereoloc
