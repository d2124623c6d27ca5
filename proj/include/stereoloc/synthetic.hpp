#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "stereoloc/association.hpp"
#include "stereoloc/backend.hpp"
#include "stereoloc/image.hpp"

namespace stereoloc {

enum class TrajectoryShape {
  kForward,   // mostly along +z with gentle weave and head motion
  kSideways,  // translating along +x while looking along +z
};

struct SceneConfig {
  std::uint64_t seed = 1;
  int frames = 100;
  double frame_rate = 10.0;  // Hz
  int landmarks = 2000;
  Intrinsics intrinsics{450.0, 450.0, 320.0, 240.0, 640, 480};
  double baseline = 0.12;
  TrajectoryShape shape = TrajectoryShape::kForward;
  double speed = 1.0;             // m/s along the main direction
  double rotation_amplitude = 0.05;  // rad, head motion
  // Landmark box in world coordinates; the first camera sits at the origin
  // looking along +z. A non-positive z extent is derived from the trajectory.
  Vec3 box_min{-6.0, -3.0, 2.0};
  Vec3 box_max{6.0, 3.0, 0.0};
  double min_depth = 0.5;
  double max_depth = 50.0;
  double image_margin = 0.0;   // pixels; observations closer to the edge are dropped
  double pixel_noise = 0.0;    // px, Gaussian std
  double gyro_rate = 200.0;    // Hz
  double gyro_noise = 0.0;     // rad/s, Gaussian std
  // Dot rendering.
  double background = 10.0;
  double dot_amplitude_min = 110.0, dot_amplitude_max = 230.0;
  double dot_sigma_min = 1.1, dot_sigma_max = 1.8;
  // Each dot carries broad, faint satellite blobs at random offsets. They make
  // landmarks differ in appearance and give a defined orientation while
  // staying too smooth to trip the segment test themselves.
  int satellites = 3;
  double satellite_gain_min = 0.15, satellite_gain_max = 0.35;    // fraction of the dot amplitude
  double satellite_offset_min = 2.0, satellite_offset_max = 5.0;  // in units of the dot sigma
  double satellite_sigma_scale = 2.5;                             // satellite sigma / dot sigma
};

struct SceneObservation {
  int frame = 0;
  int landmark = 0;
  int camera = 0;  // 0 left, 1 right
  Vec2 pixel;      // with noise
  Vec2 exact;      // noiseless projection
};

struct Satellite {
  Vec2 offset = Vec2::Zero();  // pixels from the dot centre
  double amplitude = 0;
  double sigma = 0;
};

struct Dot {
  double amplitude = 0;
  double sigma = 0;
  std::vector<Satellite> satellites;
};

struct SyntheticScene {
  SceneConfig config;
  StereoRig rig;
  std::vector<Landmark> landmarks;
  std::vector<Dot> dots;
  std::vector<double> timestamps;
  std::vector<Pose> poses;  // ground truth, world-to-left-camera
  std::vector<ImuSample> gyro;
  std::vector<SceneObservation> observations;  // sorted by frame, landmark, camera

  /// Ground-truth camera center path at time t (for gyro synthesis and tests).
  Pose pose_at(double t) const;
  std::vector<const SceneObservation*> frame_observations(int frame) const;
};

/// Deterministic for a given config. Throws Error(kGeneration) if a frame sees
/// no landmark in both cameras.
SyntheticScene generate_scene(const SceneConfig& config);

/// Renders every landmark visible in `camera` as a Gaussian dot.
GrayImage render_view(const SyntheticScene& scene, int frame, int camera);

/// Stereo bundle-adjustment window over frames [first, first + count). Camera
/// 1 is the right camera. Landmarks seen fewer than twice are left out. Poses
/// and landmarks are the ground truth.
struct WindowProblem {
  BAProblem problem;
  std::vector<int> landmark_ids;  // scene index for each problem landmark
};
WindowProblem make_window_problem(const SyntheticScene& scene, int first, int count);

/// Multiplies every landmark's offset from the first camera center by
/// (1 + fraction * n) per axis and perturbs every pose except the first by a
/// rotation of `fraction` rad and a translation of `fraction` m per axis
/// (n standard normal).
void perturb(BAProblem& problem, double fraction, std::mt19937_64& rng);

/// Root-mean-square camera-center distance between two equally long pose lists.
double trajectory_error(const std::vector<Pose>& estimate, const std::vector<Pose>& truth);
/// Largest rotation angle of estimate * truth^-1 over the list.
double max_rotation_error(const std::vector<Pose>& estimate, const std::vector<Pose>& truth);

}  // namespace stereoloc
