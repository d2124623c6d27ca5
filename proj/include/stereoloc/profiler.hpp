#pragma once

#include <iosfwd>
#include <vector>

#include "stereoloc/backend.hpp"
#include "stereoloc/synthetic.hpp"

namespace stereoloc {

/// Side-facing camera on a vehicle at 10 m/s, so a landmark stays in view for
/// roughly ten frames.
inline SceneConfig default_profile_scene() {
  SceneConfig c;
  c.shape = TrajectoryShape::kSideways;
  c.speed = 10.0;
  return c;
}

struct ProfileConfig {
  SceneConfig scene = default_profile_scene();  // `frames` is overridden by each window size
  double pixel_noise = 1.0;
  double perturbation = 0.01;
  LmConfig lm;
  std::uint64_t perturb_seed = 7;
};

struct ProfileRow {
  int window_poses = 0;
  std::size_t landmarks = 0;
  std::size_t observations = 0;
  int iterations = 0;
  Termination termination = Termination::kMaxIterations;
  PartTimes times;
  double wall_time = 0;

  /// Fraction of the summed part time spent in `part` seconds.
  double share(double part) const { return times.sum() > 0 ? part / times.sum() : 0.0; }
};

/// Solves one synthetic window per size. Throws Error(kInvalidInput) for a
/// size outside [1, 50].
std::vector<ProfileRow> profile_backend(const std::vector<int>& window_sizes, const ProfileConfig& config = {});

void write_profile(std::ostream& out, const std::vector<ProfileRow>& rows);

}  // namespace stereoloc
