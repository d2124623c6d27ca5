#include "stereoloc/profiler.hpp"

#include <cstdio>
#include <ostream>
#include <random>
#include <string>

#include "stereoloc/error.hpp"

namespace stereoloc {

std::vector<ProfileRow> profile_backend(const std::vector<int>& window_sizes, const ProfileConfig& config) {
  std::vector<ProfileRow> rows;
  for (int size : window_sizes) {
    if (size < 1 || size > 50)
      throw Error(ErrorCode::kInvalidInput, "window size must be in [1, 50], got " + std::to_string(size));
    SceneConfig sc = config.scene;
    sc.frames = size;
    sc.pixel_noise = config.pixel_noise;
    const SyntheticScene scene = generate_scene(sc);
    WindowProblem wp = make_window_problem(scene, 0, size);
    std::mt19937_64 rng(config.perturb_seed);
    perturb(wp.problem, config.perturbation, rng);
    const LmResult result = lm_optimize(wp.problem, config.lm);

    ProfileRow row;
    row.window_poses = size;
    row.landmarks = wp.problem.landmarks.size();
    row.observations = wp.problem.observations.size();
    row.iterations = result.report.iterations;
    row.termination = result.report.termination;
    row.times = result.report.times;
    row.wall_time = result.report.wall_time;
    rows.push_back(row);
  }
  return rows;
}

void write_profile(std::ostream& out, const std::vector<ProfileRow>& rows) {
  out << "# poses landmarks observations iterations termination wall_s ju_s se_s cfs_s cc_s gre_s "
         "ju% se% cfs% cc% gre%\n";
  char buf[384];
  for (const auto& r : rows) {
    const PartTimes& t = r.times;
    std::snprintf(buf, sizeof buf,
                  "%d %zu %zu %d %s %.6f %.6f %.6f %.6f %.6f %.6f %.2f %.2f %.2f %.2f %.2f\n", r.window_poses,
                  r.landmarks, r.observations, r.iterations, to_string(r.termination), r.wall_time, t.ju,
                  t.se, t.cfs, t.cc, t.gre, 100 * r.share(t.ju), 100 * r.share(t.se), 100 * r.share(t.cfs),
                  100 * r.share(t.cc), 100 * r.share(t.gre));
    out << buf;
  }
}

}  // namespace stereoloc
