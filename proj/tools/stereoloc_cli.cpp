// Command-line front end. Reports go to stdout as `key value` lines unless an
// output file is given; diagnostics go to stderr.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif

#include "stereoloc/association.hpp"
#include "stereoloc/calibration.hpp"
#include "stereoloc/dataset.hpp"
#include "stereoloc/error.hpp"
#include "stereoloc/frontend.hpp"
#include "stereoloc/image.hpp"
#include "stereoloc/io.hpp"
#include "stereoloc/latency.hpp"
#include "stereoloc/pipeline.hpp"
#include "stereoloc/profiler.hpp"
#include "stereoloc/synthetic.hpp"

namespace sl = stereoloc;

namespace {

// Writes to `path`, or stdout when empty.
template <typename F>
void emit(const std::string& path, F&& write) {
  if (path.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw sl::Error(sl::ErrorCode::kIo, "cannot write " + path);
  write(out);
}

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void add_frontend_options(CLI::App* cmd, sl::FrontendConfig& fc) {
  cmd->add_option("--levels", fc.levels, "Pyramid levels")->check(CLI::PositiveNumber);
  cmd->add_option("--scale", fc.scale_factor, "Pyramid scale factor")->check(CLI::Range(1.0001, 4.0));
  cmd->add_option("--threshold", fc.fast_threshold, "FAST intensity threshold")->check(CLI::PositiveNumber);
  cmd->add_option("--max-features", fc.max_features_per_level, "Feature cap per level")
      ->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stereo visual localization: ORB front-end, feature association, sliding-window BA"};
  app.require_subcommand(1);

  // extract
  sl::FrontendConfig extract_cfg;
  std::string extract_image, extract_out;
  auto* extract = app.add_subcommand("extract", "Detect and describe ORB features in a PGM image");
  extract->add_option("image", extract_image, "Input PGM")->required()->check(CLI::ExistingFile);
  extract->add_option("-o,--output", extract_out, "Feature file (default stdout)");
  add_frontend_options(extract, extract_cfg);

  // match
  sl::FrontendConfig match_fe;
  sl::MatchConfig match_cfg;
  std::string match_left, match_right, match_calib, match_out;
  auto* match = app.add_subcommand("match", "Stereo-match features between a rectified image pair");
  match->add_option("left", match_left, "Left PGM")->required()->check(CLI::ExistingFile);
  match->add_option("right", match_right, "Right PGM")->required()->check(CLI::ExistingFile);
  match->add_option("-c,--calib", match_calib, "Calibration file")->required()->check(CLI::ExistingFile);
  match->add_option("-o,--output", match_out, "Match file (default stdout)");
  match->add_option("--max-hamming", match_cfg.hamming_threshold, "Accept below this distance");
  match->add_option("--ratio", match_cfg.ratio, "Best to second-best ratio");
  match->add_option("--max-sad", match_cfg.sad_threshold, "Patch SAD limit");
  add_frontend_options(match, match_fe);

  // ba
  sl::LmConfig ba_cfg;
  std::string ba_in, ba_out;
  bool ba_trace = false;
  auto* ba = app.add_subcommand("ba", "Solve a bundle-adjustment snapshot");
  ba->add_option("snapshot", ba_in, "Snapshot file")->required()->check(CLI::ExistingFile);
  ba->add_option("-o,--output", ba_out, "Write the optimized snapshot here");
  ba->add_option("--max-iterations", ba_cfg.max_iterations, "Iteration cap")->check(CLI::NonNegativeNumber);
  ba->add_option("--lambda", ba_cfg.initial_lambda, "Initial damping")->check(CLI::PositiveNumber);
  ba->add_flag("--trace", ba_trace, "Print one line per iteration");

  // run
  sl::PipelineConfig run_cfg;
  std::string run_dir, run_out, run_report;
  auto* run = app.add_subcommand("run", "Track a stereo dataset directory and write the trajectory");
  run->add_option("dataset", run_dir, "Dataset root")->required()->check(CLI::ExistingDirectory);
  run->add_option("-o,--output", run_out, "Trajectory file (default stdout)");
  run->add_option("--report", run_report, "Stage report file (default stderr)");
  run->add_option("--window", run_cfg.window_capacity, "Sliding-window capacity")->check(CLI::Range(2, 50));
  add_frontend_options(run, run_cfg.frontend);

  // gen
  sl::SceneConfig gen_cfg;
  std::string gen_out, gen_shape = "forward";
  auto* gen = app.add_subcommand("gen", "Generate a synthetic stereo dataset");
  gen->add_option("output", gen_out, "Dataset root to create")->required();
  gen->add_option("--seed", gen_cfg.seed, "Random seed");
  gen->add_option("--frames", gen_cfg.frames, "Frame count")->check(CLI::PositiveNumber);
  gen->add_option("--landmarks", gen_cfg.landmarks, "Landmark count")->check(CLI::PositiveNumber);
  gen->add_option("--rate", gen_cfg.frame_rate, "Frame rate (Hz)")->check(CLI::PositiveNumber);
  gen->add_option("--speed", gen_cfg.speed, "Travel speed (m/s)");
  gen->add_option("--shape", gen_shape, "Trajectory shape")->check(CLI::IsMember({"forward", "sideways"}));
  gen->add_option("--pixel-noise", gen_cfg.pixel_noise, "Observation noise (px)")->check(CLI::NonNegativeNumber);
  gen->add_option("--gyro-noise", gen_cfg.gyro_noise, "Gyro noise (rad/s)")->check(CLI::NonNegativeNumber);

  // profile
  std::vector<int> profile_sizes{1, 10, 50};
  sl::ProfileConfig profile_cfg;
  auto* profile = app.add_subcommand("profile", "Time the solver parts on synthetic windows");
  profile->add_option("--sizes", profile_sizes, "Window sizes in poses")->delimiter(',')->check(CLI::Range(1, 50));
  profile->add_option("--landmarks", profile_cfg.scene.landmarks, "Landmark count")->check(CLI::PositiveNumber);
  profile->add_option("--seed", profile_cfg.scene.seed, "Scene seed");

  // latency-model
  std::string lat_graph, lat_baseline;
  auto* latency = app.add_subcommand("latency-model", "Longest-path latency of a task graph");
  latency->add_option("graph", lat_graph, "Task graph file")->required()->check(CLI::ExistingFile);
  latency->add_option("--baseline", lat_baseline, "Graph to compare against")->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*extract) {
      const auto features = sl::extract_features(sl::read_pgm(extract_image), extract_cfg);
      emit(extract_out, [&](std::ostream& out) { sl::write_features(out, features); });
      std::cerr << "features " << features.size() << '\n';
    } else if (*match) {
      const sl::StereoRig rig = sl::load_calibration(match_calib);
      const auto left = sl::extract_frame(sl::read_pgm(match_left), match_fe);
      const auto right = sl::extract_frame(sl::read_pgm(match_right), match_fe);
      const auto matches = sl::match_stereo(left, right, rig, match_cfg);
      emit(match_out, [&](std::ostream& out) {
        out << "# left right hamming sad disparity\n";
        for (const auto& m : matches)
          out << m.index_a << ' ' << m.index_b << ' ' << m.hamming << ' ' << m.sad << ' ' << fmt(m.disparity) << '\n';
      });
      std::cerr << "left_features " << left.features.size() << "\nright_features " << right.features.size()
                << "\nmatches " << matches.size() << '\n';
    } else if (*ba) {
      sl::BAProblem problem = sl::read_snapshot(ba_in);
      const sl::LmResult result = sl::lm_optimize(problem, ba_cfg);
      const auto& r = result.report;
      std::cout << "poses " << problem.poses.size() << "\nlandmarks " << problem.landmarks.size()
                << "\nobservations " << problem.observations.size() << "\ninitial_cost " << fmt(r.initial_cost, 12)
                << "\nfinal_cost " << fmt(r.final_cost, 12) << "\nrms_px "
                << fmt(sl::rms_reprojection(problem, result.poses, result.landmarks)) << "\niterations "
                << r.iterations << "\naccepted " << r.accepted << "\ntermination " << sl::to_string(r.termination)
                << "\ntime_ju " << fmt(r.times.ju) << "\ntime_se " << fmt(r.times.se) << "\ntime_cfs "
                << fmt(r.times.cfs) << "\ntime_cc " << fmt(r.times.cc) << "\ntime_gre " << fmt(r.times.gre)
                << "\nwall_time " << fmt(r.wall_time) << '\n';
      if (ba_trace) {
        for (const auto& it : r.trace) {
          std::cout << "iter " << it.iteration << ' ' << fmt(it.cost, 12) << ' ' << it.lambda << ' ' << it.rho
                    << ' ' << (it.accepted ? "accept" : "reject") << '\n';
        }
      }
      if (!ba_out.empty()) {
        problem.poses = result.poses;
        problem.landmarks = result.landmarks;
        sl::write_snapshot(std::filesystem::path(ba_out), problem);
      }
    } else if (*run) {
      const sl::Dataset dataset = sl::Dataset::open(run_dir);
      const sl::PipelineResult result = sl::run_pipeline(dataset, run_cfg);
      emit(run_out, [&](std::ostream& out) { sl::write_trajectory(out, result.trajectory); });
      std::ostringstream report;
      sl::write_stage_report(report, result.report);
      for (const auto& f : result.log) {
        if (!f.ok || !f.message.empty()) report << "frame " << f.index << ' ' << (f.ok ? "ok" : "skipped") << ' ' << f.message << '\n';
      }
      if (run_report.empty()) {
        std::cerr << report.str();
      } else {
        emit(run_report, [&](std::ostream& out) { out << report.str(); });
      }
    } else if (*gen) {
      gen_cfg.shape = gen_shape == "sideways" ? sl::TrajectoryShape::kSideways : sl::TrajectoryShape::kForward;
      const sl::SyntheticScene scene = sl::generate_scene(gen_cfg);
      sl::write_dataset(gen_out, scene);
      std::cout << "frames " << scene.poses.size() << "\nlandmarks " << scene.landmarks.size() << "\nobservations "
                << scene.observations.size() << "\ngyro_samples " << scene.gyro.size() << '\n';
    } else if (*profile) {
      sl::write_profile(std::cout, sl::profile_backend(profile_sizes, profile_cfg));
    } else if (*latency) {
      const sl::LatencyResult result = sl::perception_latency(sl::load_task_graph(lat_graph));
      std::cout << "latency_ms " << fmt(result.latency_ms, 3) << "\ncritical_path";
      for (const auto& s : result.critical_path) std::cout << ' ' << s;
      std::cout << '\n';
      if (!lat_baseline.empty()) {
        const sl::LatencyResult base = sl::perception_latency(sl::load_task_graph(lat_baseline));
        const double factor = sl::improvement_factor(base, result);
        std::cout << "baseline_ms " << fmt(base.latency_ms, 3) << "\nimprovement " << fmt(factor, 4)
                  << "\nimprovement_rounded " << fmt(factor, 1) << '\n';
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
