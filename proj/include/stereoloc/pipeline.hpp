#pragma once

#include <map>
#include <string>
#include <vector>

#include "stereoloc/association.hpp"
#include "stereoloc/backend.hpp"
#include "stereoloc/frontend.hpp"
#include "stereoloc/io.hpp"

namespace stereoloc {

class Dataset;
struct SyntheticScene;

struct PipelineConfig {
  FrontendConfig frontend;
  MatchConfig match;
  LmConfig lm;
  std::size_t window_capacity = 50;
  double min_disparity = 0.5;
  /// Landmark-to-stereo-point pairs needed to initialize a new pose.
  int min_correspondences = 6;
  /// Observations whose reprojection error exceeds this after a window solve
  /// are dropped from the window (pixels).
  double outlier_threshold = 3.0;
  /// Pose assigned to the first frame; it anchors the gauge.
  Pose initial_pose;
};

/// Wall time and call counts per pipeline stage, plus the solver's
/// per-part breakdown accumulated over every window solve.
struct StageReport {
  std::size_t frames = 0;
  std::size_t processed = 0;
  std::size_t skipped = 0;
  std::map<std::string, double> seconds;
  std::map<std::string, std::size_t> calls;
  PartTimes lm_parts;
  double lm_wall = 0;
  std::size_t lm_iterations = 0;
  std::size_t max_window_poses = 0;
  std::size_t outliers_removed = 0;
  /// Pushes after which the window exceeded capacity or held a landmark
  /// with fewer than two observations. Always zero unless something is broken.
  std::size_t window_violations = 0;
  double total_seconds = 0;
};

struct FrameLog {
  std::size_t index = 0;
  double timestamp = 0;
  bool ok = false;
  std::string message;
  std::size_t stereo_matches = 0;
  std::size_t temporal_links = 0;
  std::size_t window_poses = 0;
  std::size_t window_landmarks = 0;
  double final_cost = 0;
};

struct PipelineResult {
  std::vector<TrajectoryPoint> trajectory;  // latest estimate of every processed frame
  StageReport report;
  std::vector<FrameLog> log;
};

enum class FrontEndMode {
  kImages,            // ORB extraction and matching on rendered or loaded images
  kGroundTruthTracks  // synthetic observations with known correspondences
};

PipelineResult run_pipeline(const Dataset& dataset, const PipelineConfig& config);
PipelineResult run_pipeline(const SyntheticScene& scene, const PipelineConfig& config,
                            FrontEndMode mode = FrontEndMode::kImages);

void write_stage_report(std::ostream& out, const StageReport& report);

}  // namespace stereoloc
