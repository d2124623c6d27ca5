#include "stereoloc/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <optional>
#include <ostream>
#include <unordered_map>

#include <Eigen/Geometry>

#include "stereoloc/dataset.hpp"
#include "stereoloc/error.hpp"
#include "stereoloc/synthetic.hpp"
#include "stereoloc/window.hpp"

namespace stereoloc {
namespace {

using Clock = std::chrono::steady_clock;

class StageTimer {
 public:
  StageTimer(StageReport& report, const char* stage) : report_(report), stage_(stage), start_(Clock::now()) {}
  ~StageTimer() {
    report_.seconds[stage_] += std::chrono::duration<double>(Clock::now() - start_).count();
    ++report_.calls[stage_];
  }

 private:
  StageReport& report_;
  const char* stage_;
  Clock::time_point start_;
};

constexpr LandmarkId kNoLandmark = ~LandmarkId{0};

// Front-end output for one stereo frame, relative to the last accepted frame.
struct TrackedFrame {
  std::vector<Vec2> left;
  std::vector<std::optional<Vec2>> right;
  std::vector<int> prev_link;  // index into the previous accepted frame's `left`, or -1
};

// Pose initialization, window maintenance and bundle adjustment.
class Tracker {
 public:
  Tracker(const StereoRig& rig, const PipelineConfig& config)
      : rig_(rig),
        config_(config),
        window_({CameraModel{rig.left, Pose::identity()}, CameraModel{rig.right, rig.right_from_left}},
                config.window_capacity) {}

  bool process(double timestamp, const TrackedFrame& tf, StageReport& report, FrameLog& log) {
    const std::size_t n = tf.left.size();
    std::vector<std::optional<Vec3>> point(n);
    {
      StageTimer timer(report, "triangulate");
      for (std::size_t k = 0; k < n; ++k) {
        if (!tf.right[k]) continue;
        try {
          point[k] = triangulate_rectified(tf.left[k].x(), tf.right[k]->x(), tf.left[k].y(), rig_,
                                           config_.min_disparity);
        } catch (const Error&) {
        }
      }
    }

    std::vector<LandmarkId> linked(n, kNoLandmark);
    for (std::size_t k = 0; k < n; ++k) {
      const int a = tf.prev_link[k];
      if (a < 0 || static_cast<std::size_t>(a) >= prev_ids_.size()) continue;
      const LandmarkId id = prev_ids_[static_cast<std::size_t>(a)];
      if (id != kNoLandmark && window_.has_landmark(id)) linked[k] = id;
    }
    log.temporal_links = static_cast<std::size_t>(std::count_if(
        linked.begin(), linked.end(), [](LandmarkId id) { return id != kNoLandmark; }));

    Pose pose = config_.initial_pose;
    if (!window_.frames().empty()) {
      StageTimer timer(report, "pose_init");
      auto estimate = initialize_pose(linked, point);
      if (!estimate) {
        log.message = "too few landmark correspondences to initialize the pose";
        return false;
      }
      pose = *estimate;
    }

    const FrameId frame_id = next_frame_++;
    std::map<LandmarkId, Landmark> fresh;
    std::vector<WindowObservation> obs;
    std::vector<LandmarkId> ids(n, kNoLandmark);
    const Pose world_from_cam = pose.inverse();
    for (std::size_t k = 0; k < n; ++k) {
      LandmarkId id = linked[k];
      if (id == kNoLandmark && point[k]) {
        id = next_landmark_++;
        fresh[id] = world_from_cam * *point[k];
      }
      if (id == kNoLandmark) continue;
      ids[k] = id;
      obs.push_back({frame_id, id, 0, tf.left[k]});
      if (tf.right[k]) obs.push_back({frame_id, id, 1, *tf.right[k]});
    }

    {
      StageTimer timer(report, "window");
      const auto pushed = window_.push({frame_id, timestamp, pose}, fresh, obs);
      if (pushed.dropped) estimates_[pushed.dropped->id] = {pushed.dropped->timestamp, pushed.dropped->pose};
      check_window(report);
    }

    if (window_.frames().size() >= 2 && !window_.landmarks().empty()) {
      StageTimer timer(report, "optimize");
      try {
        const BAProblem problem = window_.to_problem();
        const LmResult result = lm_optimize(problem, config_.lm);
        window_.apply(result.poses, result.landmarks);
        report.outliers_removed += reject_outliers(problem, result);
        report.lm_parts += result.report.times;
        report.lm_wall += result.report.wall_time;
        report.lm_iterations += static_cast<std::size_t>(result.report.iterations);
        log.final_cost = result.report.final_cost;
      } catch (const Error& e) {
        log.message = std::string("window solve failed: ") + e.what();
      }
    }

    for (const auto& f : window_.frames()) estimates_[f.id] = {f.timestamp, f.pose};
    prev_ids_ = std::move(ids);
    log.window_poses = window_.frames().size();
    log.window_landmarks = window_.landmarks().size();
    report.max_window_poses = std::max(report.max_window_poses, window_.frames().size());
    return true;
  }

  std::vector<TrajectoryPoint> trajectory() const {
    std::vector<TrajectoryPoint> out;
    out.reserve(estimates_.size());
    for (const auto& [id, p] : estimates_) out.push_back(p);
    return out;
  }

 private:
  // Rigid alignment of window landmarks onto this frame's stereo points,
  // refit once without pairs beyond three times the median residual.
  std::optional<Pose> initialize_pose(const std::vector<LandmarkId>& linked,
                                      const std::vector<std::optional<Vec3>>& point) const {
    std::vector<std::pair<Vec3, Vec3>> pairs;
    for (std::size_t k = 0; k < linked.size(); ++k) {
      if (linked[k] == kNoLandmark || !point[k]) continue;
      pairs.emplace_back(window_.landmarks().at(linked[k]), *point[k]);
    }
    const auto min_pairs = static_cast<std::size_t>(std::max(3, config_.min_correspondences));
    if (pairs.size() < min_pairs) return std::nullopt;

    auto fit = [](const std::vector<std::pair<Vec3, Vec3>>& pp) {
      Eigen::Matrix3Xd world(3, static_cast<Eigen::Index>(pp.size()));
      Eigen::Matrix3Xd cam(3, static_cast<Eigen::Index>(pp.size()));
      for (std::size_t i = 0; i < pp.size(); ++i) {
        world.col(static_cast<Eigen::Index>(i)) = pp[i].first;
        cam.col(static_cast<Eigen::Index>(i)) = pp[i].second;
      }
      const Eigen::Matrix4d t = Eigen::umeyama(world, cam, false);
      Pose p;
      p.rotation = Rotation::from_quaternion(Eigen::Quaterniond(Mat3(t.topLeftCorner<3, 3>())));
      p.translation = t.topRightCorner<3, 1>();
      return p;
    };

    Pose pose = fit(pairs);
    std::vector<double> err;
    for (const auto& [w, c] : pairs) err.push_back((pose * w - c).norm());
    std::vector<double> sorted = err;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2), sorted.end());
    const double cutoff = std::max(3.0 * sorted[sorted.size() / 2], 1e-9);
    std::vector<std::pair<Vec3, Vec3>> inliers;
    for (std::size_t i = 0; i < pairs.size(); ++i)
      if (err[i] <= cutoff) inliers.push_back(pairs[i]);
    if (inliers.size() >= min_pairs && inliers.size() < pairs.size()) pose = fit(inliers);
    return pose;
  }

  // Drops observations the solved window cannot explain. `problem` lists
  // observations in window order.
  std::size_t reject_outliers(const BAProblem& problem, const LmResult& result) {
    BAState solved;
    solved.poses = result.poses;
    solved.landmarks = result.landmarks;
    const double limit = config_.outlier_threshold * config_.outlier_threshold;
    std::vector<bool> reject(problem.observations.size(), false);
    std::size_t count = 0;
    for (std::size_t k = 0; k < problem.observations.size(); ++k) {
      const auto r = residual(problem, problem.observations[k], solved);
      reject[k] = !r || r->squaredNorm() > limit;
      count += reject[k];
    }
    if (count > 0) window_.erase_observations(reject);
    return count;
  }

  void check_window(StageReport& report) const {
    bool bad = window_.frames().size() > window_.capacity();
    std::unordered_map<LandmarkId, int> count;
    for (const auto& o : window_.observations()) ++count[o.landmark];
    for (const auto& [id, p] : window_.landmarks()) bad = bad || count[id] < 2;
    report.window_violations += bad;
  }

  StereoRig rig_;
  PipelineConfig config_;
  SlidingWindow window_;
  std::vector<LandmarkId> prev_ids_;
  LandmarkId next_landmark_ = 0;
  FrameId next_frame_ = 0;
  std::map<FrameId, TrajectoryPoint> estimates_;
};

// Image front-end: ORB on both views, stereo matching, and temporal matching
// against the last accepted left view under the gyro rotation prior.
class ImageFrontEnd {
 public:
  ImageFrontEnd(const StereoRig& rig, const PipelineConfig& config, std::vector<ImuSample> imu)
      : rig_(rig), config_(config), imu_(std::move(imu)) {}

  TrackedFrame track(double timestamp, const GrayImage& left, const GrayImage& right, StageReport& report,
                     FrameLog& log) {
    FrameFeatures lf, rf;
    {
      StageTimer timer(report, "extract");
      lf = extract_frame(left, config_.frontend);
      rf = extract_frame(right, config_.frontend);
    }
    TrackedFrame tf;
    const std::size_t n = lf.features.size();
    tf.right.assign(n, std::nullopt);
    tf.prev_link.assign(n, -1);
    for (const auto& f : lf.features) tf.left.emplace_back(f.keypoint.x, f.keypoint.y);
    {
      StageTimer timer(report, "stereo_match");
      for (const auto& m : match_stereo(lf, rf, rig_, config_.match)) {
        const auto& kp = lf.features[static_cast<std::size_t>(m.index_a)].keypoint;
        tf.right[static_cast<std::size_t>(m.index_a)] = Vec2(kp.x - m.disparity, kp.y);
      }
      log.stereo_matches = static_cast<std::size_t>(
          std::count_if(tf.right.begin(), tf.right.end(), [](const auto& r) { return r.has_value(); }));
    }
    if (prev_) {
      StageTimer timer(report, "temporal_match");
      Rotation gyro;
      try {
        gyro = integrate_gyro(imu_, prev_time_, timestamp);
      } catch (const Error&) {
        log.message = "no gyro coverage, using identity rotation prior; ";
      }
      for (const auto& m : match_temporal(*prev_, lf, gyro, rig_.left, config_.match)) {
        tf.prev_link[static_cast<std::size_t>(m.index_b)] = m.index_a;
      }
    }
    pending_ = std::move(lf);
    return tf;
  }

  void accept(double timestamp) {
    prev_ = std::move(pending_);
    prev_time_ = timestamp;
  }

 private:
  StereoRig rig_;
  PipelineConfig config_;
  std::vector<ImuSample> imu_;
  std::optional<FrameFeatures> prev_;
  FrameFeatures pending_;
  double prev_time_ = 0;
};

// Ground-truth correspondences straight from the synthetic observations.
class OracleFrontEnd {
 public:
  explicit OracleFrontEnd(const SyntheticScene& scene) : scene_(scene) {}

  TrackedFrame track(int frame) {
    TrackedFrame tf;
    std::unordered_map<int, std::size_t> index;
    pending_ids_.clear();
    for (const SceneObservation* o : scene_.frame_observations(frame)) {
      auto [it, inserted] = index.emplace(o->landmark, tf.left.size());
      if (o->camera == 0) {
        if (!inserted) continue;
        tf.left.push_back(o->pixel);
        tf.right.emplace_back();
        pending_ids_.push_back(o->landmark);
        auto prev = prev_index_.find(o->landmark);
        tf.prev_link.push_back(prev == prev_index_.end() ? -1 : static_cast<int>(prev->second));
      } else if (!inserted) {
        tf.right[it->second] = o->pixel;
      } else {
        index.erase(it);  // right-only sighting
      }
    }
    return tf;
  }

  void accept() {
    prev_index_.clear();
    for (std::size_t i = 0; i < pending_ids_.size(); ++i) prev_index_[pending_ids_[i]] = i;
  }

 private:
  const SyntheticScene& scene_;
  std::vector<int> pending_ids_;
  std::unordered_map<int, std::size_t> prev_index_;
};

PipelineResult run_frames(std::size_t count, const StereoRig& rig, const PipelineConfig& config,
                          const std::function<double(std::size_t)>& timestamp,
                          const std::function<TrackedFrame(std::size_t, StageReport&, FrameLog&)>& track,
                          const std::function<void(std::size_t)>& accept) {
  const auto start = Clock::now();
  PipelineResult result;
  Tracker tracker(rig, config);
  result.report.frames = count;
  for (std::size_t i = 0; i < count; ++i) {
    FrameLog log;
    log.index = i;
    log.timestamp = timestamp(i);
    try {
      const TrackedFrame tf = track(i, result.report, log);
      log.ok = tracker.process(log.timestamp, tf, result.report, log);
    } catch (const Error& e) {
      log.ok = false;
      log.message += e.what();
    }
    if (log.ok) {
      accept(i);
      ++result.report.processed;
    } else {
      ++result.report.skipped;
    }
    result.log.push_back(std::move(log));
  }
  result.trajectory = tracker.trajectory();
  result.report.total_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return result;
}

}  // namespace

PipelineResult run_pipeline(const Dataset& dataset, const PipelineConfig& config) {
  ImageFrontEnd fe(dataset.rig(), config, dataset.imu());
  return run_frames(
      dataset.size(), dataset.rig(), config, [&](std::size_t i) { return dataset.timestamps()[i]; },
      [&](std::size_t i, StageReport& report, FrameLog& log) {
        return fe.track(dataset.timestamps()[i], dataset.left(i), dataset.right(i), report, log);
      },
      [&](std::size_t i) { fe.accept(dataset.timestamps()[i]); });
}

PipelineResult run_pipeline(const SyntheticScene& scene, const PipelineConfig& config, FrontEndMode mode) {
  const auto stamp = [&](std::size_t i) { return scene.timestamps[i]; };
  if (mode == FrontEndMode::kGroundTruthTracks) {
    OracleFrontEnd fe(scene);
    return run_frames(
        scene.timestamps.size(), scene.rig, config, stamp,
        [&](std::size_t i, StageReport&, FrameLog& log) {
          TrackedFrame tf = fe.track(static_cast<int>(i));
          log.stereo_matches = static_cast<std::size_t>(
              std::count_if(tf.right.begin(), tf.right.end(), [](const auto& r) { return r.has_value(); }));
          return tf;
        },
        [&](std::size_t) { fe.accept(); });
  }
  ImageFrontEnd fe(scene.rig, config, scene.gyro);
  return run_frames(
      scene.timestamps.size(), scene.rig, config, stamp,
      [&](std::size_t i, StageReport& report, FrameLog& log) {
        const int f = static_cast<int>(i);
        return fe.track(scene.timestamps[i], render_view(scene, f, 0), render_view(scene, f, 1), report, log);
      },
      [&](std::size_t i) { fe.accept(scene.timestamps[i]); });
}

void write_stage_report(std::ostream& out, const StageReport& r) {
  char buf[160];
  out << "frames " << r.frames << "\nprocessed " << r.processed << "\nskipped " << r.skipped << '\n';
  for (const auto& [stage, s] : r.seconds) {
    std::snprintf(buf, sizeof buf, "stage %s %.6f %zu\n", stage.c_str(), s, r.calls.at(stage));
    out << buf;
  }
  const PartTimes& p = r.lm_parts;
  std::snprintf(buf, sizeof buf, "lm_parts JU %.6f SE %.6f CFS %.6f CC %.6f GRE %.6f\n", p.ju, p.se, p.cfs, p.cc,
                p.gre);
  out << buf;
  std::snprintf(buf, sizeof buf, "lm_wall %.6f\nlm_iterations %zu\n", r.lm_wall, r.lm_iterations);
  out << buf;
  out << "max_window_poses " << r.max_window_poses << "\nwindow_violations " << r.window_violations
      << "\noutliers_removed " << r.outliers_removed << '\n';
  std::snprintf(buf, sizeof buf, "total_seconds %.6f\n", r.total_seconds);
  out << buf;
}

}  // namespace stereoloc
