#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <vector>

#include "stereoloc/backend.hpp"

namespace stereoloc {

using FrameId = std::uint64_t;
using LandmarkId = std::uint64_t;

struct WindowFrame {
  FrameId id = 0;
  double timestamp = 0;
  Pose pose;
};

struct WindowObservation {
  FrameId frame = 0;
  LandmarkId landmark = 0;
  int camera = 0;
  Vec2 pixel = Vec2::Zero();
};

/// Bounded set of recent poses with the landmarks and observations tying them
/// together. Dropping the oldest pose discards its observations outright; no
/// marginalization prior is kept.
class SlidingWindow {
 public:
  explicit SlidingWindow(std::vector<CameraModel> cameras, std::size_t capacity = 50);

  struct PushResult {
    std::optional<WindowFrame> dropped;
    std::vector<LandmarkId> pruned;
  };

  /// Appends `frame`, registers `new_landmarks`, and records `observations`
  /// (which may only reference `frame` and known or new landmarks). Drops the
  /// oldest frame past capacity, then prunes landmarks with fewer than two
  /// observations.
  PushResult push(const WindowFrame& frame, const std::map<LandmarkId, Landmark>& new_landmarks,
                  const std::vector<WindowObservation>& observations);

  /// Erases observations flagged in `reject` (aligned with observations()),
  /// then prunes landmarks left with fewer than two. Returns the pruned ids.
  std::vector<LandmarkId> erase_observations(const std::vector<bool>& reject);

  /// Solver view: poses oldest first, landmarks in id order, observations in
  /// observations() order.
  BAProblem to_problem() const;
  /// Writes optimized values back in to_problem() order.
  void apply(const std::vector<Pose>& poses, const std::vector<Landmark>& landmarks);

  std::size_t capacity() const { return capacity_; }
  const std::deque<WindowFrame>& frames() const { return frames_; }
  const std::map<LandmarkId, Landmark>& landmarks() const { return landmarks_; }
  const std::vector<WindowObservation>& observations() const { return observations_; }
  const std::vector<CameraModel>& cameras() const { return cameras_; }
  std::size_t observation_count(LandmarkId id) const;
  bool has_landmark(LandmarkId id) const { return landmarks_.count(id) != 0; }

 private:
  std::vector<LandmarkId> prune();

  std::vector<CameraModel> cameras_;
  std::size_t capacity_;
  std::deque<WindowFrame> frames_;
  std::map<LandmarkId, Landmark> landmarks_;
  std::vector<WindowObservation> observations_;
};

}  // namespace stereoloc
