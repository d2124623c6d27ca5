#include "stereoloc/window.hpp"

#include <algorithm>
#include <string>
#include <unordered_map>

#include "stereoloc/error.hpp"

namespace stereoloc {

SlidingWindow::SlidingWindow(std::vector<CameraModel> cameras, std::size_t capacity)
    : cameras_(std::move(cameras)), capacity_(capacity) {
  if (capacity_ == 0) throw Error(ErrorCode::kInvalidInput, "window capacity must be positive");
  if (cameras_.empty()) throw Error(ErrorCode::kInvalidInput, "window needs a camera model");
}

SlidingWindow::PushResult SlidingWindow::push(const WindowFrame& frame,
                                              const std::map<LandmarkId, Landmark>& new_landmarks,
                                              const std::vector<WindowObservation>& observations) {
  if (!frames_.empty() && frame.id <= frames_.back().id) {
    throw Error(ErrorCode::kInvalidInput, "frame ids must increase");
  }
  for (const auto& [id, p] : new_landmarks) {
    if (landmarks_.count(id)) {
      throw Error(ErrorCode::kInvalidInput, "landmark " + std::to_string(id) + " already exists");
    }
  }
  for (const auto& o : observations) {
    if (o.frame != frame.id) throw Error(ErrorCode::kInvalidInput, "observation of another frame");
    if (o.camera < 0 || o.camera >= static_cast<int>(cameras_.size())) {
      throw Error(ErrorCode::kInvalidInput, "observation camera out of range");
    }
    if (!landmarks_.count(o.landmark) && !new_landmarks.count(o.landmark)) {
      throw Error(ErrorCode::kInvalidInput, "observation of unknown landmark " + std::to_string(o.landmark));
    }
  }

  frames_.push_back(frame);
  landmarks_.insert(new_landmarks.begin(), new_landmarks.end());
  observations_.insert(observations_.end(), observations.begin(), observations.end());

  PushResult result;
  if (frames_.size() > capacity_) {
    result.dropped = frames_.front();
    frames_.pop_front();
    const FrameId gone = result.dropped->id;
    std::erase_if(observations_, [gone](const WindowObservation& o) { return o.frame == gone; });
  }
  result.pruned = prune();
  return result;
}

std::vector<LandmarkId> SlidingWindow::prune() {
  std::unordered_map<LandmarkId, int> count;
  for (const auto& o : observations_) ++count[o.landmark];
  std::vector<LandmarkId> pruned;
  for (auto it = landmarks_.begin(); it != landmarks_.end();) {
    if (count[it->first] < 2) {
      pruned.push_back(it->first);
      it = landmarks_.erase(it);
    } else {
      ++it;
    }
  }
  if (!pruned.empty()) {
    std::erase_if(observations_, [&](const WindowObservation& o) { return !landmarks_.count(o.landmark); });
  }
  return pruned;
}

std::vector<LandmarkId> SlidingWindow::erase_observations(const std::vector<bool>& reject) {
  if (reject.size() != observations_.size()) {
    throw Error(ErrorCode::kInvalidInput, "rejection mask does not match the observations");
  }
  std::size_t k = 0;
  std::erase_if(observations_, [&](const WindowObservation&) { return reject[k++]; });
  return prune();
}

std::size_t SlidingWindow::observation_count(LandmarkId id) const {
  return static_cast<std::size_t>(std::count_if(observations_.begin(), observations_.end(),
                                                [id](const WindowObservation& o) { return o.landmark == id; }));
}

BAProblem SlidingWindow::to_problem() const {
  BAProblem p;
  p.cameras = cameras_;
  p.window_capacity = capacity_;
  std::unordered_map<FrameId, int> frame_index;
  for (const auto& f : frames_) {
    frame_index[f.id] = static_cast<int>(p.poses.size());
    p.poses.push_back(f.pose);
  }
  std::unordered_map<LandmarkId, int> landmark_index;
  for (const auto& [id, pos] : landmarks_) {
    landmark_index[id] = static_cast<int>(p.landmarks.size());
    p.landmarks.push_back(pos);
  }
  p.observations.reserve(observations_.size());
  for (const auto& o : observations_) {
    Observation ob;
    ob.pose = frame_index.at(o.frame);
    ob.landmark = landmark_index.at(o.landmark);
    ob.camera = o.camera;
    ob.pixel = o.pixel;
    p.observations.push_back(ob);
  }
  return p;
}

void SlidingWindow::apply(const std::vector<Pose>& poses, const std::vector<Landmark>& landmarks) {
  if (poses.size() != frames_.size() || landmarks.size() != landmarks_.size()) {
    throw Error(ErrorCode::kInvalidInput, "solution does not match the window");
  }
  for (std::size_t j = 0; j < poses.size(); ++j) frames_[j].pose = poses[j];
  std::size_t i = 0;
  for (auto& [id, pos] : landmarks_) pos = landmarks[i++];
}

}  // namespace stereoloc
