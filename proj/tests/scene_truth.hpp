#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "stereoloc/frontend.hpp"
#include "stereoloc/synthetic.hpp"

namespace stereoloc::testing {

/// Landmark projections for one rendered view, using the renderer's depth gate.
inline std::map<int, Vec2> view_projections(const SyntheticScene& scene, const Pose& cam_from_world) {
  std::map<int, Vec2> out;
  for (std::size_t i = 0; i < scene.landmarks.size(); ++i) {
    const Vec3 x = cam_from_world * scene.landmarks[i];
    if (x.z() < scene.config.min_depth || x.z() > scene.config.max_depth) continue;
    if (auto px = project_camera(x, scene.config.intrinsics)) out[static_cast<int>(i)] = *px;
  }
  return out;
}

/// Landmark -> feature index, kept only where the association is unambiguous:
/// exactly one feature lies within `radius` of the projection, that feature's
/// nearest projection is this landmark, and no other projection lies within
/// `isolation` of it. Only features of pyramid `level` compete, since a dot
/// is usually detected on every level at the same place.
inline std::map<int, int> unambiguous_features(const std::vector<Feature>& features,
                                               const std::map<int, Vec2>& projections, int level = 0,
                                               double radius = 1.5, double isolation = 4.0) {
  std::map<int, int> out;
  for (const auto& [id, p] : projections) {
    int found = -1, count = 0;
    for (std::size_t f = 0; f < features.size(); ++f) {
      if (features[f].keypoint.level != level) continue;
      const Vec2 q(features[f].keypoint.x, features[f].keypoint.y);
      if ((q - p).norm() <= radius) {
        found = static_cast<int>(f);
        ++count;
      }
    }
    if (count != 1) continue;
    bool isolated = true;
    for (const auto& [other, q] : projections)
      if (other != id && (q - p).norm() < isolation) isolated = false;
    if (isolated) out[id] = found;
  }
  return out;
}

}  // namespace stereoloc::testing
