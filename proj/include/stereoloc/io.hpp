#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "stereoloc/backend.hpp"

namespace stereoloc {

// Problem snapshot text format (blank lines and `#` comments ignored):
//
//   a b m                                   landmark, pose, observation counts
//   camera fx fy cx cy width height wx wy wz tx ty tz   one or more; camera-from-body
//   x y z                                   a landmark lines
//   wx wy wz tx ty tz                       b pose lines (axis-angle, translation)
//   j i u v sigma [camera]                  m observation lines; sigma is 0 or 1
//
// Poses are world-to-camera. `fix_first_pose` is always on for loaded problems.
BAProblem read_snapshot(std::istream& in);
BAProblem read_snapshot(const std::filesystem::path& path);
void write_snapshot(std::ostream& out, const BAProblem& problem);
void write_snapshot(const std::filesystem::path& path, const BAProblem& problem);

struct TrajectoryPoint {
  double timestamp = 0;
  Pose pose;  // world-to-camera
};

/// `timestamp tx ty tz qx qy qz qw` per line, where (t, q) is the camera
/// position and orientation in the world frame (the inverse of `pose`).
void write_trajectory(std::ostream& out, const std::vector<TrajectoryPoint>& trajectory);
std::vector<TrajectoryPoint> read_trajectory(std::istream& in);

}  // namespace stereoloc
