#pragma once

#include <filesystem>
#include <iosfwd>

#include "stereoloc/geometry.hpp"

namespace stereoloc {

// Calibration files are line-oriented `key = value` text; `#` starts a comment.
//
//   left.fx  left.fy  left.cx  left.cy  left.width  left.height
//   right.fx right.fy right.cx right.cy right.width right.height
//   baseline                      meters
//   right_from_left.rotation    = r00 r01 r02 r10 r11 r12 r20 r21 r22   (row-major)
//   right_from_left.translation = tx ty tz                              (meters)
//
// The extrinsic block is optional. Without it the rig is rectified with the
// right camera `baseline` meters along +x. If both are given, `baseline` must
// equal the norm of the translation.
StereoRig parse_calibration(std::istream& in);
StereoRig load_calibration(const std::filesystem::path& path);
void write_calibration(std::ostream& out, const StereoRig& rig);

}  // namespace stereoloc
