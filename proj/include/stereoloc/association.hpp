#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "stereoloc/frontend.hpp"
#include "stereoloc/geometry.hpp"

namespace stereoloc {

struct ImuSample {
  double timestamp = 0;       // seconds
  Vec3 angular_velocity = Vec3::Zero();  // rad/s, camera frame
};

/// Body rotation accumulated over [t0, t1] by midpoint integration of the
/// linearly interpolated gyro signal: R <- R * exp(w_mid * dt). The result maps
/// the t1 body frame into the t0 body frame.
/// Throws Error(kInsufficientData) if the samples do not cover [t0, t1].
Rotation integrate_gyro(const std::vector<ImuSample>& samples, double t0, double t1);

/// Epipolar search region: segment [a, b] dilated by half_width.
struct BandRegion {
  bool empty = true;
  Vec2 a = Vec2::Zero();
  Vec2 b = Vec2::Zero();
  double half_width = 0;

  bool contains(const Vec2& q) const;
};

/// Projects the viewing ray of `src_pixel` over source-camera depths
/// [depth_min, depth_max] into the destination camera. `dst_from_src` maps
/// source camera coordinates to destination camera coordinates.
BandRegion band_region(const Vec2& src_pixel, const Pose& dst_from_src, const Intrinsics& k_src,
                       const Intrinsics& k_dst, double depth_min, double depth_max, double half_width);
inline BandRegion band_region(const Feature& feat, const Pose& dst_from_src, const Intrinsics& k_src,
                              const Intrinsics& k_dst, double depth_min, double depth_max,
                              double half_width) {
  return band_region(Vec2(feat.keypoint.x, feat.keypoint.y), dst_from_src, k_src, k_dst, depth_min,
                     depth_max, half_width);
}

struct MatchConfig {
  int hamming_threshold = 64;  // accept iff best < threshold
  double ratio = 0.8;          // accept iff best < ratio * second best
  // Candidates must lie within this many pyramid levels of the source feature.
  // Blobs are detected on every level at one place; comparing across levels
  // pits each detection against its own duplicate.
  int max_level_difference = 0;
  int sad_window = 11;
  int sad_threshold = 1500;    // 8-bit units summed over the window
  // Stereo only: the window slides this many pixels along the row around the
  // right keypoint. A minimum on the edge of the slide rejects the pair.
  int sad_search_radius = 2;
  double stereo_half_width = 2.0;
  double temporal_half_width = 8.0;
  double depth_min = 0.5;
  double depth_max = 50.0;
};

struct MatchPair {
  int index_a = 0;
  int index_b = 0;
  int hamming = 0;
  int sad = 0;
  // x_a - x_b, with x_b refined to subpixel precision for stereo pairs.
  double disparity = 0;

  bool operator==(const MatchPair&) const = default;
};

/// Sum of absolute differences between square windows centred on the rounded
/// positions. Returns -1 if either window leaves its image.
int patch_sad(const GrayImage& a, const Vec2& pa, const GrayImage& b, const Vec2& pb, int window);

/// Band-constrained Hamming matching with ratio test, SAD filtering and a
/// mutual-best cross-check. Result is sorted by index_a.
std::vector<MatchPair> match_features(const FrameFeatures& src, const FrameFeatures& dst,
                                      const Pose& dst_from_src, const Intrinsics& k_src,
                                      const Intrinsics& k_dst, const MatchConfig& cfg,
                                      double half_width);

/// Stereo matching on a calibrated rig using the stereo band width. The SAD
/// check is a rectification step: the right position is refined along the row
/// by a parabola through the SAD minimum, and `sad` is the value at that minimum.
std::vector<MatchPair> match_stereo(const FrameFeatures& left, const FrameFeatures& right,
                                    const StereoRig& rig, const MatchConfig& cfg = {});

/// Consecutive-frame matching. `gyro_rotation` is the integrate_gyro output over
/// the inter-frame interval; translation is absorbed by the temporal band width.
std::vector<MatchPair> match_temporal(const FrameFeatures& prev, const FrameFeatures& curr,
                                      const Rotation& gyro_rotation, const Intrinsics& k,
                                      const MatchConfig& cfg = {});

/// `timestamp,wx,wy,wz` per line; a non-numeric first line is treated as a header.
std::vector<ImuSample> read_imu_csv(std::istream& in);
std::vector<ImuSample> read_imu_csv(const std::filesystem::path& path);
void write_imu_csv(std::ostream& out, const std::vector<ImuSample>& samples);

/// `idx_a idx_b hamming sad` per line.
void write_matches(std::ostream& out, const std::vector<MatchPair>& matches);

}  // namespace stereoloc
