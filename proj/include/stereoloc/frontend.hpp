#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stereoloc/image.hpp"

namespace stereoloc {

struct ImagePyramid {
  std::vector<GrayImage> levels;
  double scale_factor = 1.2;

  double scale(int level) const;
};

struct KeyPoint {
  double x = 0;  // level-0 pixels for extracted features, level-local for raw detections
  double y = 0;
  int level = 0;
  int response = 0;
  double angle = 0;  // radians, [0, 2pi)
};

class Descriptor256 {
 public:
  Descriptor256() = default;
  explicit Descriptor256(const std::array<std::uint64_t, 4>& words) : words_(words) {}

  static Descriptor256 ones() { return Descriptor256({~0ull, ~0ull, ~0ull, ~0ull}); }
  /// Parses the 64-digit hex form produced by hex().
  static Descriptor256 from_hex(const std::string& hex);

  bool bit(int k) const { return (words_[k >> 6] >> (k & 63)) & 1u; }
  void set(int k, bool value);
  const std::array<std::uint64_t, 4>& words() const { return words_; }
  /// Bit 0 is the least significant bit of the last hex digit.
  std::string hex() const;

  bool operator==(const Descriptor256&) const = default;

 private:
  std::array<std::uint64_t, 4> words_{};
};

inline int hamming_distance(const Descriptor256& a, const Descriptor256& b) {
  int d = 0;
  for (int i = 0; i < 4; ++i) d += std::popcount(a.words()[i] ^ b.words()[i]);
  return d;
}

struct Feature {
  KeyPoint keypoint;
  Descriptor256 descriptor;
};

struct PointPair {
  int ax, ay, bx, by;
};

/// The shipped steered-BRIEF sampling pattern. Changing it changes every
/// descriptor, so it carries a version number.
inline constexpr int kBriefPatternVersion = 1;
std::span<const PointPair> brief_pattern();

struct FrontendConfig {
  int levels = 2;
  double scale_factor = 1.2;
  int fast_threshold = 20;
  int max_features_per_level = 1000;
  int orientation_radius = 15;
  double blur_sigma = 2.0;
  int border = 20;  // keypoints closer than this to a level edge are dropped
};

inline constexpr int kMinExtractionSize = 64;

/// Level k is a bilinear resample of level 0 at scale_factor^k, dims floored.
/// Throws Error(kTooSmall) if any level falls below 64x64.
ImagePyramid build_pyramid(const GrayImage& img, int n, double scale_factor);

/// FAST-9 segment test at one pixel. Returns the score (sum of absolute
/// differences over the maximal qualifying arc) or nullopt if not a corner.
/// The pixel must be at least 3 px from every edge.
std::optional<int> fast_score(const GrayImage& img, int x, int y, int threshold);

/// All segment-test corners at least `border` (>= 3) px from the edges, raster order.
std::vector<KeyPoint> fast_candidates(const GrayImage& img, int threshold, int border = 3);

/// 3x3 non-maximum suppression. Ties go to the earlier pixel in raster order.
std::vector<KeyPoint> suppress_non_maxima(const std::vector<KeyPoint>& candidates, int width,
                                          int height);

/// Candidates, suppression, then the strongest `max_features` (level-local coordinates).
std::vector<KeyPoint> fast_detect(const GrayImage& img, int threshold, int max_features,
                                  int border = 3);

/// Intensity-centroid angle over a disc of `radius` around the rounded keypoint.
double compute_orientation(const GrayImage& img, const KeyPoint& kp, int radius);

/// Normalized Gaussian taps, half-width ceil(3*sigma).
std::vector<double> gaussian_kernel(double sigma);
/// Separable blur with edge replication, kept in double precision.
std::vector<double> gaussian_blur_wide(const GrayImage& img, double sigma);
/// As gaussian_blur_wide, rounded to the nearest 8-bit value.
GrayImage gaussian_blur(const GrayImage& img, double sigma);

/// Steered BRIEF: bit k is set iff I(rot(a_k)) < I(rot(b_k)), rotation by kp.angle
/// about the rounded keypoint. Patterns longer than 256 pairs are rejected.
Descriptor256 brief_describe(const GrayImage& blurred, const KeyPoint& kp,
                             std::span<const PointPair> pattern = brief_pattern());

/// Extraction output plus the level-0 blurred image used for patch checks.
struct FrameFeatures {
  std::vector<Feature> features;
  GrayImage blurred;
};

FrameFeatures extract_frame(const GrayImage& img, const FrontendConfig& config = {});
std::vector<Feature> extract_features(const GrayImage& img, const FrontendConfig& config = {});

/// `x y level response angle hex64` per line.
void write_features(std::ostream& out, const std::vector<Feature>& features);
std::vector<Feature> read_features(std::istream& in);

}  // namespace stereoloc
