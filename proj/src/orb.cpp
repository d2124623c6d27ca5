#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "stereoloc/error.hpp"
#include "stereoloc/frontend.hpp"

namespace stereoloc {

namespace {

constexpr PointPair kPatternV1[] = {
#include "brief_pattern_v1.inc"
};
static_assert(std::size(kPatternV1) == 256);

constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace

std::span<const PointPair> brief_pattern() { return kPatternV1; }

void Descriptor256::set(int k, bool value) {
  const std::uint64_t mask = 1ull << (k & 63);
  if (value)
    words_[k >> 6] |= mask;
  else
    words_[k >> 6] &= ~mask;
}

std::string Descriptor256::hex() const {
  std::string s;
  s.reserve(64);
  char buf[17];
  for (int w = 3; w >= 0; --w) {
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(words_[w]));
    s += buf;
  }
  return s;
}

Descriptor256 Descriptor256::from_hex(const std::string& hex) {
  if (hex.size() != 64 || hex.find_first_not_of("0123456789abcdefABCDEF") != std::string::npos) {
    throw Error(ErrorCode::kParse, "descriptor must be 64 hex digits");
  }
  std::array<std::uint64_t, 4> words{};
  for (int w = 0; w < 4; ++w) {
    words[3 - w] = std::stoull(hex.substr(static_cast<std::size_t>(w) * 16, 16), nullptr, 16);
  }
  return Descriptor256(words);
}

double compute_orientation(const GrayImage& img, const KeyPoint& kp, int radius) {
  const int cx = static_cast<int>(std::lround(kp.x));
  const int cy = static_cast<int>(std::lround(kp.y));
  if (cx - radius < 0 || cy - radius < 0 || cx + radius >= img.width() ||
      cy + radius >= img.height()) {
    throw Error(ErrorCode::kBorder, "orientation patch leaves the image");
  }
  long long m10 = 0, m01 = 0;
  const int r2 = radius * radius;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      if (dx * dx + dy * dy > r2) continue;
      const int v = img(cx + dx, cy + dy);
      m10 += dx * v;
      m01 += dy * v;
    }
  }
  if (m10 == 0 && m01 == 0) return 0.0;
  double angle = std::atan2(static_cast<double>(m01), static_cast<double>(m10));
  if (angle < 0) angle += kTwoPi;
  return angle >= kTwoPi ? 0.0 : angle;
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0)) throw Error(ErrorCode::kInvalidInput, "blur sigma must be positive");
  const int half = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * half + 1));
  double sum = 0;
  for (int i = -half; i <= half; ++i) {
    k[static_cast<std::size_t>(i + half)] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[static_cast<std::size_t>(i + half)];
  }
  for (auto& v : k) v /= sum;
  return k;
}

std::vector<double> gaussian_blur_wide(const GrayImage& img, double sigma) {
  const auto kernel = gaussian_kernel(sigma);
  const int half = static_cast<int>(kernel.size() / 2);
  const int w = img.width(), h = img.height();
  auto idx = [w](int x, int y) {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x);
  };

  std::vector<double> horizontal(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int i = -half; i <= half; ++i) {
        acc += kernel[static_cast<std::size_t>(i + half)] * img(std::clamp(x + i, 0, w - 1), y);
      }
      horizontal[idx(x, y)] = acc;
    }
  }
  std::vector<double> out(horizontal.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int i = -half; i <= half; ++i) {
        acc += kernel[static_cast<std::size_t>(i + half)] * horizontal[idx(x, std::clamp(y + i, 0, h - 1))];
      }
      out[idx(x, y)] = acc;
    }
  }
  return out;
}

GrayImage gaussian_blur(const GrayImage& img, double sigma) {
  const auto wide = gaussian_blur_wide(img, sigma);
  std::vector<std::uint8_t> px(wide.size());
  std::transform(wide.begin(), wide.end(), px.begin(), [](double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
  });
  return GrayImage(img.width(), img.height(), std::move(px));
}

Descriptor256 brief_describe(const GrayImage& blurred, const KeyPoint& kp,
                             std::span<const PointPair> pattern) {
  if (pattern.size() > 256) throw Error(ErrorCode::kInvalidInput, "pattern exceeds 256 pairs");
  const int cx = static_cast<int>(std::lround(kp.x));
  const int cy = static_cast<int>(std::lround(kp.y));
  const double c = std::cos(kp.angle);
  const double s = std::sin(kp.angle);
  auto sample = [&](int px, int py) {
    const int x = cx + static_cast<int>(std::lround(c * px - s * py));
    const int y = cy + static_cast<int>(std::lround(s * px + c * py));
    if (!blurred.inside(x, y)) throw Error(ErrorCode::kBorder, "BRIEF footprint leaves the image");
    return blurred(x, y);
  };

  Descriptor256 d;
  for (std::size_t k = 0; k < pattern.size(); ++k) {
    const auto& p = pattern[k];
    d.set(static_cast<int>(k), sample(p.ax, p.ay) < sample(p.bx, p.by));
  }
  return d;
}

FrameFeatures extract_frame(const GrayImage& img, const FrontendConfig& config) {
  if (img.width() < kMinExtractionSize || img.height() < kMinExtractionSize) {
    throw Error(ErrorCode::kTooSmall, "extraction needs at least 64x64 pixels");
  }
  const ImagePyramid pyr = build_pyramid(img, config.levels, config.scale_factor);
  const int border = std::max(config.border, config.orientation_radius);

  FrameFeatures out;
  for (int level = 0; level < static_cast<int>(pyr.levels.size()); ++level) {
    const GrayImage& raw = pyr.levels[static_cast<std::size_t>(level)];
    GrayImage blurred = gaussian_blur(raw, config.blur_sigma);
    const double scale = pyr.scale(level);
    for (KeyPoint kp : fast_detect(raw, config.fast_threshold, config.max_features_per_level, border)) {
      kp.angle = compute_orientation(raw, kp, config.orientation_radius);
      Feature f;
      f.descriptor = brief_describe(blurred, kp);
      kp.level = level;
      kp.x *= scale;
      kp.y *= scale;
      f.keypoint = kp;
      out.features.push_back(f);
    }
    if (level == 0) out.blurred = std::move(blurred);
  }
  // Levels are appended in order, so ties keep level-then-response order.
  std::stable_sort(out.features.begin(), out.features.end(), [](const Feature& a, const Feature& b) {
    return a.keypoint.response > b.keypoint.response;
  });
  return out;
}

std::vector<Feature> extract_features(const GrayImage& img, const FrontendConfig& config) {
  return extract_frame(img, config).features;
}

void write_features(std::ostream& out, const std::vector<Feature>& features) {
  char buf[128];
  for (const auto& f : features) {
    const auto& k = f.keypoint;
    std::snprintf(buf, sizeof buf, "%.6f %.6f %d %d %.9f ", k.x, k.y, k.level, k.response, k.angle);
    out << buf << f.descriptor.hex() << '\n';
  }
}

std::vector<Feature> read_features(std::istream& in) {
  std::vector<Feature> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    Feature f;
    std::string hex;
    if (!(ss >> f.keypoint.x >> f.keypoint.y >> f.keypoint.level >> f.keypoint.response >>
          f.keypoint.angle >> hex)) {
      throw Error(ErrorCode::kParse, "malformed feature line: " + line);
    }
    f.descriptor = Descriptor256::from_hex(hex);
    out.push_back(f);
  }
  return out;
}

}  // namespace stereoloc
