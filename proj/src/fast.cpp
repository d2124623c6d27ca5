#include <algorithm>
#include <array>
#include <cstdlib>

#include "stereoloc/error.hpp"
#include "stereoloc/frontend.hpp"

namespace stereoloc {
namespace {

// Bresenham circle of radius 3, clockwise from 12 o'clock.
constexpr std::array<std::array<int, 2>, 16> kCircle{{{0, -3},
                                                      {1, -3},
                                                      {2, -2},
                                                      {3, -1},
                                                      {3, 0},
                                                      {3, 1},
                                                      {2, 2},
                                                      {1, 3},
                                                      {0, 3},
                                                      {-1, 3},
                                                      {-2, 2},
                                                      {-3, 1},
                                                      {-3, 0},
                                                      {-3, -1},
                                                      {-2, -2},
                                                      {-1, -3}}};
constexpr int kArc = 9;

}  // namespace

std::optional<int> fast_score(const GrayImage& img, int x, int y, int threshold) {
  const int center = img(x, y);
  std::array<int, 16> diff{};
  std::array<int, 16> state{};
  for (int k = 0; k < 16; ++k) {
    diff[k] = img(x + kCircle[k][0], y + kCircle[k][1]) - center;
    state[k] = diff[k] > threshold ? 1 : (diff[k] < -threshold ? -1 : 0);
  }
  // Any 9-arc covers at least two of the four compass points.
  int bright = 0, dark = 0;
  for (int k = 0; k < 16; k += 4) {
    bright += state[k] == 1;
    dark += state[k] == -1;
  }
  if (bright < 2 && dark < 2) return std::nullopt;

  for (int sign : {1, -1}) {
    int count = 0;
    for (int k = 0; k < 16; ++k) count += state[k] == sign;
    if (count < kArc) continue;
    if (count == 16) {
      int sum = 0;
      for (int d : diff) sum += std::abs(d);
      return sum;
    }
    // Start right after a non-qualifying pixel so no run wraps past the start.
    int start = 0;
    while (state[start] == sign) ++start;
    int run = 0, sum = 0;
    for (int i = 1; i <= 16; ++i) {
      const int k = (start + i) % 16;
      if (state[k] == sign) {
        ++run;
        sum += std::abs(diff[k]);
        if (run >= kArc && (i == 16 || state[(k + 1) % 16] != sign)) return sum;
      } else {
        run = 0;
        sum = 0;
      }
    }
  }
  return std::nullopt;
}

std::vector<KeyPoint> fast_candidates(const GrayImage& img, int threshold, int border) {
  if (threshold <= 0) throw Error(ErrorCode::kInvalidInput, "FAST threshold must be positive");
  border = std::max(border, 3);
  std::vector<KeyPoint> out;
  for (int y = border; y < img.height() - border; ++y) {
    for (int x = border; x < img.width() - border; ++x) {
      if (auto score = fast_score(img, x, y, threshold)) {
        KeyPoint kp;
        kp.x = x;
        kp.y = y;
        kp.response = *score;
        out.push_back(kp);
      }
    }
  }
  return out;
}

std::vector<KeyPoint> suppress_non_maxima(const std::vector<KeyPoint>& candidates, int width,
                                          int height) {
  std::vector<int> score(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), -1);
  auto at = [&](int x, int y) -> int& {
    return score[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                 static_cast<std::size_t>(x)];
  };
  for (const auto& kp : candidates) at(static_cast<int>(kp.x), static_cast<int>(kp.y)) = kp.response;

  std::vector<KeyPoint> kept;
  for (const auto& kp : candidates) {
    const int x = static_cast<int>(kp.x);
    const int y = static_cast<int>(kp.y);
    bool is_max = true;
    for (int dy = -1; dy <= 1 && is_max; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if ((dx == 0 && dy == 0) || x + dx < 0 || y + dy < 0 || x + dx >= width || y + dy >= height)
          continue;
        const int s = at(x + dx, y + dy);
        const bool earlier = dy < 0 || (dy == 0 && dx < 0);
        if (s > kp.response || (s == kp.response && earlier)) {
          is_max = false;
          break;
        }
      }
    }
    if (is_max) kept.push_back(kp);
  }
  return kept;
}

std::vector<KeyPoint> fast_detect(const GrayImage& img, int threshold, int max_features, int border) {
  auto kept = suppress_non_maxima(fast_candidates(img, threshold, border), img.width(), img.height());
  std::stable_sort(kept.begin(), kept.end(),
                   [](const KeyPoint& a, const KeyPoint& b) { return a.response > b.response; });
  if (max_features >= 0 && kept.size() > static_cast<std::size_t>(max_features)) {
    kept.resize(static_cast<std::size_t>(max_features));
  }
  return kept;
}

}  // namespace stereoloc
