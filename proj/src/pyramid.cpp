#include <cmath>

#include "stereoloc/error.hpp"
#include "stereoloc/frontend.hpp"

namespace stereoloc {

double ImagePyramid::scale(int level) const { return std::pow(scale_factor, level); }

namespace {

GrayImage resample(const GrayImage& src, int width, int height, double scale) {
  GrayImage out(width, height);
  const int max_x = src.width() - 1;
  const int max_y = src.height() - 1;
  for (int y = 0; y < height; ++y) {
    const double sy = y * scale;
    const int y0 = std::min(static_cast<int>(sy), max_y);
    const int y1 = std::min(y0 + 1, max_y);
    const double fy = sy - y0;
    for (int x = 0; x < width; ++x) {
      const double sx = x * scale;
      const int x0 = std::min(static_cast<int>(sx), max_x);
      const int x1 = std::min(x0 + 1, max_x);
      const double fx = sx - x0;
      const double top = (1 - fx) * src(x0, y0) + fx * src(x1, y0);
      const double bottom = (1 - fx) * src(x0, y1) + fx * src(x1, y1);
      const double v = (1 - fy) * top + fy * bottom;
      out(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  }
  return out;
}

}  // namespace

ImagePyramid build_pyramid(const GrayImage& img, int n, double scale_factor) {
  if (n < 1) throw Error(ErrorCode::kInvalidInput, "pyramid needs at least one level");
  if (!(scale_factor > 1.0)) throw Error(ErrorCode::kInvalidInput, "scale factor must exceed 1");

  ImagePyramid pyr;
  pyr.scale_factor = scale_factor;
  pyr.levels.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double s = pyr.scale(k);
    // The epsilon keeps exact quotients such as 720 / 1.2 from flooring to 599.
    const int w = static_cast<int>(std::floor(img.width() / s + 1e-9));
    const int h = static_cast<int>(std::floor(img.height() / s + 1e-9));
    if (w < kMinExtractionSize || h < kMinExtractionSize) {
      throw Error(ErrorCode::kTooSmall, "pyramid level " + std::to_string(k) + " is " +
                                            std::to_string(w) + "x" + std::to_string(h));
    }
    pyr.levels.push_back(k == 0 ? img : resample(img, w, h, s));
  }
  return pyr;
}

}  // namespace stereoloc
