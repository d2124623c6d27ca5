#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace stereoloc {

/// Row-major 8-bit intensity raster. Pixel origin top-left, y down.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, std::uint8_t fill = 0);
  GrayImage(int width, int height, std::vector<std::uint8_t> pixels);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return pixels_.empty(); }

  std::uint8_t operator()(int x, int y) const { return pixels_[index(x, y)]; }
  std::uint8_t& operator()(int x, int y) { return pixels_[index(x, y)]; }
  bool inside(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  const std::vector<std::uint8_t>& pixels() const { return pixels_; }
  const std::uint8_t* data() const { return pixels_.data(); }

  bool operator==(const GrayImage&) const = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

/// Exact quarter turn: source (x, y) lands at (height-1-y, x), so an offset
/// (dx, dy) becomes (-dy, dx) and image angles grow by pi/2.
GrayImage rotate_quarter_turn(const GrayImage& img);

/// Binary PGM (P5, maxval 255). ASCII P2 is accepted on read.
GrayImage read_pgm(std::istream& in);
GrayImage read_pgm(const std::filesystem::path& path);
void write_pgm(std::ostream& out, const GrayImage& img);
void write_pgm(const std::filesystem::path& path, const GrayImage& img);

}  // namespace stereoloc
