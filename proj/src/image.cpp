#include "stereoloc/image.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "stereoloc/error.hpp"

namespace stereoloc {

GrayImage::GrayImage(int width, int height, std::uint8_t fill)
    : GrayImage(width, height,
                std::vector<std::uint8_t>(static_cast<std::size_t>(std::max(width, 0)) *
                                              static_cast<std::size_t>(std::max(height, 0)),
                                          fill)) {}

GrayImage::GrayImage(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width < 0 || height < 0 ||
      pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error(ErrorCode::kInvalidInput, "pixel count does not match image dimensions");
  }
}

GrayImage rotate_quarter_turn(const GrayImage& img) {
  GrayImage out(img.height(), img.width());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) out(img.height() - 1 - y, x) = img(x, y);
  return out;
}

namespace {

// Reads the next header token, skipping whitespace and comments.
int header_int(std::istream& in) {
  for (;;) {
    int c = in.peek();
    if (c == '#') {
      std::string skip;
      std::getline(in, skip);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  int v = -1;
  if (!(in >> v)) throw Error(ErrorCode::kParse, "malformed PGM header");
  return v;
}

}  // namespace

GrayImage read_pgm(std::istream& in) {
  std::string magic;
  if (!(in >> magic) || (magic != "P5" && magic != "P2")) {
    throw Error(ErrorCode::kParse, "not a PGM file (expected P5 or P2)");
  }
  const int w = header_int(in);
  const int h = header_int(in);
  const int maxval = header_int(in);
  if (w <= 0 || h <= 0) throw Error(ErrorCode::kParse, "bad PGM dimensions");
  if (maxval != 255) throw Error(ErrorCode::kParse, "only 8-bit PGM (maxval 255) is supported");

  std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
  if (magic == "P5") {
    in.get();  // single whitespace byte after maxval
    in.read(reinterpret_cast<char*>(px.data()), static_cast<std::streamsize>(px.size()));
    if (in.gcount() != static_cast<std::streamsize>(px.size())) {
      throw Error(ErrorCode::kParse, "truncated PGM raster");
    }
  } else {
    for (auto& p : px) {
      int v;
      if (!(in >> v) || v < 0 || v > 255) throw Error(ErrorCode::kParse, "bad P2 pixel");
      p = static_cast<std::uint8_t>(v);
    }
  }
  return GrayImage(w, h, std::move(px));
}

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return read_pgm(in);
}

void write_pgm(std::ostream& out, const GrayImage& img) {
  out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data()), static_cast<std::streamsize>(img.pixels().size()));
}

void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  write_pgm(out, img);
}

}  // namespace stereoloc
