#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "stereoloc/error.hpp"
#include "stereoloc/io.hpp"

namespace stereoloc {
namespace {

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  // Next non-empty line with comments stripped; throws at end of input.
  std::istringstream next(const char* what) {
    if (pending_) {
      std::istringstream ss(*pending_);
      pending_.reset();
      return ss;
    }
    std::string line;
    while (std::getline(in_, line)) {
      ++lineno_;
      if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
      if (line.find_first_not_of(" \t\r") != std::string::npos) return std::istringstream(line);
    }
    throw Error(ErrorCode::kParse, std::string("unexpected end of snapshot, expected ") + what);
  }
  void unread(std::string line) { pending_ = std::move(line); }
  [[noreturn]] void fail(const char* what) const {
    throw Error(ErrorCode::kParse, "snapshot line " + std::to_string(lineno_) + ": bad " + what);
  }

 private:
  std::istream& in_;
  int lineno_ = 0;
  std::optional<std::string> pending_;
};

void write_pose(std::ostream& out, const Pose& p) {
  const Vec3 w = p.rotation.log();
  char buf[160];
  std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g %.17g %.17g %.17g", w.x(), w.y(), w.z(),
                p.translation.x(), p.translation.y(), p.translation.z());
  out << buf;
}

bool read_pose(std::istringstream& ss, Pose& p) {
  Vec3 w, t;
  if (!(ss >> w.x() >> w.y() >> w.z() >> t.x() >> t.y() >> t.z())) return false;
  p.rotation = Rotation::exp(w);
  p.translation = t;
  return true;
}

}  // namespace

BAProblem read_snapshot(std::istream& in) {
  LineReader reader(in);
  BAProblem p;
  long a = 0, b = 0, m = 0;
  {
    auto ss = reader.next("header");
    if (!(ss >> a >> b >> m) || a < 0 || b < 0 || m < 0) reader.fail("header");
  }
  p.window_capacity = std::max<std::size_t>(50, static_cast<std::size_t>(b));

  for (;;) {
    auto line = reader.next("camera or landmark");
    std::string tag;
    if (!(line >> tag) || tag != "camera") {
      reader.unread(line.str());
      break;
    }
    CameraModel cam;
    Intrinsics& k = cam.intrinsics;
    if (!(line >> k.fx >> k.fy >> k.cx >> k.cy >> k.width >> k.height) || !read_pose(line, cam.from_body)) {
      reader.fail("camera");
    }
    p.cameras.push_back(cam);
  }
  if (p.cameras.empty()) reader.fail("camera (at least one required)");

  p.landmarks.resize(static_cast<std::size_t>(a));
  for (long i = 0; i < a; ++i) {
    auto line = reader.next("landmark");
    Vec3& x = p.landmarks[static_cast<std::size_t>(i)];
    if (!(line >> x.x() >> x.y() >> x.z())) reader.fail("landmark");
  }
  p.poses.resize(static_cast<std::size_t>(b));
  for (long j = 0; j < b; ++j) {
    auto line = reader.next("pose");
    if (!read_pose(line, p.poses[static_cast<std::size_t>(j)])) reader.fail("pose");
  }
  p.observations.resize(static_cast<std::size_t>(m));
  for (long k = 0; k < m; ++k) {
    auto line = reader.next("observation");
    Observation& o = p.observations[static_cast<std::size_t>(k)];
    int sigma = 0;
    if (!(line >> o.pose >> o.landmark >> o.pixel.x() >> o.pixel.y() >> sigma)) reader.fail("observation");
    if (!(line >> o.camera)) o.camera = 0;
    o.visible = sigma != 0;
  }
  p.validate();
  return p;
}

BAProblem read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return read_snapshot(in);
}

void write_snapshot(std::ostream& out, const BAProblem& p) {
  out << p.landmarks.size() << ' ' << p.poses.size() << ' ' << p.observations.size() << '\n';
  char buf[200];
  for (const auto& cam : p.cameras) {
    const Intrinsics& k = cam.intrinsics;
    std::snprintf(buf, sizeof buf, "camera %.17g %.17g %.17g %.17g %d %d ", k.fx, k.fy, k.cx, k.cy,
                  k.width, k.height);
    out << buf;
    write_pose(out, cam.from_body);
    out << '\n';
  }
  for (const auto& x : p.landmarks) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", x.x(), x.y(), x.z());
    out << buf;
  }
  for (const auto& pose : p.poses) {
    write_pose(out, pose);
    out << '\n';
  }
  for (const auto& o : p.observations) {
    std::snprintf(buf, sizeof buf, "%d %d %.17g %.17g %d %d\n", o.pose, o.landmark, o.pixel.x(),
                  o.pixel.y(), o.visible ? 1 : 0, o.camera);
    out << buf;
  }
}

void write_snapshot(const std::filesystem::path& path, const BAProblem& problem) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  write_snapshot(out, problem);
}

}  // namespace stereoloc
