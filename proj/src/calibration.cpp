#include "stereoloc/calibration.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "stereoloc/error.hpp"

namespace stereoloc {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<double> numbers(const std::string& key, const std::string& value) {
  std::istringstream ss(value);
  std::vector<double> out;
  double x;
  while (ss >> x) out.push_back(x);
  if (!ss.eof()) throw Error(ErrorCode::kParse, "non-numeric value for '" + key + "'");
  return out;
}

class KeyValues {
 public:
  explicit KeyValues(std::istream& in) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw Error(ErrorCode::kParse, "line " + std::to_string(lineno) + ": expected key = value");
      }
      const std::string key = trim(line.substr(0, eq));
      if (!values_.emplace(key, numbers(key, line.substr(eq + 1))).second) {
        throw Error(ErrorCode::kParse, "duplicate key '" + key + "'");
      }
    }
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  const std::vector<double>& get(const std::string& key, std::size_t n) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw Error(ErrorCode::kParse, "missing key '" + key + "'");
    if (it->second.size() != n) {
      throw Error(ErrorCode::kParse, "key '" + key + "' expects " + std::to_string(n) + " values");
    }
    return it->second;
  }
  double scalar(const std::string& key) const { return get(key, 1)[0]; }

 private:
  std::map<std::string, std::vector<double>> values_;
};

Intrinsics read_camera(const KeyValues& kv, const std::string& prefix) {
  Intrinsics k;
  k.fx = kv.scalar(prefix + ".fx");
  k.fy = kv.scalar(prefix + ".fy");
  k.cx = kv.scalar(prefix + ".cx");
  k.cy = kv.scalar(prefix + ".cy");
  k.width = static_cast<int>(kv.scalar(prefix + ".width"));
  k.height = static_cast<int>(kv.scalar(prefix + ".height"));
  return k;
}

void write_camera(std::ostream& out, const Intrinsics& k, const char* prefix) {
  out << prefix << ".fx = " << k.fx << '\n'
      << prefix << ".fy = " << k.fy << '\n'
      << prefix << ".cx = " << k.cx << '\n'
      << prefix << ".cy = " << k.cy << '\n'
      << prefix << ".width = " << k.width << '\n'
      << prefix << ".height = " << k.height << '\n';
}

}  // namespace

StereoRig parse_calibration(std::istream& in) {
  const KeyValues kv(in);
  StereoRig rig;
  rig.left = read_camera(kv, "left");
  rig.right = read_camera(kv, "right");

  const bool has_extrinsic = kv.has("right_from_left.translation");
  if (has_extrinsic) {
    const auto& t = kv.get("right_from_left.translation", 3);
    rig.right_from_left.translation = Vec3(t[0], t[1], t[2]);
    if (kv.has("right_from_left.rotation")) {
      const auto& r = kv.get("right_from_left.rotation", 9);
      Mat3 m;
      m << r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7], r[8];
      try {
        rig.right_from_left.rotation = Rotation::from_matrix(m);
      } catch (const Error&) {
        throw Error(ErrorCode::kParse, "right_from_left.rotation is not a rotation matrix");
      }
    }
    if (kv.has("baseline")) {
      const double b = kv.scalar("baseline");
      if (std::abs(b - rig.baseline()) > 1e-6 * std::max(1.0, b)) {
        throw Error(ErrorCode::kParse, "baseline disagrees with extrinsic translation");
      }
    }
  } else {
    rig.right_from_left.translation = Vec3(-kv.scalar("baseline"), 0, 0);
  }
  try {
    rig.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kParse, e.what());
  }
  return rig;
}

StereoRig load_calibration(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return parse_calibration(in);
}

void write_calibration(std::ostream& out, const StereoRig& rig) {
  const auto old_precision = out.precision(17);
  write_camera(out, rig.left, "left");
  write_camera(out, rig.right, "right");
  out << "baseline = " << rig.baseline() << '\n';
  const Mat3& r = rig.right_from_left.rotation.matrix();
  out << "right_from_left.rotation =";
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out << ' ' << r(i, j);
  const Vec3& t = rig.right_from_left.translation;
  out << "\nright_from_left.translation = " << t.x() << ' ' << t.y() << ' ' << t.z() << '\n';
  out.precision(old_precision);
}

}  // namespace stereoloc
