#include <cstdio>
#include <sstream>
#include <string>

#include "stereoloc/error.hpp"
#include "stereoloc/io.hpp"

namespace stereoloc {

void write_trajectory(std::ostream& out, const std::vector<TrajectoryPoint>& trajectory) {
  char buf[256];
  for (const auto& p : trajectory) {
    const Pose world_from_cam = p.pose.inverse();
    const Eigen::Quaterniond q = world_from_cam.rotation.quaternion();
    const Vec3& t = world_from_cam.translation;
    std::snprintf(buf, sizeof buf, "%.9f %.12f %.12f %.12f %.12f %.12f %.12f %.12f\n", p.timestamp,
                  t.x(), t.y(), t.z(), q.x(), q.y(), q.z(), q.w());
    out << buf;
  }
}

std::vector<TrajectoryPoint> read_trajectory(std::istream& in) {
  std::vector<TrajectoryPoint> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    TrajectoryPoint p;
    Vec3 t;
    double qx, qy, qz, qw;
    if (!(ss >> p.timestamp >> t.x() >> t.y() >> t.z() >> qx >> qy >> qz >> qw)) {
      throw Error(ErrorCode::kParse, "malformed trajectory line: " + line);
    }
    Pose world_from_cam{Rotation::from_quaternion(Eigen::Quaterniond(qw, qx, qy, qz)), t};
    p.pose = world_from_cam.inverse();
    out.push_back(p);
  }
  return out;
}

}  // namespace stereoloc
