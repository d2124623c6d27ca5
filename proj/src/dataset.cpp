#include "stereoloc/dataset.hpp"

#include <cstdio>
#include <fstream>

#include "stereoloc/calibration.hpp"
#include "stereoloc/error.hpp"
#include "stereoloc/io.hpp"
#include "stereoloc/synthetic.hpp"

namespace stereoloc {

std::string Dataset::frame_name(std::size_t frame) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu.pgm", frame);
  return buf;
}

Dataset Dataset::open(const std::filesystem::path& root) {
  Dataset d;
  d.root_ = root;
  d.rig_ = load_calibration(root / "calib.txt");
  std::ifstream times(root / "times.txt");
  if (!times) throw Error(ErrorCode::kIo, "cannot open " + (root / "times.txt").string());
  double t;
  while (times >> t) d.timestamps_.push_back(t);
  if (!times.eof()) throw Error(ErrorCode::kParse, "malformed times.txt");
  if (std::filesystem::exists(root / "imu.csv")) d.imu_ = read_imu_csv(root / "imu.csv");
  return d;
}

GrayImage Dataset::left(std::size_t frame) const { return read_pgm(root_ / "left" / frame_name(frame)); }
GrayImage Dataset::right(std::size_t frame) const { return read_pgm(root_ / "right" / frame_name(frame)); }

void write_dataset(const std::filesystem::path& root, const SyntheticScene& scene) {
  std::filesystem::create_directories(root / "left");
  std::filesystem::create_directories(root / "right");
  {
    std::ofstream out(root / "calib.txt");
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + (root / "calib.txt").string());
    write_calibration(out, scene.rig);
  }
  {
    std::ofstream out(root / "times.txt");
    char buf[64];
    for (double t : scene.timestamps) {
      std::snprintf(buf, sizeof buf, "%.9f\n", t);
      out << buf;
    }
  }
  {
    std::ofstream out(root / "imu.csv");
    write_imu_csv(out, scene.gyro);
  }
  std::vector<TrajectoryPoint> truth;
  for (std::size_t j = 0; j < scene.poses.size(); ++j) {
    write_pgm(root / "left" / Dataset::frame_name(j), render_view(scene, static_cast<int>(j), 0));
    write_pgm(root / "right" / Dataset::frame_name(j), render_view(scene, static_cast<int>(j), 1));
    truth.push_back({scene.timestamps[j], scene.poses[j]});
  }
  std::ofstream gt(root / "groundtruth.txt");
  write_trajectory(gt, truth);
}

}  // namespace stereoloc
