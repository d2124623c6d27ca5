#pragma once

#include <filesystem>
#include <vector>

#include "stereoloc/association.hpp"
#include "stereoloc/geometry.hpp"
#include "stereoloc/image.hpp"

namespace stereoloc {

struct SyntheticScene;

// On-disk layout:
//   calib.txt          calibration (see calibration.hpp)
//   times.txt          one timestamp (seconds) per frame
//   imu.csv            timestamp,wx,wy,wz
//   left/NNNNNN.pgm    frame NNNNNN, zero padded to six digits
//   right/NNNNNN.pgm
class Dataset {
 public:
  static Dataset open(const std::filesystem::path& root);

  std::size_t size() const { return timestamps_.size(); }
  const StereoRig& rig() const { return rig_; }
  const std::vector<double>& timestamps() const { return timestamps_; }
  const std::vector<ImuSample>& imu() const { return imu_; }
  GrayImage left(std::size_t frame) const;
  GrayImage right(std::size_t frame) const;

  static std::string frame_name(std::size_t frame);

 private:
  std::filesystem::path root_;
  StereoRig rig_;
  std::vector<double> timestamps_;
  std::vector<ImuSample> imu_;
};

/// Renders `scene` and writes it in the dataset layout, plus ground truth
/// in `groundtruth.txt` (trajectory format).
void write_dataset(const std::filesystem::path& root, const SyntheticScene& scene);

}  // namespace stereoloc
