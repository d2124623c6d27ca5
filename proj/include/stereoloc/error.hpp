#pragma once

#include <stdexcept>
#include <string>

namespace stereoloc {

enum class ErrorCode {
  kInvalidInput,
  kTooSmall,          // image or pyramid level below the 64x64 floor
  kBorder,            // patch or pattern footprint leaves the image
  kInfiniteDepth,     // disparity at or below the minimum
  kInsufficientData,  // IMU samples do not cover the requested interval
  kNumericalFailure,  // singular landmark block
  kIndefiniteSystem,  // non-positive Cholesky pivot
  kGraph,             // cyclic or malformed task graph
  kParse,
  kGeneration,
  kIo,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace stereoloc
