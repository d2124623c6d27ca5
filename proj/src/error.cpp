#include "stereoloc/error.hpp"

namespace stereoloc {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput: return "invalid-input";
    case ErrorCode::kTooSmall: return "too-small";
    case ErrorCode::kBorder: return "border";
    case ErrorCode::kInfiniteDepth: return "infinite-depth";
    case ErrorCode::kInsufficientData: return "insufficient-data";
    case ErrorCode::kNumericalFailure: return "numerical-failure";
    case ErrorCode::kIndefiniteSystem: return "indefinite-system";
    case ErrorCode::kGraph: return "graph";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kGeneration: return "generation";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace stereoloc
