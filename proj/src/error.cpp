#include "ledloc/error.hpp"

namespace ledloc {

std::string_view to_string(ErrorCode code) {
  switch (code) {
  case ErrorCode::InvalidArgument: return "invalid_argument";
  case ErrorCode::BehindCamera: return "behind_camera";
  case ErrorCode::DegenerateLookAt: return "degenerate_look_at";
  case ErrorCode::InsufficientRays: return "insufficient_rays";
  case ErrorCode::DegenerateGeometry: return "degenerate_geometry";
  case ErrorCode::SamplingExhausted: return "sampling_exhausted";
  case ErrorCode::UnsupportedCameraCount: return "unsupported_camera_count";
  case ErrorCode::EmptyInput: return "empty_input";
  case ErrorCode::Parse: return "parse_error";
  }
  return "unknown";
}

} // namespace ledloc
