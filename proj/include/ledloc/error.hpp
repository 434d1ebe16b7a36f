#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ledloc {

enum class ErrorCode {
  InvalidArgument,
  BehindCamera,
  DegenerateLookAt,
  InsufficientRays,
  DegenerateGeometry,
  SamplingExhausted,
  UnsupportedCameraCount,
  EmptyInput,
  Parse,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-readable code. Thrown by every public
/// operation whose contract lists an error condition.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

} // namespace ledloc
