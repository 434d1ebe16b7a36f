#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ledloc/camera.hpp"
#include "ledloc/error.hpp"
#include "ledloc/observations.hpp"
#include "ledloc/scene.hpp"

namespace ledloc {

/// Upper bound on the normal-matrix condition number before a ray bundle
/// is declared degenerate.
inline constexpr double kMaxNormalCondition = 1e12;

/// Distance from x to the line through the ray (unconstrained in t).
double point_ray_distance(const Vec3& x, const Ray& ray);

/// Orthogonal projector onto the plane normal to a ray direction, with
/// the matching right-hand side: |A x - b| is the point-to-ray distance.
struct RayProjector {
  Mat3 A;
  Vec3 b;
};

RayProjector ray_projector(const Ray& ray);

struct LinearEstimate {
  Vec3 position = Vec3::Zero();
  /// Sum of squared point-to-ray distances at `position`, m^2.
  double residual_sq = 0.0;
  int ray_count = 0;
  /// Set when the solution lies behind the origin of at least one ray.
  /// Never fires for a valid camera layout; kept as a diagnostic.
  bool behind_camera = false;
};

/// Least-squares intersection of at least two rays: minimizes the sum of
/// squared point-to-ray distances by solving the accumulated 3x3 normal
/// system. Throws InsufficientRays for fewer than two rays and
/// DegenerateGeometry when the normal matrix is (near) singular.
LinearEstimate triangulate_lls(std::span<const Ray> rays);

/// Outcome for one target; exactly one of `estimate` / `error` is set.
struct TargetLinearResult {
  TargetId target = 0;
  std::optional<LinearEstimate> estimate;
  std::optional<ErrorCode> error;
  std::string message;

  bool ok() const { return estimate.has_value(); }
};

/// Triangulates every target in the observation set independently, in
/// ascending target id order. Per-target failures do not affect other
/// targets. Throws InvalidArgument if an observation names a camera that
/// is not in the scene.
std::vector<TargetLinearResult> localize_linear(const Scene& scene, const ObservationSet& observations);

} // namespace ledloc
