#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "ledloc/error.hpp"
#include "ledloc/observations.hpp"
#include "ledloc/scene.hpp"
#include "ledloc/triangulation.hpp"

namespace ledloc {

/// Levenberg-Marquardt settings. Damping is applied Marquardt-style as
/// mu * diag(J^T J), so `initial_damping` is dimensionless.
struct SolverConfig {
  int max_iterations = 100;
  double initial_damping = 1e-3;
  double damping_increase = 10.0;
  double damping_decrease = 0.1;
  /// Max-norm of J^T eps, px^2/m.
  double gradient_tol = 1e-8;
  /// Max-norm of the step, meters.
  double step_tol = 1e-10;
  /// Relative cost decrease of an accepted step.
  double cost_tol = 1e-12;

  /// Throws InvalidArgument if any field is out of range.
  void validate() const;
};

enum class Termination { Gradient, Step, Cost, MaxIter };

std::string_view to_string(Termination t);

struct RefinementResult {
  /// One position per target, in ObservationSet::target_ids() order.
  std::vector<Vec3> positions;
  double initial_cost = 0.0; ///< px^2
  double final_cost = 0.0;   ///< px^2
  int iterations = 0;
  bool converged = false;
  Termination termination = Termination::MaxIter;
};

/// Stacked reprojection residual (observed - projected), two entries per
/// observation, ordered by scene camera index then ascending target id.
/// `positions` follows ObservationSet::target_ids() order. Throws
/// BehindCamera if a position is not in front of an observing camera.
Eigen::VectorXd reprojection_residual(const Scene& scene, const ObservationSet& observations,
                                      std::span<const Vec3> positions);

/// Dense Jacobian of reprojection_residual with respect to the stacked
/// positions (rows as in the residual, 3 columns per target).
Eigen::MatrixXd residual_jacobian(const Scene& scene, const ObservationSet& observations,
                                  std::span<const Vec3> positions);

/// Sum of squared reprojection errors of one target, px^2.
double target_reprojection_cost(const Scene& scene, const ObservationSet& observations, TargetId target,
                                const Vec3& position);

/// Joint Levenberg-Marquardt refinement of all targets. The normal matrix
/// is block diagonal (one 3x3 block per target), which is solved block by
/// block; damping and step acceptance are global. Never throws for
/// solver trouble: an unrecoverable run is reported with converged=false.
/// Throws BehindCamera only if `init` itself is infeasible.
RefinementResult refine_lm(const Scene& scene, const ObservationSet& observations, std::span<const Vec3> init,
                           const SolverConfig& config = {});

/// Same iteration as refine_lm but with the full dense 3M x 3M normal
/// system. Reference route for testing the block solve.
RefinementResult refine_lm_dense(const Scene& scene, const ObservationSet& observations,
                                 std::span<const Vec3> init, const SolverConfig& config = {});

struct TargetLocalization {
  TargetId target = 0;
  std::optional<LinearEstimate> linear;
  std::optional<Vec3> refined;
  double linear_cost = 0.0;  ///< px^2 at the linear estimate
  double refined_cost = 0.0; ///< px^2 at the refined position
  std::optional<ErrorCode> error;
  std::string message;

  bool ok() const { return refined.has_value(); }
};

struct LocalizationResult {
  /// Ascending target id.
  std::vector<TargetLocalization> targets;
  /// Joint refinement over the targets whose linear stage succeeded.
  RefinementResult refinement;
};

/// Two-stage pipeline: per-target linear triangulation, then joint
/// refinement initialized from it.
LocalizationResult localize(const Scene& scene, const ObservationSet& observations, const SolverConfig& config = {});

} // namespace ledloc
