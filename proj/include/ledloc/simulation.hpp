#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "ledloc/observations.hpp"
#include "ledloc/refinement.hpp"
#include "ledloc/scene.hpp"

namespace ledloc {

using Rng = std::mt19937_64;

/// Independent generator for stream `index` of a master seed.
Rng make_stream(std::uint64_t seed, std::uint64_t index);

struct NoiseModel {
  double sigma = 3.0; ///< per-axis pixel STD
};

struct MonteCarloConfig {
  int iterations = 10000;
  int targets_per_iteration = 3;
  NoiseModel noise;
  std::uint64_t seed = 42;
  SolverConfig solver;
  double sampling_margin = 0.1; ///< meters
  /// Worker threads; 0 uses the hardware concurrency. Results do not
  /// depend on this value.
  int threads = 0;

  void validate() const;
};

/// Ceiling-corner layout of an L x L x 3 m room, every camera aimed at
/// (L/2, L/2, 1.5). Four cameras use all corners in the order
/// (0,0), (L,0), (0,L), (L,L); three drop (L,L); two keep (0,0) and (L,L).
Scene build_table1_scene(double layout_distance_m = 8.0, int camera_count = 4, double focal_px = 1500.0);

/// Three-camera laboratory geometry with 5 mm / 2 um lenses.
Scene build_table4_scene();

/// Uniform rejection sampling over the room shrunk by `margin`, keeping
/// points visible to every camera. Throws SamplingExhausted when a point
/// cannot be found within a bounded number of draws.
std::vector<Vec3> sample_targets(const Scene& scene, int count, double margin, Rng& rng);

/// Noisy pixel observations for targets 0..M-1 seen by every camera.
ObservationSet synthesize_observations(const Scene& scene, std::span<const Vec3> targets, const NoiseModel& noise,
                                       Rng& rng);

struct AxisTriple {
  double x = 0.0, y = 0.0, z = 0.0;
};

/// Error statistics in millimeters.
struct RunMetrics {
  double mpe = 0.0;
  double rmse = 0.0;
  double std = 0.0;
  double cdf50 = 0.0;
  double cdf90 = 0.0;
  AxisTriple axis_mpe, axis_rmse, axis_std, axis_cdf50, axis_cdf90;
  std::vector<double> error_samples;
  std::vector<Vec3> axis_samples; ///< absolute per-axis errors, mm
};

/// Percentile (0..100) of a sorted sample with linear interpolation.
double percentile_sorted(std::span<const double> sorted, double p);

/// `errors` are Euclidean position errors and `axis_errors` the matching
/// absolute per-axis errors, all in mm. Throws EmptyInput on an empty or
/// mismatched sample.
RunMetrics compute_metrics(std::span<const double> errors, std::span<const Vec3> axis_errors);

struct MonteCarloResult {
  RunMetrics mcjo;  ///< two-stage output
  RunMetrics mcvlp; ///< linear stage only
  int iterations = 0;
  int failures = 0;
  /// More than 1% of iterations failed.
  bool flagged = false;
};

/// Per iteration: sample targets, synthesize one observation set, run the
/// linear stage and the refinement on it, and record per-target errors
/// for both. Iteration i draws only from make_stream(seed, i), so the
/// output is identical for any thread count.
MonteCarloResult run_monte_carlo(const MonteCarloConfig& config, const Scene& scene);

enum class SweepParameter { FocalLengthPx, NoiseStd, LayoutDistance, CameraCount };

std::string_view to_string(SweepParameter p);

struct SweepSpec {
  SweepParameter parameter = SweepParameter::FocalLengthPx;
  std::vector<double> values;
  MonteCarloConfig base;
  /// Camera counts to run for every value (ignored for CameraCount).
  std::vector<int> camera_counts{2, 3, 4};
  double focal_px = 1500.0;
  double layout_distance_m = 8.0;

  void validate() const;
};

struct SweepRow {
  double value = 0.0;
  int camera_count = 0;
  std::string_view algorithm; ///< "mcjo" or "mcvlp"
  double mpe_mm = 0.0;
  int failures = 0;
  bool flagged = false;
};

/// One Monte Carlo run per (value, camera count) on the ceiling-corner
/// layout. Every run reuses the base seed, so sweep points share their
/// random streams.
std::vector<SweepRow> run_sweep(const SweepSpec& spec);

} // namespace ledloc
