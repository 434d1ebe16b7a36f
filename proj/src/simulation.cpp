#include "ledloc/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

namespace ledloc {

Rng make_stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

void MonteCarloConfig::validate() const {
  if (iterations < 1 || targets_per_iteration < 1) {
    throw Error(ErrorCode::InvalidArgument, "iterations and targets per iteration must be at least 1");
  }
  if (!(noise.sigma >= 0.0) || !std::isfinite(noise.sigma)) {
    throw Error(ErrorCode::InvalidArgument, "noise sigma must be finite and nonnegative");
  }
  if (!(sampling_margin >= 0.0)) throw Error(ErrorCode::InvalidArgument, "sampling margin must be nonnegative");
  if (threads < 0) throw Error(ErrorCode::InvalidArgument, "thread count must be nonnegative");
  solver.validate();
}

Scene build_table1_scene(double layout_distance_m, int camera_count, double focal_px) {
  if (!(layout_distance_m > 0.0)) throw Error(ErrorCode::InvalidArgument, "layout distance must be positive");
  const double l = layout_distance_m;
  const double height = 3.0;
  std::vector<Vec3> corners;
  switch (camera_count) {
  case 2: corners = {{0, 0, height}, {l, l, height}}; break;
  case 3: corners = {{0, 0, height}, {l, 0, height}, {0, l, height}}; break;
  case 4: corners = {{0, 0, height}, {l, 0, height}, {0, l, height}, {l, l, height}}; break;
  default:
    throw Error(ErrorCode::UnsupportedCameraCount,
                "camera count must be 2, 3 or 4, got " + std::to_string(camera_count));
  }
  const Vec3 focus(l / 2.0, l / 2.0, 1.5);
  const Intrinsics intrinsics = Intrinsics::centered(focal_px, 2080.0, 1560.0);
  std::vector<Camera> cameras;
  for (std::size_t i = 0; i < corners.size(); ++i) {
    cameras.push_back(Camera{static_cast<CameraId>(i), intrinsics, look_at_pose(corners[i], focus)});
  }
  return Scene(std::move(cameras), Room{Vec3::Zero(), Vec3(l, l, height)});
}

Scene build_table4_scene() {
  // 5 mm focal length at 2 um pixel pitch.
  const Intrinsics intrinsics = Intrinsics::centered(5.0 * 1000.0 / 2.0, 1296.0, 972.0);
  const std::vector<std::pair<Vec3, Vec3>> pairs = {
      {{0.05, 0.13, 2.35}, {2.0, 1.6, 0.0}},
      {{3.50, 0.09, 2.30}, {1.5, 1.4, 0.0}},
      {{1.77, 3.41, 2.26}, {1.8, 1.9, 0.0}},
  };
  std::vector<Camera> cameras;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    cameras.push_back(Camera{static_cast<CameraId>(i), intrinsics, look_at_pose(pairs[i].first, pairs[i].second)});
  }
  return Scene(std::move(cameras), Room{Vec3::Zero(), Vec3(3.6, 3.6, 2.4)});
}

std::vector<Vec3> sample_targets(const Scene& scene, int count, double margin, Rng& rng) {
  constexpr int kMaxDrawsPerTarget = 100000;
  const Vec3 lo = scene.room().min.array() + margin;
  const Vec3 hi = scene.room().max.array() - margin;
  if (!(lo.array() <= hi.array()).all()) {
    throw Error(ErrorCode::SamplingExhausted, "room is empty after shrinking by the sampling margin");
  }

  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int j = 0; j < count; ++j) {
    bool found = false;
    for (int draw = 0; draw < kMaxDrawsPerTarget && !found; ++draw) {
      Vec3 p;
      for (int a = 0; a < 3; ++a) {
        p(a) = hi(a) > lo(a) ? std::uniform_real_distribution<double>(lo(a), hi(a))(rng) : lo(a);
      }
      const bool visible = std::all_of(scene.cameras().begin(), scene.cameras().end(),
                                       [&](const Camera& c) { return is_visible(c, p); });
      if (visible) {
        out.push_back(p);
        found = true;
      }
    }
    if (!found) {
      throw Error(ErrorCode::SamplingExhausted, "no point visible to every camera after " +
                                                    std::to_string(kMaxDrawsPerTarget) + " draws");
    }
  }
  return out;
}

ObservationSet synthesize_observations(const Scene& scene, std::span<const Vec3> targets, const NoiseModel& noise,
                                       Rng& rng) {
  if (!(noise.sigma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise sigma must be nonnegative");
  std::normal_distribution<double> gauss(0.0, noise.sigma > 0.0 ? noise.sigma : 1.0);
  ObservationSet set;
  for (const auto& camera : scene.cameras()) {
    for (std::size_t j = 0; j < targets.size(); ++j) {
      PixelPoint p = project(camera, targets[j]);
      if (noise.sigma > 0.0) {
        p.u += gauss(rng);
        p.v += gauss(rng);
      }
      set.add(camera.id, static_cast<TargetId>(j), p);
    }
  }
  return set;
}

double percentile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw Error(ErrorCode::EmptyInput, "percentile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(p, 0.0, 100.0) / 100.0;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

namespace {

struct Summary {
  double mean, rmse, std, p50, p90;
};

Summary summarize(std::vector<double> sample) {
  const auto n = static_cast<double>(sample.size());
  double sum = 0.0, sum_sq = 0.0;
  for (double e : sample) {
    sum += e;
    sum_sq += e * e;
  }
  Summary s{};
  s.mean = sum / n;
  s.rmse = std::sqrt(sum_sq / n);
  double dev_sq = 0.0;
  for (double e : sample) dev_sq += (e - s.mean) * (e - s.mean);
  s.std = sample.size() > 1 ? std::sqrt(dev_sq / (n - 1.0)) : 0.0;
  std::sort(sample.begin(), sample.end());
  s.p50 = percentile_sorted(sample, 50.0);
  s.p90 = percentile_sorted(sample, 90.0);
  return s;
}

} // namespace

RunMetrics compute_metrics(std::span<const double> errors, std::span<const Vec3> axis_errors) {
  if (errors.empty()) throw Error(ErrorCode::EmptyInput, "no error samples");
  if (axis_errors.size() != errors.size()) {
    throw Error(ErrorCode::EmptyInput, "per-axis sample does not match the error sample");
  }
  RunMetrics m;
  m.error_samples.assign(errors.begin(), errors.end());
  m.axis_samples.assign(axis_errors.begin(), axis_errors.end());

  const Summary all = summarize(m.error_samples);
  m.mpe = all.mean;
  m.rmse = all.rmse;
  m.std = all.std;
  m.cdf50 = all.p50;
  m.cdf90 = all.p90;

  for (int a = 0; a < 3; ++a) {
    std::vector<double> col;
    col.reserve(axis_errors.size());
    for (const auto& v : axis_errors) col.push_back(v(a));
    const Summary s = summarize(std::move(col));
    auto set = [a](AxisTriple& t, double value) { (a == 0 ? t.x : a == 1 ? t.y : t.z) = value; };
    set(m.axis_mpe, s.mean);
    set(m.axis_rmse, s.rmse);
    set(m.axis_std, s.std);
    set(m.axis_cdf50, s.p50);
    set(m.axis_cdf90, s.p90);
  }
  return m;
}

namespace {

struct IterationOutcome {
  bool failed = false;
  std::vector<Vec3> refined_error_m; // signed, meters
  std::vector<Vec3> linear_error_m;
};

IterationOutcome run_iteration(const MonteCarloConfig& config, const Scene& scene, std::uint64_t index) {
  Rng rng = make_stream(config.seed, index);
  const auto truth = sample_targets(scene, config.targets_per_iteration, config.sampling_margin, rng);
  const auto observations = synthesize_observations(scene, truth, config.noise, rng);
  const auto result = localize(scene, observations, config.solver);

  IterationOutcome out;
  if (!result.refinement.converged) {
    out.failed = true;
    return out;
  }
  for (std::size_t j = 0; j < truth.size(); ++j) {
    const auto& t = result.targets[j];
    if (!t.ok()) {
      out.failed = true;
      return out;
    }
    out.refined_error_m.push_back(*t.refined - truth[j]);
    out.linear_error_m.push_back(t.linear->position - truth[j]);
  }
  return out;
}

RunMetrics metrics_from(const std::vector<IterationOutcome>& outcomes, bool refined) {
  std::vector<double> errors;
  std::vector<Vec3> axis;
  for (const auto& o : outcomes) {
    if (o.failed) continue;
    for (const auto& e : refined ? o.refined_error_m : o.linear_error_m) {
      const Vec3 mm = 1000.0 * e;
      errors.push_back(mm.norm());
      axis.push_back(mm.cwiseAbs());
    }
  }
  return compute_metrics(errors, axis);
}

} // namespace

MonteCarloResult run_monte_carlo(const MonteCarloConfig& config, const Scene& scene) {
  config.validate();
  const auto n = static_cast<std::size_t>(config.iterations);
  std::vector<IterationOutcome> outcomes(n);

  unsigned workers = config.threads > 0 ? static_cast<unsigned>(config.threads) : std::thread::hardware_concurrency();
  workers = std::clamp<unsigned>(workers, 1u, static_cast<unsigned>(n));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    try {
      for (std::size_t i = next++; i < n; i = next++) {
        outcomes[i] = run_iteration(config, scene, i);
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = n;
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);

  MonteCarloResult result;
  result.iterations = config.iterations;
  result.failures = static_cast<int>(std::count_if(outcomes.begin(), outcomes.end(),
                                                   [](const IterationOutcome& o) { return o.failed; }));
  result.flagged = result.failures * 100 > config.iterations;
  if (result.failures == config.iterations) {
    throw Error(ErrorCode::EmptyInput, "every Monte Carlo iteration failed");
  }
  result.mcjo = metrics_from(outcomes, true);
  result.mcvlp = metrics_from(outcomes, false);
  return result;
}

std::string_view to_string(SweepParameter p) {
  switch (p) {
  case SweepParameter::FocalLengthPx: return "focal";
  case SweepParameter::NoiseStd: return "noise";
  case SweepParameter::LayoutDistance: return "layout";
  case SweepParameter::CameraCount: return "cameras";
  }
  return "unknown";
}

void SweepSpec::validate() const {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "sweep needs at least one value");
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (!(values[i] > values[i - 1])) throw Error(ErrorCode::InvalidArgument, "sweep values must be strictly increasing");
  }
  for (double v : values) {
    const bool ok = parameter == SweepParameter::NoiseStd ? v >= 0.0 : v > 0.0;
    if (!std::isfinite(v) || !ok) {
      throw Error(ErrorCode::InvalidArgument, std::string(to_string(parameter)) + " sweep value out of range");
    }
  }
  if (parameter == SweepParameter::CameraCount) {
    for (double v : values) {
      if (v != 2.0 && v != 3.0 && v != 4.0) {
        throw Error(ErrorCode::UnsupportedCameraCount, "camera count sweep values must be 2, 3 or 4");
      }
    }
  } else if (camera_counts.empty()) {
    throw Error(ErrorCode::InvalidArgument, "sweep needs at least one camera count");
  }
  base.validate();
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
  spec.validate();
  std::vector<SweepRow> rows;
  for (double value : spec.values) {
    const std::vector<int> counts =
        spec.parameter == SweepParameter::CameraCount ? std::vector<int>{static_cast<int>(value)} : spec.camera_counts;
    for (int count : counts) {
      MonteCarloConfig config = spec.base;
      double focal = spec.focal_px;
      double layout = spec.layout_distance_m;
      switch (spec.parameter) {
      case SweepParameter::FocalLengthPx: focal = value; break;
      case SweepParameter::NoiseStd: config.noise.sigma = value; break;
      case SweepParameter::LayoutDistance: layout = value; break;
      case SweepParameter::CameraCount: break;
      }
      const Scene scene = build_table1_scene(layout, count, focal);
      const MonteCarloResult r = run_monte_carlo(config, scene);
      rows.push_back({value, count, "mcjo", r.mcjo.mpe, r.failures, r.flagged});
      rows.push_back({value, count, "mcvlp", r.mcvlp.mpe, r.failures, r.flagged});
    }
  }
  return rows;
}

} // namespace ledloc
