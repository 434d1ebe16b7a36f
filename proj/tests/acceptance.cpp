// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "../tools/commands.hpp"
#include "ledloc/refinement.hpp"
#include "ledloc/simulation.hpp"
#include "ledloc/triangulation.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace ledloc;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

void expect(Outcome& o, bool cond, const std::string& what) {
  if (!cond) o.pass = false;
  if (!o.detail.empty()) o.detail += "; ";
  o.detail += what + (cond ? "" : " [x]");
}

std::string fmt(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

bool within(double value, double target, double rel) { return std::abs(value - target) <= rel * target; }

template <class T>
bool nonincreasing(const std::vector<T>& v) {
  return std::is_sorted(v.rbegin(), v.rend());
}

template <class T>
bool nondecreasing(const std::vector<T>& v) {
  return std::is_sorted(v.begin(), v.end());
}

// The baseline run is shared by criteria 1-3.
const MonteCarloResult& baseline_run() {
  static const MonteCarloResult r = [] {
    MonteCarloConfig config;
    config.iterations = 10000;
    config.seed = 42;
    return run_monte_carlo(config, build_table1_scene());
  }();
  return r;
}

Outcome baseline_accuracy() {
  Outcome o;
  const auto& r = baseline_run();
  expect(o, r.failures == 0, "failures " + std::to_string(r.failures));
  expect(o, within(r.mcjo.mpe, 9.69, 0.08), "MCJO MPE " + fmt(r.mcjo.mpe) + " vs 9.69");
  expect(o, within(r.mcvlp.mpe, 12.00, 0.08), "MC-VLP MPE " + fmt(r.mcvlp.mpe) + " vs 12.00");
  expect(o, within(r.mcjo.rmse, 10.82, 0.08), "MCJO RMSE " + fmt(r.mcjo.rmse) + " vs 10.82");
  expect(o, within(r.mcjo.cdf50, 9.08, 0.10), "CDF50 " + fmt(r.mcjo.cdf50) + " vs 9.08");
  expect(o, within(r.mcjo.cdf90, 16.07, 0.10), "CDF90 " + fmt(r.mcjo.cdf90) + " vs 16.07");
  return o;
}

Outcome relative_improvement() {
  Outcome o;
  const auto& r = baseline_run();
  const double gain = (r.mcvlp.mpe - r.mcjo.mpe) / r.mcvlp.mpe;
  expect(o, gain >= 0.14 && gain <= 0.24, "improvement " + fmt(100.0 * gain, 1) + "% in [14, 24]");
  return o;
}

Outcome per_axis_structure() {
  Outcome o;
  const auto& a = baseline_run().mcjo.axis_mpe;
  const double xy = std::abs(a.x - a.y) / std::max(a.x, a.y);
  expect(o, xy <= 0.05, "x " + fmt(a.x) + " / y " + fmt(a.y) + " differ by " + fmt(100.0 * xy, 2) + "%");
  expect(o, a.z < a.x && a.z < a.y, "z " + fmt(a.z) + " smallest");
  return o;
}

std::vector<double> mpe_series(const std::vector<SweepRow>& rows, int cameras, std::string_view algorithm) {
  std::vector<double> out;
  for (const auto& r : rows) {
    if (r.camera_count == cameras && r.algorithm == algorithm) out.push_back(r.mpe_mm);
  }
  return out;
}

Outcome focal_sweep() {
  Outcome o;
  SweepSpec spec;
  spec.parameter = SweepParameter::FocalLengthPx;
  spec.values = {500, 1000, 1500, 2000, 3000, 4000};
  spec.camera_counts = {4};
  spec.base.iterations = 10000;
  const auto rows = run_sweep(spec);
  const auto mcjo = mpe_series(rows, 4, "mcjo");
  expect(o, within(mcjo.front(), 29.30, 0.10), "500 px " + fmt(mcjo.front()) + " vs 29.30");
  expect(o, within(mcjo.back(), 4.10, 0.10), "4000 px " + fmt(mcjo.back()) + " vs 4.10");
  expect(o, nonincreasing(mcjo), "monotone nonincreasing");
  return o;
}

Outcome trend_suite() {
  Outcome o;
  auto sweep = [](SweepParameter p, std::vector<double> values) {
    SweepSpec spec;
    spec.parameter = p;
    spec.values = std::move(values);
    spec.base.iterations = 2000;
    return run_sweep(spec);
  };

  const auto noise = sweep(SweepParameter::NoiseStd, {1, 2, 3, 4, 5});
  const auto layout = sweep(SweepParameter::LayoutDistance, {4, 6, 8, 10});
  bool noise_ok = true, layout_ok = true;
  for (int n : {2, 3, 4}) {
    for (std::string_view alg : {"mcjo", "mcvlp"}) {
      noise_ok = noise_ok && nondecreasing(mpe_series(noise, n, alg));
      layout_ok = layout_ok && nondecreasing(mpe_series(layout, n, alg));
    }
  }
  expect(o, noise_ok, "sigma 1..5 px nondecreasing");
  expect(o, layout_ok, "L 4..10 m nondecreasing");

  const auto cams = sweep(SweepParameter::CameraCount, {2, 3, 4});
  bool cams_ok = true;
  for (std::string_view alg : {"mcjo", "mcvlp"}) {
    std::vector<double> series;
    for (const auto& r : cams) {
      if (r.algorithm == alg) series.push_back(r.mpe_mm);
    }
    cams_ok = cams_ok && nonincreasing(series);
  }
  expect(o, cams_ok, "cameras 2..4 nonincreasing");
  return o;
}

Outcome noiseless_exactness() {
  Outcome o;
  std::mt19937_64 rng(1001);
  int cases = 0;
  double worst_linear = 0.0, worst_refined = 0.0;
  int cost_violations = 0;
  while (cases < 1000) {
    const Scene scene = testing::random_scene(rng);
    std::vector<Vec3> truth;
    try {
      truth = sample_targets(scene, 1 + static_cast<int>(rng() % 3), 0.1, rng);
    } catch (const Error&) {
      continue;
    }
    const LocalizationResult r = localize(scene, testing::exact_observations(scene, truth));
    for (std::size_t j = 0; j < truth.size(); ++j) {
      const auto& t = r.targets[j];
      if (!t.ok()) {
        worst_refined = std::numeric_limits<double>::infinity();
        continue;
      }
      worst_linear = std::max(worst_linear, (t.linear->position - truth[j]).norm());
      worst_refined = std::max(worst_refined, (*t.refined - truth[j]).norm());
      if (t.refined_cost > t.linear_cost) ++cost_violations;
    }
    ++cases;
  }
  expect(o, worst_linear < 1e-6, "stage 1 worst " + sci(worst_linear) + " m");
  expect(o, worst_refined < 1e-6, "stage 2 worst " + sci(worst_refined) + " m");
  expect(o, cost_violations == 0, "cost increases " + std::to_string(cost_violations));
  return o;
}

// The grid argmin is no worse than the grid point nearest the optimum,
// so with A = sum(I - d d^T) and spacing h:
//   (g - x*)^T A (g - x*) <= 3/4 lambda_max(A) h^2.
// For well conditioned A this is the usual "within one grid step".
Outcome oracle_equivalence() {
  Outcome o;
  std::mt19937_64 rng(707);
  constexpr double kStep = 1e-3, kHalf = 0.05;
  double worst_ratio = 0.0, worst_gap = 0.0, worst_sep = 0.0, worst_excess = -1.0;
  int cases = 0;
  while (cases < 50) {
    const Scene scene = testing::random_scene(rng, 2, 4);
    std::vector<Vec3> truth;
    try {
      truth = sample_targets(scene, 3, 0.1, rng);
    } catch (const Error&) {
      continue;
    }
    const ObservationSet obs = testing::noisy_observations(scene, truth, 3.0, rng);

    std::vector<Ray> rays;
    for (const auto& c : scene.cameras()) rays.push_back(observation_ray(c, obs.at(c.id, 0)));
    const Vec3 closed = triangulate_lls(rays).position;
    if ((closed - truth[0]).cwiseAbs().maxCoeff() > kHalf - kStep) continue; // optimum outside the cube

    const Vec3 grid = testing::grid_search_lls(rays, truth[0], kHalf, kStep);
    Mat3 a = Mat3::Zero();
    for (const auto& r : rays) a += Mat3::Identity() - r.direction() * r.direction().transpose();
    const double lambda_max = Eigen::SelfAdjointEigenSolver<Mat3>(a).eigenvalues()(2);
    const Vec3 d = grid - closed;
    worst_ratio = std::max(worst_ratio, d.dot(a * d) / (0.75 * lambda_max * kStep * kStep));
    worst_gap = std::max(worst_gap, d.cwiseAbs().maxCoeff());
    worst_excess = std::max(worst_excess, testing::sum_sq_line_distance(closed, rays) -
                                              testing::sum_sq_line_distance(grid, rays));

    std::vector<Vec3> init;
    for (const auto& t : localize_linear(scene, obs)) init.push_back(t.estimate->position);
    const RefinementResult joint = refine_lm(scene, obs, init);
    for (std::size_t j = 0; j < truth.size(); ++j) {
      ObservationSet alone;
      for (const auto& [key, px] : obs.entries()) {
        if (key.second == static_cast<TargetId>(j)) alone.add(key.first, key.second, px);
      }
      const RefinementResult single = refine_lm(scene, alone, std::span<const Vec3>(&init[j], 1));
      worst_sep = std::max(worst_sep, (single.positions[0] - joint.positions[j]).norm());
    }
    ++cases;
  }
  expect(o, worst_excess <= 1e-15, "closed form no worse than any grid point");
  expect(o, worst_ratio <= 1.0 + 1e-9,
         "grid gap within one step in the objective metric (worst " + fmt(worst_ratio, 3) + " of bound, " +
             fmt(worst_gap * 1e3, 3) + " mm max-norm)");
  expect(o, worst_sep < 1e-9, "separability gap " + sci(worst_sep) + " m");
  return o;
}

Outcome jacobian_check() {
  Outcome o;
  std::mt19937_64 rng(808);
  double worst = 0.0;
  int cases = 0;
  while (cases < 100) {
    const Scene scene = testing::random_scene(rng);
    std::vector<Vec3> x;
    try {
      x = sample_targets(scene, 2, 0.1, rng);
    } catch (const Error&) {
      continue;
    }
    const ObservationSet obs = testing::noisy_observations(scene, x, 3.0, rng);
    const Eigen::MatrixXd analytic = residual_jacobian(scene, obs, x);
    worst = std::max(worst, testing::max_relative_error(analytic, testing::fd_jacobian(scene, obs, x, 1e-6)));
    ++cases;
  }
  expect(o, worst < 1e-5, "max relative error " + sci(worst) + " over 100 configurations");
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  Outcome o;
  const fs::path dir = fs::temp_directory_path() / ("ledloc_accept_" + std::to_string(std::random_device{}()));
  fs::create_directories(dir);
  const auto p = [&](const char* name) { return (dir / name).string(); };
  std::ostringstream sink;
  auto run = [&](std::vector<std::string> args) { return cli::run(args, sink) == cli::kSuccess; };

  bool ran = true;
  for (const char* t : {"1", "4"}) {
    const std::string tag(t);
    ran &= run({"simulate", "--preset", "table1", "--iterations", "2000", "--seed", "9", "--threads", t, "--out",
                p(("sim" + tag + ".csv").c_str()), "--emit-cdf", p(("cdf" + tag + ".csv").c_str())});
    ran &= run({"sweep", "--parameter", "focal", "--values", "1000,2000", "--iterations", "500", "--seed", "9",
                "--threads", t, "--out", p(("sweep" + tag + ".csv").c_str())});
  }
  ran &= run({"simulate", "--preset", "table1", "--iterations", "2000", "--seed", "9", "--threads", "1", "--out",
              p("sim_again.csv")});

  {
    std::ofstream targets(p("targets.csv"));
    targets << "frame_id,target_id,x_m,y_m,z_m\n0,0,1.2,1.4,0.8\n0,1,2.0,2.2,1.1\n1,0,1.8,1.5,0.3\n";
  }
  for (const char* t : {"a", "b"}) {
    const std::string tag(t);
    ran &= run({"synthesize", "--preset", "table4", "--targets", p("targets.csv"), "--sigma", "3", "--seed", "5",
                "--out", p(("obs_" + tag + ".csv").c_str())});
    ran &= run({"localize", "--preset", "table4", "--observations", p("obs_a.csv"), "--out",
                p(("pos_" + tag + ".csv").c_str())});
  }
  expect(o, ran, "commands succeeded");
  expect(o, slurp(p("sim1.csv")) == slurp(p("sim4.csv")) && slurp(p("sim1.csv")) == slurp(p("sim_again.csv")),
             "simulate identical across runs and --threads 1/4");
  expect(o, slurp(p("cdf1.csv")) == slurp(p("cdf4.csv")), "raw samples identical");
  expect(o, slurp(p("sweep1.csv")) == slurp(p("sweep4.csv")), "sweep identical");
  expect(o, slurp(p("obs_a.csv")) == slurp(p("obs_b.csv")) && slurp(p("pos_a.csv")) == slurp(p("pos_b.csv")),
             "synthesize/localize identical");
  fs::remove_all(dir);
  return o;
}

Outcome scaling() {
  Outcome o;
  struct Case {
    int targets, cameras;
  };
  const std::vector<Case> cases{{3, 2}, {3, 4}, {6, 4}, {12, 4}};
  std::vector<double> mn, secs;
  std::mt19937_64 rng(99);
  for (const auto& c : cases) {
    const Scene scene = build_table1_scene(8.0, c.cameras);
    const auto truth = sample_targets(scene, c.targets, 0.1, rng);
    const ObservationSet obs = testing::noisy_observations(scene, truth, 3.0, rng);
    constexpr int kReps = 3000;
    double best = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < 9; ++trial) {
      const auto t0 = std::chrono::steady_clock::now();
      std::size_t sink = 0;
      for (int r = 0; r < kReps; ++r) sink += localize_linear(scene, obs).size();
      const auto t1 = std::chrono::steady_clock::now();
      if (sink == 0) return {false, "no output"};
      best = std::min(best, std::chrono::duration<double>(t1 - t0).count() / kReps);
    }
    mn.push_back(static_cast<double>(c.targets * c.cameras));
    secs.push_back(best);
  }
  const double n = static_cast<double>(mn.size());
  const double mx = std::accumulate(mn.begin(), mn.end(), 0.0) / n;
  const double my = std::accumulate(secs.begin(), secs.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < mn.size(); ++i) {
    sxy += (mn[i] - mx) * (secs[i] - my);
    sxx += (mn[i] - mx) * (mn[i] - mx);
    syy += (secs[i] - my) * (secs[i] - my);
  }
  const double r2 = sxy * sxy / (sxx * syy);
  std::string times;
  for (std::size_t i = 0; i < mn.size(); ++i) times += " " + fmt(mn[i], 0) + ":" + fmt(secs[i] * 1e6, 2) + "us";
  expect(o, r2 > 0.95, "R^2 " + fmt(r2, 4) + " (MN:time" + times + ")");
  return o;
}

Outcome lab_plausibility() {
  Outcome o;
  MonteCarloConfig config;
  config.iterations = 10000;
  const auto r = run_monte_carlo(config, build_table4_scene());
  expect(o, r.failures == 0, "failures " + std::to_string(r.failures));
  expect(o, r.mcjo.mpe < 20.0, "MCJO MPE " + fmt(r.mcjo.mpe) + " mm < 20");
  return o;
}

} // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> checks{
      {"1 Baseline accuracy", baseline_accuracy},
      {"2 Relative improvement", relative_improvement},
      {"3 Per-axis structure", per_axis_structure},
      {"4 Focal sweep endpoints", focal_sweep},
      {"5 Trend suite", trend_suite},
      {"6 Noiseless exactness", noiseless_exactness},
      {"7 Oracle equivalence", oracle_equivalence},
      {"8 Jacobian check", jacobian_check},
      {"9 Determinism", determinism},
      {"10 Scaling", scaling},
      {"T4 Lab geometry plausibility", lab_plausibility},
  };

  int failed = 0;
  for (const auto& [name, fn] : checks) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s  %-26s %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(checks.size()) - failed, checks.size());
  return failed == 0 ? 0 : 1;
}
