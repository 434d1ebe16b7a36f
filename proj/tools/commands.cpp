#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "ledloc/io.hpp"
#include "ledloc/simulation.hpp"

namespace ledloc::cli {

namespace {

/// Raised for bad flag combinations that CLI11 cannot express.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SceneArgs {
  std::string preset;
  std::string scene_path;
  double focal_px = 1500.0;
  double layout_m = 8.0;
  int cameras = 4;

  void add_to(CLI::App& cmd, bool table1_overrides) {
    cmd.add_option("--preset", preset, "Built-in scene: table1 or table4")->check(CLI::IsMember({"table1", "table4"}));
    cmd.add_option("--scene", scene_path, "Scene JSON file");
    if (table1_overrides) {
      cmd.add_option("--focal", focal_px, "table1 focal length, px")->check(CLI::PositiveNumber);
      cmd.add_option("--layout", layout_m, "table1 layout distance L, m")->check(CLI::PositiveNumber);
      cmd.add_option("--cameras", cameras, "table1 camera count")->check(CLI::IsMember({2, 3, 4}));
    }
  }

  Scene resolve() const {
    if (!preset.empty() && !scene_path.empty()) throw UsageError("--preset and --scene are mutually exclusive");
    if (!scene_path.empty()) return io::read_scene(scene_path);
    if (preset == "table4") return build_table4_scene();
    return build_table1_scene(layout_m, cameras, focal_px);
  }
};

struct SimulateArgs {
  SceneArgs scene;
  double sigma = 3.0;
  int iterations = 10000;
  int targets = 3;
  std::uint64_t seed = 42;
  double margin = 0.1;
  int threads = 0;
  std::string out;
  std::string cdf_out;
};

struct SweepArgs {
  std::string parameter;
  std::vector<std::string> values;
  std::vector<int> cameras{2, 3, 4};
  double sigma = 3.0;
  double focal_px = 1500.0;
  double layout_m = 8.0;
  int iterations = 2000;
  int targets = 3;
  std::uint64_t seed = 42;
  double margin = 0.1;
  int threads = 0;
  std::string out;
};

struct LocalizeArgs {
  SceneArgs scene;
  std::string observations;
  std::string out;
  bool linear_only = false;
};

struct SceneExportArgs {
  SceneArgs scene;
  std::string out;
};

struct SynthesizeArgs {
  SceneArgs scene;
  std::string targets;
  double sigma = 0.0;
  std::uint64_t seed = 42;
  std::string out;
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::Parse, "cannot open output file " + path);
  f << content;
  if (!f.flush()) throw Error(ErrorCode::Parse, "failed writing output file " + path);
}

int do_simulate(const SimulateArgs& a, std::ostream& err) {
  const Scene scene = a.scene.resolve();
  MonteCarloConfig config;
  config.iterations = a.iterations;
  config.targets_per_iteration = a.targets;
  config.noise.sigma = a.sigma;
  config.seed = a.seed;
  config.sampling_margin = a.margin;
  config.threads = a.threads;

  const MonteCarloResult r = run_monte_carlo(config, scene);

  std::ostringstream out;
  out << io::kMetricsHeader << '\n';
  io::write_metrics_rows(out, "mcjo", r.mcjo);
  io::write_metrics_rows(out, "mcvlp", r.mcvlp);
  write_file(a.out, out.str());

  if (!a.cdf_out.empty()) {
    std::ostringstream cdf;
    cdf << io::kSamplesHeader << '\n';
    io::write_sample_rows(cdf, "mcjo", r.mcjo);
    io::write_sample_rows(cdf, "mcvlp", r.mcvlp);
    write_file(a.cdf_out, cdf.str());
  }

  err << "simulate: " << r.iterations << " iterations, " << r.failures << " failed; mcjo MPE "
      << io::format_double(r.mcjo.mpe) << " mm, mcvlp MPE " << io::format_double(r.mcvlp.mpe) << " mm\n";
  if (r.flagged) {
    err << "simulate: more than 1% of iterations failed\n";
    return kRuntimeError;
  }
  return kSuccess;
}

SweepParameter parse_parameter(const std::string& name) {
  if (name == "focal") return SweepParameter::FocalLengthPx;
  if (name == "noise") return SweepParameter::NoiseStd;
  if (name == "layout") return SweepParameter::LayoutDistance;
  return SweepParameter::CameraCount;
}

int do_sweep(const SweepArgs& a, std::ostream& err) {
  std::vector<double> values;
  for (const auto& text : a.values) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
      throw UsageError("--values: cannot parse \"" + text + "\"");
    }
    values.push_back(v);
  }
  if (values.empty()) throw UsageError("--values must list at least one value");
  SweepSpec spec;
  spec.parameter = parse_parameter(a.parameter);
  spec.values = values;
  spec.camera_counts = a.cameras;
  spec.focal_px = a.focal_px;
  spec.layout_distance_m = a.layout_m;
  spec.base.iterations = a.iterations;
  spec.base.targets_per_iteration = a.targets;
  spec.base.noise.sigma = a.sigma;
  spec.base.seed = a.seed;
  spec.base.sampling_margin = a.margin;
  spec.base.threads = a.threads;
  try {
    spec.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }

  const auto rows = run_sweep(spec);
  std::ostringstream out;
  out << io::kSweepHeader << '\n';
  io::write_sweep_rows(out, rows);
  write_file(a.out, out.str());

  const bool flagged = std::any_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.flagged; });
  err << "sweep: " << rows.size() << " rows written\n";
  if (flagged) {
    err << "sweep: at least one run had more than 1% failed iterations\n";
    return kRuntimeError;
  }
  return kSuccess;
}

int do_localize(const LocalizeArgs& a, std::ostream& err) {
  const Scene scene = a.scene.resolve();
  const auto frames = io::read_observations(a.observations, scene);

  std::ostringstream out;
  out << io::kPositionHeader << '\n';
  int failed_targets = 0;
  for (const auto& [frame, set] : frames) {
    if (a.linear_only) {
      const auto result = localize_linear(scene, set);
      failed_targets += static_cast<int>(std::count_if(result.begin(), result.end(), [](auto& t) { return !t.ok(); }));
      io::write_linear_rows(out, frame, scene, set, result);
    } else {
      const auto result = localize(scene, set);
      failed_targets +=
          static_cast<int>(std::count_if(result.targets.begin(), result.targets.end(), [](auto& t) { return !t.ok(); }));
      io::write_position_rows(out, frame, result, true);
    }
  }
  write_file(a.out, out.str());
  err << "localize: " << frames.size() << " frames, " << failed_targets << " targets not localized\n";
  return kSuccess;
}

int do_scene(const SceneExportArgs& a, std::ostream&) {
  write_file(a.out, io::serialize_scene(a.scene.resolve()));
  return kSuccess;
}

/// Targets CSV: frame_id,target_id,x_m,y_m,z_m. Cameras that cannot see a
/// target simply produce no observation for it.
int do_synthesize(const SynthesizeArgs& a, std::ostream& err) {
  const Scene scene = a.scene.resolve();
  std::ifstream in(a.targets);
  if (!in) throw Error(ErrorCode::Parse, "cannot open targets file " + a.targets);

  std::map<int, std::map<TargetId, Vec3>> truth;
  std::string line;
  int line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (!header) {
      header = true;
      continue;
    }
    std::istringstream row(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    try {
      if (cells.size() != 5) throw std::invalid_argument("field count");
      const Vec3 p(std::stod(cells[2]), std::stod(cells[3]), std::stod(cells[4]));
      truth[std::stoi(cells[0])][std::stoi(cells[1])] = p;
    } catch (const std::exception&) {
      throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": expected frame_id,target_id,x_m,y_m,z_m");
    }
  }

  std::map<int, ObservationSet> frames;
  const NoiseModel noise{a.sigma};
  for (const auto& [frame, targets] : truth) {
    Rng rng = make_stream(a.seed, static_cast<std::uint64_t>(frame));
    std::normal_distribution<double> gauss(0.0, a.sigma > 0.0 ? a.sigma : 1.0);
    auto& set = frames[frame];
    for (const auto& camera : scene.cameras()) {
      for (const auto& [id, p] : targets) {
        if (!is_visible(camera, p)) continue;
        PixelPoint px = project(camera, p);
        if (noise.sigma > 0.0) {
          px.u += gauss(rng);
          px.v += gauss(rng);
        }
        set.add(camera.id, id, px);
      }
    }
  }
  std::ostringstream out;
  io::write_observations(out, frames);
  write_file(a.out, out.str());
  err << "synthesize: " << frames.size() << " frames written\n";
  return kSuccess;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& err) {
  CLI::App app{"Multi-camera LED target localization and Monte Carlo accuracy analysis", "ledloc"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo accuracy run for both algorithms");
  sim.scene.add_to(*simulate, true);
  simulate->add_option("--sigma", sim.sigma, "Pixel noise STD, px")->check(CLI::NonNegativeNumber);
  simulate->add_option("--iterations", sim.iterations, "Monte Carlo iterations")->check(CLI::PositiveNumber);
  simulate->add_option("--targets", sim.targets, "Targets per iteration")->check(CLI::PositiveNumber);
  simulate->add_option("--seed", sim.seed, "Master random seed");
  simulate->add_option("--margin", sim.margin, "Target sampling margin, m")->check(CLI::NonNegativeNumber);
  simulate->add_option("--threads", sim.threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  simulate->add_option("--out", sim.out, "Metrics CSV")->required();
  simulate->add_option("--emit-cdf", sim.cdf_out, "Also write raw per-target error samples to this CSV");

  SweepArgs sw;
  auto* sweep = app.add_subcommand("sweep", "MPE versus one parameter");
  sweep->add_option("--parameter", sw.parameter, "focal, noise, layout or cameras")
      ->required()
      ->check(CLI::IsMember({"focal", "noise", "layout", "cameras"}));
  sweep->add_option("--values", sw.values, "Comma-separated, strictly increasing")->required()->delimiter(',');
  sweep->add_option("--cameras", sw.cameras, "Camera counts to run for each value")
      ->delimiter(',')
      ->check(CLI::IsMember({2, 3, 4}));
  sweep->add_option("--sigma", sw.sigma, "Pixel noise STD, px")->check(CLI::NonNegativeNumber);
  sweep->add_option("--focal", sw.focal_px, "Focal length, px")->check(CLI::PositiveNumber);
  sweep->add_option("--layout", sw.layout_m, "Layout distance L, m")->check(CLI::PositiveNumber);
  sweep->add_option("--iterations", sw.iterations, "Monte Carlo iterations per point")->check(CLI::PositiveNumber);
  sweep->add_option("--targets", sw.targets, "Targets per iteration")->check(CLI::PositiveNumber);
  sweep->add_option("--seed", sw.seed, "Master random seed");
  sweep->add_option("--margin", sw.margin, "Target sampling margin, m")->check(CLI::NonNegativeNumber);
  sweep->add_option("--threads", sw.threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  sweep->add_option("--out", sw.out, "Sweep CSV")->required();

  LocalizeArgs loc;
  auto* localize_cmd = app.add_subcommand("localize", "Localize targets from an observation file");
  loc.scene.add_to(*localize_cmd, false);
  localize_cmd->add_option("--observations", loc.observations, "Observation CSV")->required();
  localize_cmd->add_option("--out", loc.out, "Position CSV")->required();
  localize_cmd->add_flag("--linear-only", loc.linear_only, "Skip the nonlinear refinement");

  SceneExportArgs sc;
  auto* scene_cmd = app.add_subcommand("scene", "Write a scene preset as JSON");
  sc.scene.add_to(*scene_cmd, true);
  scene_cmd->add_option("--out", sc.out, "Scene JSON")->required();

  SynthesizeArgs syn;
  auto* synth_cmd = app.add_subcommand("synthesize", "Project known targets into an observation CSV");
  syn.scene.add_to(*synth_cmd, true);
  synth_cmd->add_option("--targets", syn.targets, "CSV frame_id,target_id,x_m,y_m,z_m")->required();
  synth_cmd->add_option("--sigma", syn.sigma, "Pixel noise STD, px")->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--seed", syn.seed, "Random seed");
  synth_cmd->add_option("--out", syn.out, "Observation CSV")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    err << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp& e) {
    err << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }

  try {
    if (*simulate) return do_simulate(sim, err);
    if (*sweep) return do_sweep(sw, err);
    if (*localize_cmd) return do_localize(loc, err);
    if (*scene_cmd) return do_scene(sc, err);
    if (*synth_cmd) return do_synthesize(syn, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::Parse ? kInputError : kRuntimeError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kUsageError;
}

} // namespace ledloc::cli
