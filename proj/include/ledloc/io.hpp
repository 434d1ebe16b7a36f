#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "ledloc/observations.hpp"
#include "ledloc/refinement.hpp"
#include "ledloc/scene.hpp"
#include "ledloc/simulation.hpp"

namespace ledloc::io {

/// Scene documents are JSON:
///
///   {
///     "room": {"min": [0,0,0], "max": [8,8,3]},
///     "cameras": [
///       {"id": 0, "position": [0,0,3], "focus": [4,4,1.5],
///        "focal_px": 1500, "principal": [2080,1560], "sensor": [4160,3120]},
///       {"id": 1, "position": [...], "rotation": [[...],[...],[...]],
///        "focal_mm": 3.36, "pixel_pitch_um": 2.24, "principal": [...]}
///     ]
///   }
///
/// A camera needs either "focus" (optional "up") or a row-major
/// camera-to-world "rotation". "sensor" defaults to twice the principal
/// point. Errors are reported as Error{Parse} naming the offending field.
Scene parse_scene(std::istream& in);
Scene read_scene(const std::filesystem::path& path);

/// Writes explicit rotations and focal_px, with doubles in shortest
/// round-trip form, so parse_scene(serialize_scene(s)) == s.
std::string serialize_scene(const Scene& scene);

/// Observation CSV: header `frame_id,camera_id,target_id,u_px,v_px`
/// then one row per observation. Frames are returned by ascending id.
/// Errors carry the 1-based line number.
std::map<int, ObservationSet> parse_observations(std::istream& in, const Scene& scene);
std::map<int, ObservationSet> read_observations(const std::filesystem::path& path, const Scene& scene);

void write_observations(std::ostream& out, const std::map<int, ObservationSet>& frames);

/// Decimal text with 17 significant digits; round-trips doubles.
std::string format_double(double value);

inline constexpr const char* kPositionHeader = "frame_id,target_id,algorithm,x_m,y_m,z_m,reproj_cost_px2,status";
inline constexpr const char* kMetricsHeader = "metric,algorithm,axis,value_mm";
inline constexpr const char* kSamplesHeader = "algorithm,sample,error_mm,x_mm,y_mm,z_mm";
inline constexpr const char* kSweepHeader = "parameter_value,camera_count,algorithm,mpe_mm";

/// Position rows for one frame. Failed targets get empty coordinates and
/// the error name in the status column.
void write_position_rows(std::ostream& out, int frame_id, const LocalizationResult& result, bool include_refined);
void write_linear_rows(std::ostream& out, int frame_id, const Scene& scene, const ObservationSet& observations,
                       const std::vector<TargetLinearResult>& result);

/// mpe/rmse/std/cdf50/cdf90 for axes all,x,y,z.
void write_metrics_rows(std::ostream& out, std::string_view algorithm, const RunMetrics& metrics);
void write_sample_rows(std::ostream& out, std::string_view algorithm, const RunMetrics& metrics);
void write_sweep_rows(std::ostream& out, const std::vector<SweepRow>& rows);

} // namespace ledloc::io
