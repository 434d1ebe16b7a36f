#include "ledloc/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <tuple>
#include <type_traits>

#include <json.hpp>

namespace ledloc::io {

using nlohmann::json;

namespace {

[[noreturn]] void parse_error(const std::string& what) { throw Error(ErrorCode::Parse, what); }

const json& require(const json& obj, const char* key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) parse_error(where + ": missing field \"" + key + "\"");
  return *it;
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) parse_error(where + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) parse_error(where + ": expected a finite number");
  return d;
}

template <int N>
Eigen::Matrix<double, N, 1> vector_of(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != N) parse_error(where + ": expected an array of " + std::to_string(N) + " numbers");
  Eigen::Matrix<double, N, 1> out;
  for (int i = 0; i < N; ++i) out(i) = number(v[static_cast<std::size_t>(i)], where + "[" + std::to_string(i) + "]");
  return out;
}

Mat3 rotation_of(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 3) parse_error(where + ": expected 3 rows");
  Mat3 r;
  for (int i = 0; i < 3; ++i) r.row(i) = vector_of<3>(v[static_cast<std::size_t>(i)], where + "[" + std::to_string(i) + "]");
  return r;
}

Camera camera_of(const json& c, const std::string& where) {
  if (!c.is_object()) parse_error(where + ": expected an object");
  const json& id_field = require(c, "id", where);
  if (!id_field.is_number_integer()) parse_error(where + ".id: expected an integer");
  const auto id = id_field.get<CameraId>();
  const Vec3 position = vector_of<3>(require(c, "position", where), where + ".position");

  double focal_px = 0.0;
  if (c.contains("focal_px")) {
    focal_px = number(c["focal_px"], where + ".focal_px");
  } else if (c.contains("focal_mm") && c.contains("pixel_pitch_um")) {
    const double mm = number(c["focal_mm"], where + ".focal_mm");
    const double pitch = number(c["pixel_pitch_um"], where + ".pixel_pitch_um");
    if (!(pitch > 0.0)) parse_error(where + ".pixel_pitch_um: must be positive");
    focal_px = mm * 1000.0 / pitch;
  } else {
    parse_error(where + ": needs focal_px or focal_mm with pixel_pitch_um");
  }

  const Vec2 principal = vector_of<2>(require(c, "principal", where), where + ".principal");
  const Vec2 sensor = c.contains("sensor") ? vector_of<2>(c["sensor"], where + ".sensor") : Vec2(2.0 * principal);

  try {
    const Intrinsics intrinsics(focal_px, focal_px, principal.x(), principal.y(), sensor.x(), sensor.y());
    if (c.contains("rotation")) {
      return Camera{id, intrinsics, CameraPose(rotation_of(c["rotation"], where + ".rotation"), position)};
    }
    if (c.contains("focus")) {
      const Vec3 focus = vector_of<3>(c["focus"], where + ".focus");
      const CameraPose pose = c.contains("up") ? look_at_pose(position, focus, vector_of<3>(c["up"], where + ".up"))
                                               : look_at_pose(position, focus);
      return Camera{id, intrinsics, pose};
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Parse) throw;
    parse_error(where + ": " + e.what());
  }
  parse_error(where + ": needs either \"focus\" or \"rotation\"");
}

json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

template <class T>
T parse_field(std::string_view text, const std::string& where) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    parse_error(where + ": cannot parse \"" + std::string(text) + "\"");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) parse_error(where + ": value must be finite");
  }
  return value;
}

} // namespace

Scene parse_scene(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    parse_error(std::string("scene: ") + e.what());
  }
  if (!doc.is_object()) parse_error("scene: top level must be an object");

  const json& room_j = require(doc, "room", "scene");
  const Room room{vector_of<3>(require(room_j, "min", "room"), "room.min"),
                  vector_of<3>(require(room_j, "max", "room"), "room.max")};

  const json& cams = require(doc, "cameras", "scene");
  if (!cams.is_array()) parse_error("scene.cameras: expected an array");
  std::vector<Camera> cameras;
  for (std::size_t i = 0; i < cams.size(); ++i) cameras.push_back(camera_of(cams[i], "cameras[" + std::to_string(i) + "]"));

  try {
    return Scene(std::move(cameras), room);
  } catch (const Error& e) {
    parse_error(std::string("scene: ") + e.what());
  }
}

Scene read_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) parse_error("cannot open scene file " + path.string());
  return parse_scene(in);
}

std::string serialize_scene(const Scene& scene) {
  json doc;
  doc["room"] = {{"min", vec_json(scene.room().min)}, {"max", vec_json(scene.room().max)}};
  doc["cameras"] = json::array();
  for (const auto& c : scene.cameras()) {
    json rotation = json::array();
    for (int i = 0; i < 3; ++i) rotation.push_back(vec_json(c.pose.rotation().row(i).transpose()));
    const auto& k = c.intrinsics;
    if (k.fx() != k.fy()) {
      throw Error(ErrorCode::InvalidArgument, "scene files store a single focal length; fx and fy differ");
    }
    doc["cameras"].push_back({{"id", c.id},
                              {"position", vec_json(c.pose.center())},
                              {"rotation", rotation},
                              {"focal_px", k.fx()},
                              {"principal", {k.u0(), k.v0()}},
                              {"sensor", {k.width(), k.height()}}});
  }
  return doc.dump(2) + "\n";
}

std::map<int, ObservationSet> parse_observations(std::istream& in, const Scene& scene) {
  std::map<int, ObservationSet> frames;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    const auto fields = split(view);
    if (!header_seen) {
      const std::vector<std::string_view> expected{"frame_id", "camera_id", "target_id", "u_px", "v_px"};
      if (fields != expected) {
        parse_error("line " + std::to_string(line_no) + ": expected header frame_id,camera_id,target_id,u_px,v_px");
      }
      header_seen = true;
      continue;
    }
    const std::string where = "line " + std::to_string(line_no);
    if (fields.size() != 5) parse_error(where + ": expected 5 fields, got " + std::to_string(fields.size()));
    const int frame = parse_field<int>(fields[0], where + " frame_id");
    const CameraId camera = parse_field<CameraId>(fields[1], where + " camera_id");
    const TargetId target = parse_field<TargetId>(fields[2], where + " target_id");
    const PixelPoint pixel{parse_field<double>(fields[3], where + " u_px"), parse_field<double>(fields[4], where + " v_px")};
    if (!scene.index_of(camera)) parse_error(where + ": unknown camera_id " + std::to_string(camera));
    auto& set = frames[frame];
    if (set.contains(camera, target)) {
      parse_error(where + ": duplicate observation for frame " + std::to_string(frame) + ", camera " +
                  std::to_string(camera) + ", target " + std::to_string(target));
    }
    set.add(camera, target, pixel);
  }
  if (!header_seen) parse_error("observation file is empty (header required)");
  return frames;
}

std::map<int, ObservationSet> read_observations(const std::filesystem::path& path, const Scene& scene) {
  std::ifstream in(path);
  if (!in) parse_error("cannot open observation file " + path.string());
  return parse_observations(in, scene);
}

void write_observations(std::ostream& out, const std::map<int, ObservationSet>& frames) {
  out << "frame_id,camera_id,target_id,u_px,v_px\n";
  for (const auto& [frame, set] : frames) {
    for (const auto& [key, pixel] : set.entries()) {
      out << frame << ',' << key.first << ',' << key.second << ',' << format_double(pixel.u) << ','
          << format_double(pixel.v) << '\n';
    }
  }
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

namespace {

void position_row(std::ostream& out, int frame, TargetId target, std::string_view algorithm, const Vec3* position,
                  double cost, std::string_view status) {
  out << frame << ',' << target << ',' << algorithm << ',';
  if (position) {
    out << format_double(position->x()) << ',' << format_double(position->y()) << ',' << format_double(position->z())
        << ',' << format_double(cost);
  } else {
    out << ",,,";
  }
  out << ',' << status << '\n';
}

} // namespace

void write_position_rows(std::ostream& out, int frame_id, const LocalizationResult& result, bool include_refined) {
  const std::string_view refined_status = result.refinement.converged ? "ok" : "not_converged";
  for (const auto& t : result.targets) {
    const std::string_view failure = to_string(t.error.value_or(ErrorCode::InvalidArgument));
    if (t.linear && !t.error) {
      position_row(out, frame_id, t.target, "mcvlp", &t.linear->position, t.linear_cost, "ok");
    } else {
      position_row(out, frame_id, t.target, "mcvlp", nullptr, 0.0, failure);
    }
    if (!include_refined) continue;
    if (t.refined) {
      position_row(out, frame_id, t.target, "mcjo", &*t.refined, t.refined_cost, refined_status);
    } else {
      position_row(out, frame_id, t.target, "mcjo", nullptr, 0.0, failure);
    }
  }
}

void write_linear_rows(std::ostream& out, int frame_id, const Scene& scene, const ObservationSet& observations,
                       const std::vector<TargetLinearResult>& result) {
  for (const auto& t : result) {
    if (!t.estimate) {
      position_row(out, frame_id, t.target, "mcvlp", nullptr, 0.0, to_string(*t.error));
      continue;
    }
    try {
      const double cost = target_reprojection_cost(scene, observations, t.target, t.estimate->position);
      position_row(out, frame_id, t.target, "mcvlp", &t.estimate->position, cost, "ok");
    } catch (const Error& e) {
      position_row(out, frame_id, t.target, "mcvlp", nullptr, 0.0, to_string(e.code()));
    }
  }
}

void write_metrics_rows(std::ostream& out, std::string_view algorithm, const RunMetrics& m) {
  const std::tuple<const char*, double, const AxisTriple*> rows[] = {
      {"mpe", m.mpe, &m.axis_mpe},       {"rmse", m.rmse, &m.axis_rmse},   {"std", m.std, &m.axis_std},
      {"cdf50", m.cdf50, &m.axis_cdf50}, {"cdf90", m.cdf90, &m.axis_cdf90},
  };
  for (const auto& [name, total, axis] : rows) {
    out << name << ',' << algorithm << ",all," << format_double(total) << '\n';
    out << name << ',' << algorithm << ",x," << format_double(axis->x) << '\n';
    out << name << ',' << algorithm << ",y," << format_double(axis->y) << '\n';
    out << name << ',' << algorithm << ",z," << format_double(axis->z) << '\n';
  }
}

void write_sample_rows(std::ostream& out, std::string_view algorithm, const RunMetrics& m) {
  for (std::size_t i = 0; i < m.error_samples.size(); ++i) {
    const Vec3& a = m.axis_samples[i];
    out << algorithm << ',' << i << ',' << format_double(m.error_samples[i]) << ',' << format_double(a.x()) << ','
        << format_double(a.y()) << ',' << format_double(a.z()) << '\n';
  }
}

void write_sweep_rows(std::ostream& out, const std::vector<SweepRow>& rows) {
  for (const auto& r : rows) {
    out << format_double(r.value) << ',' << r.camera_count << ',' << r.algorithm << ','
        << format_double(r.mpe_mm) << '\n';
  }
}

} // namespace ledloc::io
