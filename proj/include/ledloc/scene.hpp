#pragma once

#include <optional>
#include <vector>

#include "ledloc/camera.hpp"

namespace ledloc {

/// Axis-aligned box in world coordinates (meters).
struct Room {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  bool contains(const Vec3& p, double tolerance = 1e-9) const;
  friend bool operator==(const Room& a, const Room& b) {
    return a.min == b.min && a.max == b.max;
  }
};

/// Fixed, calibrated cameras inside a room.
class Scene {
public:
  /// Requires at least two cameras with unique ids, each centered inside
  /// (or on the boundary of) the room.
  Scene(std::vector<Camera> cameras, Room room);

  const std::vector<Camera>& cameras() const { return cameras_; }
  const Room& room() const { return room_; }
  std::size_t size() const { return cameras_.size(); }

  /// Index into cameras() for a camera id, if present.
  std::optional<std::size_t> index_of(CameraId id) const;

  friend bool operator==(const Scene&, const Scene&) = default;

private:
  std::vector<Camera> cameras_;
  Room room_;
};

} // namespace ledloc
