#include "ledloc/scene.hpp"

#include <set>
#include <string>

#include "ledloc/error.hpp"

namespace ledloc {

bool Room::contains(const Vec3& p, double tolerance) const {
  return (p.array() >= min.array() - tolerance).all() && (p.array() <= max.array() + tolerance).all();
}

Scene::Scene(std::vector<Camera> cameras, Room room) : cameras_(std::move(cameras)), room_(std::move(room)) {
  if (cameras_.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "a scene needs at least two cameras");
  }
  if (!room_.min.allFinite() || !room_.max.allFinite() || !(room_.min.array() <= room_.max.array()).all()) {
    throw Error(ErrorCode::InvalidArgument, "room min corner must not exceed max corner");
  }
  std::set<CameraId> ids;
  for (const auto& camera : cameras_) {
    if (!ids.insert(camera.id).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate camera id " + std::to_string(camera.id));
    }
    if (!room_.contains(camera.pose.center())) {
      throw Error(ErrorCode::InvalidArgument, "camera " + std::to_string(camera.id) + " is outside the room");
    }
  }
}

std::optional<std::size_t> Scene::index_of(CameraId id) const {
  for (std::size_t i = 0; i < cameras_.size(); ++i) {
    if (cameras_[i].id == id) return i;
  }
  return std::nullopt;
}

} // namespace ledloc
