#include "ledloc/observations.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ledloc/error.hpp"

namespace ledloc {

void ObservationSet::add(CameraId camera, TargetId target, const PixelPoint& pixel) {
  if (!std::isfinite(pixel.u) || !std::isfinite(pixel.v)) {
    throw Error(ErrorCode::InvalidArgument, "observation pixel must be finite");
  }
  if (!pixels_.emplace(std::pair{camera, target}, pixel).second) {
    throw Error(ErrorCode::InvalidArgument, "duplicate observation for camera " + std::to_string(camera) +
                                                ", target " + std::to_string(target));
  }
}

bool ObservationSet::contains(CameraId camera, TargetId target) const {
  return pixels_.count({camera, target}) != 0;
}

const PixelPoint& ObservationSet::at(CameraId camera, TargetId target) const {
  const auto it = pixels_.find({camera, target});
  if (it == pixels_.end()) {
    throw Error(ErrorCode::InvalidArgument, "no observation for camera " + std::to_string(camera) + ", target " +
                                                std::to_string(target));
  }
  return it->second;
}

std::vector<TargetId> ObservationSet::target_ids() const {
  std::vector<TargetId> ids;
  for (const auto& [key, pixel] : pixels_) ids.push_back(key.second);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

} // namespace ledloc
