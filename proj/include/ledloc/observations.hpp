#pragma once

#include <map>
#include <utility>
#include <vector>

#include "ledloc/camera.hpp"

namespace ledloc {

/// Pixel observations for one synchronized frame, keyed by
/// (camera id, target id). Each pair appears at most once.
class ObservationSet {
public:
  /// Throws InvalidArgument on a duplicate (camera, target) pair or a
  /// non-finite pixel.
  void add(CameraId camera, TargetId target, const PixelPoint& pixel);

  bool contains(CameraId camera, TargetId target) const;
  const PixelPoint& at(CameraId camera, TargetId target) const;

  /// Distinct target ids in ascending order.
  std::vector<TargetId> target_ids() const;

  std::size_t size() const { return pixels_.size(); }
  bool empty() const { return pixels_.empty(); }

  const std::map<std::pair<CameraId, TargetId>, PixelPoint>& entries() const { return pixels_; }

private:
  std::map<std::pair<CameraId, TargetId>, PixelPoint> pixels_;
};

} // namespace ledloc
