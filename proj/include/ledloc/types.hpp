#pragma once

#include <Eigen/Core>

namespace ledloc {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

using CameraId = int;
using TargetId = int;

} // namespace ledloc
