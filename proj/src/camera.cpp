#include "ledloc/camera.hpp"

#include <cmath>
#include <string>

#include <Eigen/Geometry>

#include "ledloc/error.hpp"

namespace ledloc {

namespace {

constexpr double kRotationTolerance = 1e-12;
constexpr double kParallelTolerance = 1e-9;

bool finite(const Vec3& v) { return v.allFinite(); }

} // namespace

Intrinsics::Intrinsics(double fx, double fy, double u0, double v0, double width, double height)
    : fx_(fx), fy_(fy), u0_(u0), v0_(v0), width_(width), height_(height) {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy)) {
    throw Error(ErrorCode::InvalidArgument, "focal lengths must be positive and finite");
  }
  if (!(u0 > 0.0 && u0 < width) || !(v0 > 0.0 && v0 < height) || !std::isfinite(width) ||
      !std::isfinite(height)) {
    throw Error(ErrorCode::InvalidArgument, "principal point must lie strictly inside the sensor");
  }
}

Intrinsics Intrinsics::centered(double focal_px, double u0, double v0) {
  return Intrinsics(focal_px, focal_px, u0, v0, 2.0 * u0, 2.0 * v0);
}

Mat3 Intrinsics::K() const {
  Mat3 k;
  k << fx_, 0.0, u0_, 0.0, fy_, v0_, 0.0, 0.0, 1.0;
  return k;
}

CameraPose::CameraPose(const Mat3& rotation, const Vec3& center) : rotation_(rotation), center_(center) {
  if (!rotation.allFinite() || !finite(center)) {
    throw Error(ErrorCode::InvalidArgument, "camera pose must be finite");
  }
  const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (ortho > kRotationTolerance || std::abs(rotation.determinant() - 1.0) > kRotationTolerance) {
    throw Error(ErrorCode::InvalidArgument, "rotation must be orthonormal with determinant +1");
  }
}

Ray::Ray(const Vec3& origin, const Vec3& direction) : origin_(origin) {
  const double n = direction.norm();
  if (!finite(origin) || !std::isfinite(n) || n == 0.0) {
    throw Error(ErrorCode::InvalidArgument, "ray needs a finite origin and nonzero direction");
  }
  direction_ = direction / n;
}

Vec3 world_to_camera(const CameraPose& pose, const Vec3& x_w) {
  return pose.rotation().transpose() * (x_w - pose.center());
}

Vec3 camera_to_world(const CameraPose& pose, const Vec3& x_c) { return pose.rotation() * x_c + pose.center(); }

PixelPoint project(const Camera& camera, const Vec3& x_w) {
  const Vec3 x_c = world_to_camera(camera.pose, x_w);
  if (!(x_c.z() > kMinDepth)) {
    throw Error(ErrorCode::BehindCamera,
                "point is not in front of camera " + std::to_string(camera.id) + " (depth " +
                    std::to_string(x_c.z()) + " m)");
  }
  const auto& k = camera.intrinsics;
  return {k.fx() * x_c.x() / x_c.z() + k.u0(), k.fy() * x_c.y() / x_c.z() + k.v0()};
}

Vec3 backproject_direction(const Camera& camera, const PixelPoint& p) {
  const auto& k = camera.intrinsics;
  // K^-1 [u; v; 1] in closed form.
  const Vec3 ray_c((p.u - k.u0()) / k.fx(), (p.v - k.v0()) / k.fy(), 1.0);
  return camera.pose.rotation() * ray_c.normalized();
}

Ray observation_ray(const Camera& camera, const PixelPoint& p) {
  return Ray(camera.pose.center(), backproject_direction(camera, p));
}

CameraPose look_at_pose(const Vec3& position, const Vec3& focus, const Vec3& up_hint) {
  const Vec3 forward = focus - position;
  if (!(forward.norm() > kParallelTolerance)) {
    throw Error(ErrorCode::InvalidArgument, "look-at focus coincides with camera position");
  }
  if (!(up_hint.norm() > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "look-at up hint must be nonzero");
  }
  const Vec3 z = forward.normalized();
  const Vec3 up = up_hint.normalized();
  if (std::abs(z.dot(up)) >= 1.0 - kParallelTolerance) {
    throw Error(ErrorCode::DegenerateLookAt, "viewing direction is parallel to the up hint");
  }
  const Vec3 x = up.cross(z).normalized();
  const Vec3 y = z.cross(x);
  Mat3 r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return CameraPose(r, position);
}

CameraPose look_at_pose(const Vec3& position, const Vec3& focus) {
  try {
    return look_at_pose(position, focus, Vec3::UnitZ());
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateLookAt) throw;
  }
  return look_at_pose(position, focus, Vec3::UnitX());
}

bool is_visible(const Camera& camera, const Vec3& x_w) {
  const Vec3 x_c = world_to_camera(camera.pose, x_w);
  if (!(x_c.z() > kMinDepth)) return false;
  const auto& k = camera.intrinsics;
  const double u = k.fx() * x_c.x() / x_c.z() + k.u0();
  const double v = k.fy() * x_c.y() / x_c.z() + k.v0();
  return u >= 0.0 && u <= k.width() && v >= 0.0 && v <= k.height();
}

} // namespace ledloc
