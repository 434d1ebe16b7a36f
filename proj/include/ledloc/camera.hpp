#pragma once

#include "ledloc/types.hpp"

namespace ledloc {

/// Cheirality threshold on the camera-frame depth, in meters.
inline constexpr double kMinDepth = 1e-9;

struct PixelPoint {
  double u = 0.0;
  double v = 0.0;

  Vec2 vec() const { return {u, v}; }
  friend bool operator==(const PixelPoint&, const PixelPoint&) = default;
};

/// Pinhole intrinsics. Focal lengths and principal point are in pixels;
/// width/height bound the sensor for visibility checks only.
class Intrinsics {
public:
  Intrinsics(double fx, double fy, double u0, double v0, double width, double height);

  /// Sensor sized 2*u0 by 2*v0 (principal point centered).
  static Intrinsics centered(double focal_px, double u0, double v0);

  double fx() const { return fx_; }
  double fy() const { return fy_; }
  double u0() const { return u0_; }
  double v0() const { return v0_; }
  double width() const { return width_; }
  double height() const { return height_; }

  Mat3 K() const;

  friend bool operator==(const Intrinsics&, const Intrinsics&) = default;

private:
  double fx_, fy_, u0_, v0_, width_, height_;
};

/// Camera-to-world rigid transform: x_w = rotation * x_c + center.
class CameraPose {
public:
  /// Throws InvalidArgument unless rotation is orthonormal with det +1
  /// (to 1e-12).
  CameraPose(const Mat3& rotation, const Vec3& center);

  const Mat3& rotation() const { return rotation_; }
  const Vec3& center() const { return center_; }

  friend bool operator==(const CameraPose& a, const CameraPose& b) {
    return a.rotation_ == b.rotation_ && a.center_ == b.center_;
  }

private:
  Mat3 rotation_;
  Vec3 center_;
};

struct Camera {
  CameraId id = 0;
  Intrinsics intrinsics;
  CameraPose pose;

  friend bool operator==(const Camera&, const Camera&) = default;
};

/// Half-line origin + t * direction with unit direction.
class Ray {
public:
  /// Normalizes `direction`; throws InvalidArgument if it is zero or
  /// non-finite.
  Ray(const Vec3& origin, const Vec3& direction);

  const Vec3& origin() const { return origin_; }
  const Vec3& direction() const { return direction_; }

private:
  Vec3 origin_;
  Vec3 direction_;
};

Vec3 world_to_camera(const CameraPose& pose, const Vec3& x_w);
Vec3 camera_to_world(const CameraPose& pose, const Vec3& x_c);

/// Pinhole projection. Throws BehindCamera when the camera-frame depth is
/// not above kMinDepth.
PixelPoint project(const Camera& camera, const Vec3& x_w);

/// World-frame unit direction of the ray through pixel `p`.
Vec3 backproject_direction(const Camera& camera, const PixelPoint& p);

Ray observation_ray(const Camera& camera, const PixelPoint& p);

/// Orientation whose principal axis points from `position` to `focus`.
/// The camera x axis is up_hint x z, y completes a right-handed frame.
/// Throws DegenerateLookAt if the viewing direction is parallel to
/// up_hint, InvalidArgument if position and focus coincide.
CameraPose look_at_pose(const Vec3& position, const Vec3& focus, const Vec3& up_hint);

/// Uses up_hint = +z, falling back to +x when the view is vertical.
CameraPose look_at_pose(const Vec3& position, const Vec3& focus);

/// In front of the camera and projecting inside [0,width] x [0,height].
bool is_visible(const Camera& camera, const Vec3& x_w);

} // namespace ledloc
