#pragma once

// Test-only generators and oracles. Nothing here calls into the solver
// code paths it is used to check.

#include <cmath>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "ledloc/camera.hpp"
#include "ledloc/observations.hpp"
#include "ledloc/scene.hpp"
#include "ledloc/simulation.hpp"

namespace ledloc::testing {

inline Vec3 uniform_vec(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  return {u(rng), u(rng), u(rng)};
}

/// Camera at a random position looking at a random focus.
inline Camera random_camera(std::mt19937_64& rng, CameraId id = 0) {
  std::uniform_real_distribution<double> f(600.0, 3000.0);
  const Vec3 position = uniform_vec(rng, -5.0, 5.0);
  Vec3 focus = uniform_vec(rng, -5.0, 5.0);
  while ((focus - position).norm() < 0.5) focus = uniform_vec(rng, -5.0, 5.0);
  return Camera{id, Intrinsics::centered(f(rng), 2080.0, 1560.0), look_at_pose(position, focus)};
}

/// World point in front of `camera` at depth 0.5..10 m inside a 90 degree cone.
inline Vec3 random_point_in_front(std::mt19937_64& rng, const Camera& camera) {
  std::uniform_real_distribution<double> depth(0.5, 10.0);
  std::uniform_real_distribution<double> lateral(-1.0, 1.0);
  const double z = depth(rng);
  const Vec3 x_c(lateral(rng) * z, lateral(rng) * z, z);
  return camera.pose.rotation() * x_c + camera.pose.center();
}

/// Random ceiling layout: 2..max_cameras cameras on the ceiling of a
/// random room, all aimed at points near the floor center.
inline Scene random_scene(std::mt19937_64& rng, int min_cameras = 2, int max_cameras = 6) {
  std::uniform_real_distribution<double> side(3.0, 10.0);
  std::uniform_real_distribution<double> height(2.5, 4.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> count(min_cameras, max_cameras);
  std::uniform_real_distribution<double> focal(800.0, 1800.0);
  const Vec3 max(side(rng), side(rng), height(rng));
  const int n = count(rng);
  std::vector<Camera> cameras;
  for (int i = 0; i < n; ++i) {
    const Vec3 position(unit(rng) * max.x(), unit(rng) * max.y(), max.z());
    const Vec3 focus(max.x() * (0.3 + 0.4 * unit(rng)), max.y() * (0.3 + 0.4 * unit(rng)), 0.5 * max.z() * unit(rng));
    cameras.push_back(Camera{i, Intrinsics::centered(focal(rng), 2080.0, 1560.0), look_at_pose(position, focus)});
  }
  return Scene(std::move(cameras), Room{Vec3::Zero(), max});
}

/// Pinhole projection written out independently of ledloc::project.
inline Vec2 pinhole(const Camera& c, const Vec3& x_w) {
  const Vec3 x_c = c.pose.rotation().transpose() * (x_w - c.pose.center());
  return {c.intrinsics.fx() * x_c.x() / x_c.z() + c.intrinsics.u0(),
          c.intrinsics.fy() * x_c.y() / x_c.z() + c.intrinsics.v0()};
}

/// Sum of squared distances from x to each line origin + t*dir.
inline double sum_sq_line_distance(const Vec3& x, std::span<const Ray> rays) {
  double s = 0.0;
  for (const auto& r : rays) {
    const Vec3 w = x - r.origin();
    const double along = w.dot(r.direction());
    s += w.squaredNorm() - along * along;
  }
  return s;
}

/// Brute-force minimizer of sum_sq_line_distance over a cubic grid
/// centered at `center` with half-width `half` and spacing `step`.
inline Vec3 grid_search_lls(std::span<const Ray> rays, const Vec3& center, double half, double step) {
  const int n = static_cast<int>(std::lround(half / step));
  double best = std::numeric_limits<double>::infinity();
  Vec3 best_x = center;
  for (int i = -n; i <= n; ++i) {
    for (int j = -n; j <= n; ++j) {
      for (int k = -n; k <= n; ++k) {
        const Vec3 x = center + step * Vec3(i, j, k);
        const double v = sum_sq_line_distance(x, rays);
        if (v < best) {
          best = v;
          best_x = x;
        }
      }
    }
  }
  return best_x;
}

/// Stacked residual (observed - projected) in the documented order,
/// built from `pinhole`.
inline Eigen::VectorXd oracle_residual(const Scene& scene, const ObservationSet& obs, std::span<const Vec3> positions) {
  const auto ids = obs.target_ids();
  std::vector<double> values;
  for (const auto& cam : scene.cameras()) {
    for (std::size_t t = 0; t < ids.size(); ++t) {
      if (!obs.contains(cam.id, ids[t])) continue;
      const Vec2 r = obs.at(cam.id, ids[t]).vec() - pinhole(cam, positions[t]);
      values.push_back(r.x());
      values.push_back(r.y());
    }
  }
  return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

/// Central finite-difference Jacobian of oracle_residual.
inline Eigen::MatrixXd fd_jacobian(const Scene& scene, const ObservationSet& obs, std::vector<Vec3> positions,
                                   double step) {
  const Eigen::VectorXd r0 = oracle_residual(scene, obs, positions);
  Eigen::MatrixXd j(r0.size(), 3 * static_cast<Eigen::Index>(positions.size()));
  for (std::size_t t = 0; t < positions.size(); ++t) {
    for (int a = 0; a < 3; ++a) {
      const double saved = positions[t](a);
      positions[t](a) = saved + step;
      const Eigen::VectorXd plus = oracle_residual(scene, obs, positions);
      positions[t](a) = saved - step;
      const Eigen::VectorXd minus = oracle_residual(scene, obs, positions);
      positions[t](a) = saved;
      j.col(3 * static_cast<Eigen::Index>(t) + a) = (plus - minus) / (2.0 * step);
    }
  }
  return j;
}

/// Max over entries of |a - f| / max(|a|, 1e-3 * max|a|).
inline double max_relative_error(const Eigen::MatrixXd& analytic, const Eigen::MatrixXd& reference) {
  const double floor = 1e-3 * analytic.cwiseAbs().maxCoeff();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < analytic.rows(); ++i) {
    for (Eigen::Index k = 0; k < analytic.cols(); ++k) {
      const double denom = std::max(std::abs(analytic(i, k)), floor);
      if (denom == 0.0) continue;
      worst = std::max(worst, std::abs(analytic(i, k) - reference(i, k)) / denom);
    }
  }
  return worst;
}

/// Noiseless observations of targets 0..M-1 from every camera.
inline ObservationSet exact_observations(const Scene& scene, std::span<const Vec3> targets) {
  ObservationSet obs;
  for (const auto& cam : scene.cameras()) {
    for (std::size_t j = 0; j < targets.size(); ++j) {
      const Vec2 p = pinhole(cam, targets[j]);
      obs.add(cam.id, static_cast<TargetId>(j), {p.x(), p.y()});
    }
  }
  return obs;
}

/// Observations with Gaussian pixel noise, drawn independently of the
/// library's synthesizer.
inline ObservationSet noisy_observations(const Scene& scene, std::span<const Vec3> targets, double sigma,
                                         std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, sigma);
  ObservationSet obs;
  for (const auto& cam : scene.cameras()) {
    for (std::size_t j = 0; j < targets.size(); ++j) {
      const Vec2 p = pinhole(cam, targets[j]);
      obs.add(cam.id, static_cast<TargetId>(j), {p.x() + g(rng), p.y() + g(rng)});
    }
  }
  return obs;
}

} // namespace ledloc::testing
