#include "ledloc/triangulation.hpp"

#include <string>

#include <Eigen/Eigenvalues>

namespace ledloc {

double point_ray_distance(const Vec3& x, const Ray& ray) {
  const Vec3 offset = x - ray.origin();
  return (offset - ray.direction() * ray.direction().dot(offset)).norm();
}

RayProjector ray_projector(const Ray& ray) {
  const Vec3& d = ray.direction();
  RayProjector p;
  p.A = Mat3::Identity() - d * d.transpose();
  p.b = p.A * ray.origin();
  return p;
}

LinearEstimate triangulate_lls(std::span<const Ray> rays) {
  if (rays.size() < 2) {
    throw Error(ErrorCode::InsufficientRays,
                "triangulation needs at least two rays, got " + std::to_string(rays.size()));
  }

  // Normal equations of the stacked system: (sum A_i^T A_i) x = sum A_i^T b_i,
  // and A_i is a symmetric projector so A_i^T A_i = A_i.
  Mat3 normal = Mat3::Zero();
  Vec3 rhs = Vec3::Zero();
  for (const auto& ray : rays) {
    const RayProjector p = ray_projector(ray);
    normal += p.A;
    rhs += p.b;
  }

  const Eigen::SelfAdjointEigenSolver<Mat3> eig(normal);
  const Vec3 lambda = eig.eigenvalues(); // ascending
  if (!(lambda(0) > 0.0) || lambda(2) > kMaxNormalCondition * lambda(0)) {
    throw Error(ErrorCode::DegenerateGeometry, "rays are parallel or nearly so (normal matrix is singular)");
  }
  const Mat3& v = eig.eigenvectors();
  const Vec3 coeffs = (v.transpose() * rhs).cwiseQuotient(lambda);

  LinearEstimate est;
  est.position = v * coeffs;
  est.ray_count = static_cast<int>(rays.size());
  for (const auto& ray : rays) {
    const double d = point_ray_distance(est.position, ray);
    est.residual_sq += d * d;
    if ((est.position - ray.origin()).dot(ray.direction()) < 0.0) est.behind_camera = true;
  }
  return est;
}

std::vector<TargetLinearResult> localize_linear(const Scene& scene, const ObservationSet& observations) {
  for (const auto& [key, pixel] : observations.entries()) {
    if (!scene.index_of(key.first)) {
      throw Error(ErrorCode::InvalidArgument, "observation refers to unknown camera " + std::to_string(key.first));
    }
  }

  std::vector<TargetLinearResult> out;
  std::vector<Ray> rays;
  for (const TargetId target : observations.target_ids()) {
    rays.clear();
    for (const auto& camera : scene.cameras()) {
      if (observations.contains(camera.id, target)) {
        rays.push_back(observation_ray(camera, observations.at(camera.id, target)));
      }
    }
    TargetLinearResult r;
    r.target = target;
    try {
      r.estimate = triangulate_lls(rays);
    } catch (const Error& e) {
      r.error = e.code();
      r.message = "target " + std::to_string(target) + ": " + e.what();
    }
    out.push_back(std::move(r));
  }
  return out;
}

} // namespace ledloc
