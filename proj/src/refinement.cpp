#include "ledloc/refinement.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/LU>

namespace ledloc {

void SolverConfig::validate() const {
  const bool ok = max_iterations > 0 && initial_damping > 0.0 && damping_increase > 1.0 && damping_decrease > 0.0 &&
                  damping_decrease < 1.0 && gradient_tol > 0.0 && step_tol > 0.0 && cost_tol > 0.0;
  if (!ok) throw Error(ErrorCode::InvalidArgument, "invalid solver configuration");
}

std::string_view to_string(Termination t) {
  switch (t) {
  case Termination::Gradient: return "gradient";
  case Termination::Step: return "step";
  case Termination::Cost: return "cost";
  case Termination::MaxIter: return "max_iter";
  }
  return "unknown";
}

namespace {

using Mat23 = Eigen::Matrix<double, 2, 3>;

struct Observation {
  std::size_t camera; // scene index
  std::size_t target; // index into Problem::targets
  Vec2 pixel;
};

/// Observations flattened in residual order (camera index, then target).
struct Problem {
  const Scene* scene = nullptr;
  std::vector<TargetId> targets;
  std::vector<Observation> observations;
};

Problem make_problem(const Scene& scene, const ObservationSet& set) {
  Problem p;
  p.scene = &scene;
  p.targets = set.target_ids();
  for (const auto& [key, pixel] : set.entries()) {
    if (!scene.index_of(key.first)) {
      throw Error(ErrorCode::InvalidArgument, "observation refers to unknown camera " + std::to_string(key.first));
    }
  }
  for (std::size_t c = 0; c < scene.size(); ++c) {
    const CameraId id = scene.cameras()[c].id;
    for (std::size_t t = 0; t < p.targets.size(); ++t) {
      if (set.contains(id, p.targets[t])) {
        p.observations.push_back({c, t, set.at(id, p.targets[t]).vec()});
      }
    }
  }
  return p;
}

void check_positions(const Problem& p, std::span<const Vec3> positions) {
  if (positions.size() != p.targets.size()) {
    throw Error(ErrorCode::InvalidArgument, "expected " + std::to_string(p.targets.size()) + " positions, got " +
                                                std::to_string(positions.size()));
  }
  for (const auto& x : positions) {
    if (!x.allFinite()) throw Error(ErrorCode::InvalidArgument, "positions must be finite");
  }
}

Vec3 camera_point(const Problem& p, const Observation& o, const Vec3& x_w) {
  const Camera& cam = p.scene->cameras()[o.camera];
  const Vec3 x_c = world_to_camera(cam.pose, x_w);
  if (!(x_c.z() > kMinDepth)) {
    throw Error(ErrorCode::BehindCamera, "target " + std::to_string(p.targets[o.target]) +
                                             " is not in front of camera " + std::to_string(cam.id));
  }
  return x_c;
}

Vec2 residual_of(const Problem& p, const Observation& o, const Vec3& x_c) {
  const auto& k = p.scene->cameras()[o.camera].intrinsics;
  return o.pixel - Vec2(k.fx() * x_c.x() / x_c.z() + k.u0(), k.fy() * x_c.y() / x_c.z() + k.v0());
}

/// d(residual)/d(x_w) = -d(pi)/d(x_c) * R^T.
Mat23 jacobian_of(const Problem& p, const Observation& o, const Vec3& x_c) {
  const Camera& cam = p.scene->cameras()[o.camera];
  const double fx = cam.intrinsics.fx();
  const double fy = cam.intrinsics.fy();
  const double iz = 1.0 / x_c.z();
  Mat23 dpi;
  dpi << fx * iz, 0.0, -fx * x_c.x() * iz * iz, 0.0, fy * iz, -fy * x_c.y() * iz * iz;
  return -dpi * cam.pose.rotation().transpose();
}

double cost_at(const Problem& p, std::span<const Vec3> x) {
  double cost = 0.0;
  for (const auto& o : p.observations) cost += residual_of(p, o, camera_point(p, o, x[o.target])).squaredNorm();
  return cost;
}

Eigen::VectorXd stacked_residual(const Problem& p, std::span<const Vec3> x) {
  Eigen::VectorXd r(2 * p.observations.size());
  for (std::size_t i = 0; i < p.observations.size(); ++i) {
    const auto& o = p.observations[i];
    r.segment<2>(2 * i) = residual_of(p, o, camera_point(p, o, x[o.target]));
  }
  return r;
}

Eigen::MatrixXd stacked_jacobian(const Problem& p, std::span<const Vec3> x) {
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(2 * p.observations.size(), 3 * p.targets.size());
  for (std::size_t i = 0; i < p.observations.size(); ++i) {
    const auto& o = p.observations[i];
    j.block<2, 3>(2 * i, 3 * o.target) = jacobian_of(p, o, camera_point(p, o, x[o.target]));
  }
  return j;
}

/// Gauss-Newton quantities: J^T J (block diagonal, stored per target) and
/// the gradient J^T eps.
struct BlockNormal {
  std::vector<Mat3> hessian;
  std::vector<Vec3> gradient;
};

BlockNormal block_normal(const Problem& p, std::span<const Vec3> x) {
  BlockNormal n;
  n.hessian.assign(p.targets.size(), Mat3::Zero());
  n.gradient.assign(p.targets.size(), Vec3::Zero());
  for (const auto& o : p.observations) {
    const Vec3 x_c = camera_point(p, o, x[o.target]);
    const Mat23 j = jacobian_of(p, o, x_c);
    n.hessian[o.target] += j.transpose() * j;
    n.gradient[o.target] += j.transpose() * residual_of(p, o, x_c);
  }
  return n;
}

struct DenseNormal {
  Eigen::MatrixXd hessian;
  Eigen::VectorXd gradient;
};

DenseNormal dense_normal(const Problem& p, std::span<const Vec3> x) {
  const Eigen::MatrixXd j = stacked_jacobian(p, x);
  const Eigen::VectorXd r = stacked_residual(p, x);
  return {j.transpose() * j, j.transpose() * r};
}

/// Marquardt scaling diag(J^T J), floored relative to its block maximum so
/// a blind axis still gets damped.
Vec3 damping_diagonal(const Mat3& h) {
  const Vec3 d = h.diagonal();
  const double floor = 1e-12 * std::max(d.maxCoeff(), 1.0);
  return d.cwiseMax(floor);
}

double max_abs(const std::vector<Vec3>& v) {
  double m = 0.0;
  for (const auto& e : v) m = std::max(m, e.cwiseAbs().maxCoeff());
  return m;
}

constexpr double kCostNoise = 1e-10;

/// Falls back to the initial guess if rounding-band steps left the cost above it.
RefinementResult& finish(RefinementResult& r, std::span<const Vec3> init) {
  if (r.final_cost > r.initial_cost) {
    r.positions.assign(init.begin(), init.end());
    r.final_cost = r.initial_cost;
  }
  return r;
}

/// Shared Levenberg-Marquardt loop. `linearize` builds J^T J and J^T eps at
/// an iterate and `solve(normal, mu)` returns the damped step.
template <class Linearize, class Solve, class GradNorm>
RefinementResult run_lm(const Problem& p, std::span<const Vec3> init, const SolverConfig& config,
                        Linearize linearize, Solve solve, GradNorm gradient_norm) {
  config.validate();
  check_positions(p, init);

  RefinementResult result;
  result.positions.assign(init.begin(), init.end());
  double cost = cost_at(p, result.positions); // throws if init is infeasible
  result.initial_cost = cost;
  result.final_cost = cost;

  auto normal = linearize(result.positions);
  if (gradient_norm(normal) <= config.gradient_tol) {
    result.converged = true;
    result.termination = Termination::Gradient;
    return result;
  }

  double mu = config.initial_damping;
  double gradient = gradient_norm(normal);
  std::vector<Vec3> trial(result.positions.size());
  for (int iter = 1; iter <= config.max_iterations; ++iter) {
    result.iterations = iter;
    const std::vector<Vec3> step = solve(normal, mu);
    if (max_abs(step) <= config.step_tol) {
      result.converged = true;
      result.termination = Termination::Step;
      return finish(result, init);
    }
    for (std::size_t t = 0; t < trial.size(); ++t) trial[t] = result.positions[t] + step[t];

    double trial_cost = 0.0;
    try {
      trial_cost = cost_at(p, trial);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::BehindCamera) throw;
      mu *= config.damping_increase;
      continue;
    }

    // Inside the rounding band of the cost, judge by the gradient.
    const bool descent = trial_cost < cost;
    std::optional<decltype(normal)> trial_normal;
    if (!descent && trial_cost <= cost * (1.0 + kCostNoise)) {
      trial_normal = linearize(trial);
      if (!(gradient_norm(*trial_normal) < gradient)) trial_normal.reset();
    }
    if (!descent && !trial_normal) {
      mu *= config.damping_increase;
      continue;
    }

    const double decrease = cost - trial_cost;
    result.positions.swap(trial);
    cost = trial_cost;
    result.final_cost = cost;
    mu *= config.damping_decrease;

    normal = trial_normal ? std::move(*trial_normal) : linearize(result.positions);
    gradient = gradient_norm(normal);
    if (gradient <= config.gradient_tol) {
      result.converged = true;
      result.termination = Termination::Gradient;
      return finish(result, init);
    }
    if (descent && decrease <= config.cost_tol * (cost + decrease)) {
      result.converged = true;
      result.termination = Termination::Cost;
      return finish(result, init);
    }
  }
  result.converged = false;
  result.termination = Termination::MaxIter;
  return finish(result, init);
}

} // namespace

Eigen::VectorXd reprojection_residual(const Scene& scene, const ObservationSet& observations,
                                      std::span<const Vec3> positions) {
  const Problem p = make_problem(scene, observations);
  check_positions(p, positions);
  return stacked_residual(p, positions);
}

Eigen::MatrixXd residual_jacobian(const Scene& scene, const ObservationSet& observations,
                                  std::span<const Vec3> positions) {
  const Problem p = make_problem(scene, observations);
  check_positions(p, positions);
  return stacked_jacobian(p, positions);
}

double target_reprojection_cost(const Scene& scene, const ObservationSet& observations, TargetId target,
                                const Vec3& position) {
  double cost = 0.0;
  for (const auto& camera : scene.cameras()) {
    if (!observations.contains(camera.id, target)) continue;
    const PixelPoint proj = project(camera, position);
    cost += (observations.at(camera.id, target).vec() - proj.vec()).squaredNorm();
  }
  return cost;
}

RefinementResult refine_lm(const Scene& scene, const ObservationSet& observations, std::span<const Vec3> init,
                           const SolverConfig& config) {
  const Problem p = make_problem(scene, observations);
  auto linearize = [&p](std::span<const Vec3> x) { return block_normal(p, x); };
  auto solve = [](const BlockNormal& n, double mu) {
    std::vector<Vec3> step(n.hessian.size());
    for (std::size_t t = 0; t < step.size(); ++t) {
      Mat3 h = n.hessian[t];
      h.diagonal() += mu * damping_diagonal(n.hessian[t]);
      step[t] = h.ldlt().solve(-n.gradient[t]);
    }
    return step;
  };
  auto gradient_norm = [](const BlockNormal& n) { return max_abs(n.gradient); };
  return run_lm(p, init, config, linearize, solve, gradient_norm);
}

RefinementResult refine_lm_dense(const Scene& scene, const ObservationSet& observations,
                                 std::span<const Vec3> init, const SolverConfig& config) {
  const Problem p = make_problem(scene, observations);
  auto linearize = [&p](std::span<const Vec3> x) { return dense_normal(p, x); };
  auto solve = [](const DenseNormal& n, double mu) {
    Eigen::MatrixXd h = n.hessian;
    for (Eigen::Index b = 0; b < h.rows(); b += 3) {
      h.diagonal().segment<3>(b) += mu * damping_diagonal(n.hessian.block<3, 3>(b, b));
    }
    const Eigen::VectorXd delta = h.partialPivLu().solve(-n.gradient);
    std::vector<Vec3> step(static_cast<std::size_t>(h.rows() / 3));
    for (std::size_t t = 0; t < step.size(); ++t) step[t] = delta.segment<3>(3 * static_cast<Eigen::Index>(t));
    return step;
  };
  auto gradient_norm = [](const DenseNormal& n) { return n.gradient.size() ? n.gradient.cwiseAbs().maxCoeff() : 0.0; };
  return run_lm(p, init, config, linearize, solve, gradient_norm);
}

LocalizationResult localize(const Scene& scene, const ObservationSet& observations, const SolverConfig& config) {
  const auto linear = localize_linear(scene, observations);

  LocalizationResult out;
  ObservationSet refinable;
  std::vector<Vec3> init;
  std::vector<std::size_t> refined_slots;
  for (const auto& lin : linear) {
    TargetLocalization t;
    t.target = lin.target;
    t.linear = lin.estimate;
    if (lin.error) {
      t.error = lin.error;
      t.message = lin.message;
    } else {
      try {
        t.linear_cost = target_reprojection_cost(scene, observations, lin.target, lin.estimate->position);
        for (const auto& camera : scene.cameras()) {
          if (observations.contains(camera.id, lin.target)) {
            refinable.add(camera.id, lin.target, observations.at(camera.id, lin.target));
          }
        }
        init.push_back(lin.estimate->position);
        refined_slots.push_back(out.targets.size());
      } catch (const Error& e) {
        if (e.code() != ErrorCode::BehindCamera) throw;
        t.error = e.code();
        t.message = "target " + std::to_string(lin.target) + ": linear estimate " + e.what();
      }
    }
    out.targets.push_back(std::move(t));
  }

  if (init.empty()) {
    out.refinement.converged = true;
    out.refinement.termination = Termination::Gradient;
    return out;
  }

  out.refinement = refine_lm(scene, refinable, init, config);
  for (std::size_t k = 0; k < refined_slots.size(); ++k) {
    auto& t = out.targets[refined_slots[k]];
    t.refined = out.refinement.positions[k];
    t.refined_cost = target_reprojection_cost(scene, observations, t.target, *t.refined);
  }
  return out;
}

} // namespace ledloc
