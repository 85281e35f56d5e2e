#include "spherecal/bundle_adjust.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "spherecal/error.hpp"
#include "spherecal/project.hpp"
#include "spherecal/rotation.hpp"

namespace spherecal {

Eigen::VectorXd pack_parameters(const CameraIntrinsics& K, const RadialDistortion& dist,
                                const SphericalExtrinsics& ext) {
  const int n = static_cast<int>(ext.rotations.size());
  Eigen::VectorXd p(kGlobalParams + 3 * n);
  p << K.fx, K.fy, K.cx, K.cy, K.skew, dist.k1, dist.k2, ext.x, ext.y, ext.r,
      Eigen::VectorXd::Zero(3 * n);
  for (int i = 0; i < n; ++i) {
    p.segment<3>(kGlobalParams + 3 * i) = so3_log(ext.rotations[i]);
  }
  return p;
}

void unpack_parameters(const Eigen::VectorXd& p, CameraIntrinsics& K,
                       RadialDistortion& dist, SphericalExtrinsics& ext) {
  K.fx = p(0);
  K.fy = p(1);
  K.cx = p(2);
  K.cy = p(3);
  K.skew = p(4);
  dist.k1 = p(5);
  dist.k2 = p(6);
  ext.x = p(7);
  ext.y = p(8);
  ext.r = p(9);
  const int n = static_cast<int>((p.size() - kGlobalParams) / 3);
  ext.rotations.resize(n);
  for (int i = 0; i < n; ++i) {
    ext.rotations[i] = so3_exp(p.segment<3>(kGlobalParams + 3 * i));
  }
}

namespace {

struct ParamView {
  CameraIntrinsics K;
  RadialDistortion dist;
  Eigen::Vector3d center;  // t_cp

  explicit ParamView(const Eigen::VectorXd& p)
      : K{p(0), p(1), p(2), p(3), p(4)},
        dist{p(5), p(6)},
        center(p(7), p(8), -p(9)) {}
};

int total_points(const PlanarObservations& obs) {
  int total = 0;
  for (const auto& v : obs.views) total += v.size();
  return total;
}

}  // namespace

Eigen::VectorXd ba_residuals(const Eigen::VectorXd& params,
                             const PlanarObservations& obs, const PlanarTarget& target) {
  const ParamView pv(params);
  Eigen::VectorXd r(2 * total_points(obs));
  int offset = 0;
  for (int i = 0; i < obs.view_count(); ++i) {
    const ViewObservations& view = obs.views[i];
    const Eigen::Matrix3d R = so3_exp(params.segment<3>(kGlobalParams + 3 * i));
    for (int j = 0; j < view.size(); ++j) {
      const Eigen::Vector2d P2 = target.point(view.indices[j]);
      Eigen::Vector2d uv;
      try {
        uv = project(pv.K, pv.dist, R, pv.center, {P2.x(), P2.y(), 0.0});
      } catch (const NonPositiveDepth&) {
        throw NonPositiveDepth("non-positive depth in residuals", i, j);
      }
      r.segment<2>(offset) = uv - view.pixels[j];
      offset += 2;
    }
  }
  return r;
}

Eigen::MatrixXd ba_jacobian(const Eigen::VectorXd& params,
                            const PlanarObservations& obs, const PlanarTarget& target) {
  const ParamView pv(params);
  const int n_params = static_cast<int>(params.size());
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2 * total_points(obs), n_params);
  int offset = 0;
  for (int i = 0; i < obs.view_count(); ++i) {
    const ViewObservations& view = obs.views[i];
    const Eigen::Vector3d aa = params.segment<3>(kGlobalParams + 3 * i);
    for (int j = 0; j < view.size(); ++j) {
      const Eigen::Vector2d P2 = target.point(view.indices[j]);
      ProjectionJacobian pj;
      try {
        project_with_jacobian(pv.K, pv.dist, aa, pv.center, {P2.x(), P2.y(), 0.0}, pj);
      } catch (const NonPositiveDepth&) {
        throw NonPositiveDepth("non-positive depth in jacobian", i, j);
      }
      J.block<2, 5>(offset, 0) = pj.d_intrinsics;
      J.block<2, 2>(offset, 5) = pj.d_distortion;
      J.block<2, 3>(offset, 7) = pj.d_center;
      J.block<2, 3>(offset, kGlobalParams + 3 * i) = pj.d_rotation;
      offset += 2;
    }
  }
  return J;
}

namespace {

struct RobustLoss {
  double b2;  // squared Cauchy scale

  double rho(double s) const { return b2 * std::log1p(s / b2); }
  double drho(double s) const { return 1.0 / (1.0 + s / b2); }
};

// Per-view contribution to the robustified normal equations. The view block
// touches the 10 global parameters plus its own rotation triple.
struct ViewBlock {
  Eigen::Matrix<double, 13, 13> H = Eigen::Matrix<double, 13, 13>::Zero();
  Eigen::Matrix<double, 13, 1> g = Eigen::Matrix<double, 13, 1>::Zero();
  double cost = 0.0;
  bool ok = true;
};

ViewBlock view_block(const Eigen::VectorXd& params, const PlanarObservations& obs,
                     const PlanarTarget& target, const RobustLoss& loss, int i) {
  const ParamView pv(params);
  const ViewObservations& view = obs.views[i];
  const Eigen::Vector3d aa = params.segment<3>(kGlobalParams + 3 * i);
  ViewBlock block;
  for (int j = 0; j < view.size(); ++j) {
    const Eigen::Vector2d P2 = target.point(view.indices[j]);
    ProjectionJacobian pj;
    Eigen::Vector2d uv;
    try {
      uv = project_with_jacobian(pv.K, pv.dist, aa, pv.center,
                                 {P2.x(), P2.y(), 0.0}, pj);
    } catch (const NonPositiveDepth&) {
      block.ok = false;
      return block;
    }
    const Eigen::Vector2d r = uv - view.pixels[j];
    Eigen::Matrix<double, 2, 13> Jrow;
    Jrow << pj.d_intrinsics, pj.d_distortion, pj.d_center, pj.d_rotation;
    const double s = r.squaredNorm();
    const double w = loss.drho(s);
    block.cost += loss.rho(s);
    block.H.noalias() += w * Jrow.transpose() * Jrow;
    block.g.noalias() += w * Jrow.transpose() * r;
  }
  return block;
}

void scatter_block(const ViewBlock& block, int i, Eigen::MatrixXd& H,
                   Eigen::VectorXd& g) {
  const int rot = kGlobalParams + 3 * i;
  H.topLeftCorner<10, 10>() += block.H.topLeftCorner<10, 10>();
  H.block<10, 3>(0, rot) += block.H.topRightCorner<10, 3>();
  H.block<3, 10>(rot, 0) += block.H.bottomLeftCorner<3, 10>();
  H.block<3, 3>(rot, rot) += block.H.bottomRightCorner<3, 3>();
  g.head<10>() += block.g.head<10>();
  g.segment<3>(rot) += block.g.tail<3>();
}

}  // namespace

bool accumulate_normal_equations(const Eigen::VectorXd& params,
                                 const PlanarObservations& obs,
                                 const PlanarTarget& target, const BAOptions& options,
                                 Eigen::MatrixXd& H, Eigen::VectorXd& g, double& cost) {
  const int n_params = static_cast<int>(params.size());
  const int n_views = obs.view_count();
  const RobustLoss loss{options.cauchy_scale_px * options.cauchy_scale_px};
  H = Eigen::MatrixXd::Zero(n_params, n_params);
  g = Eigen::VectorXd::Zero(n_params);
  cost = 0.0;

  std::vector<ViewBlock> blocks(n_views);
  if (options.parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n_views; ++i) {
      blocks[i] = view_block(params, obs, target, loss, i);
    }
  } else {
    for (int i = 0; i < n_views; ++i) {
      blocks[i] = view_block(params, obs, target, loss, i);
    }
  }

  // fixed-order reduction keeps the result identical at any thread count
  for (int i = 0; i < n_views; ++i) {
    if (!blocks[i].ok) return false;
    scatter_block(blocks[i], i, H, g);
    cost += blocks[i].cost;
  }
  return true;
}

bool evaluate_cost(const Eigen::VectorXd& params, const PlanarObservations& obs,
                   const PlanarTarget& target, const BAOptions& options, double& cost) {
  const ParamView pv(params);
  const RobustLoss loss{options.cauchy_scale_px * options.cauchy_scale_px};
  const int n_views = obs.view_count();
  std::vector<double> view_costs(n_views, 0.0);
  std::vector<char> ok(n_views, 1);

  auto run_view = [&](int i) {
    const ViewObservations& view = obs.views[i];
    const Eigen::Matrix3d R = so3_exp(params.segment<3>(kGlobalParams + 3 * i));
    double c = 0.0;
    for (int j = 0; j < view.size(); ++j) {
      const Eigen::Vector2d P2 = target.point(view.indices[j]);
      const Eigen::Vector3d Xc = R * (Eigen::Vector3d(P2.x(), P2.y(), 0.0) - pv.center);
      if (Xc.z() <= 0.0) {
        ok[i] = 0;
        return;
      }
      const Eigen::Vector2d xn(Xc.x() / Xc.z(), Xc.y() / Xc.z());
      const Eigen::Vector2d xd = distort(pv.dist, xn);
      const Eigen::Vector2d uv(pv.K.fx * xd.x() + pv.K.skew * xd.y() + pv.K.cx,
                               pv.K.fy * xd.y() + pv.K.cy);
      c += loss.rho((uv - view.pixels[j]).squaredNorm());
    }
    view_costs[i] = c;
  };

  if (options.parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n_views; ++i) run_view(i);
  } else {
    for (int i = 0; i < n_views; ++i) run_view(i);
  }

  cost = 0.0;
  for (int i = 0; i < n_views; ++i) {
    if (!ok[i]) return false;
    cost += view_costs[i];
  }
  return true;
}

BAResult bundle_adjust(const CameraIntrinsics& K0, const RadialDistortion& dist0,
                       const SphericalExtrinsics& ext0, const PlanarObservations& obs,
                       const PlanarTarget& target, const BAOptions& options) {
  const int n_views = obs.view_count();
  if (n_views == 0 || static_cast<int>(ext0.rotations.size()) != n_views) {
    throw InvalidInitialization("rotation count does not match view count");
  }

  Eigen::VectorXd params = pack_parameters(K0, dist0, ext0);
  const int n_params = static_cast<int>(params.size());

  // active set: everything, minus skew when frozen
  std::vector<int> active;
  active.reserve(n_params);
  for (int i = 0; i < n_params; ++i) {
    if (options.freeze_skew && i == 4) continue;
    active.push_back(i);
  }
  const int n_active = static_cast<int>(active.size());

  // all recorded costs come from evaluate_cost so the accepted-cost trace is
  // monotone by construction
  double cost = 0.0;
  if (!evaluate_cost(params, obs, target, options, cost)) {
    throw InvalidInitialization("initial parameters project a point behind the camera");
  }

  BAReport report;
  report.initial_cost = cost;
  report.cost_trace.push_back(cost);

  double damping = options.initial_damping;
  int consecutive_increases = 0;
  std::string reason = "max_iterations";
  int iter = 0;

  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  double acc_cost = 0.0;

  for (; iter < options.max_iterations; ++iter) {
    if (!accumulate_normal_equations(params, obs, target, options, H, g, acc_cost)) {
      throw NonPositiveDepth("accepted step projects a point behind the camera");
    }

    double gmax = 0.0;
    for (int idx : active) gmax = std::max(gmax, std::abs(g(idx)));
    if (gmax < options.gradient_tol) {
      reason = "gradient";
      break;
    }

    // reduced system over active parameters
    Eigen::MatrixXd Ha(n_active, n_active);
    Eigen::VectorXd ga(n_active);
    for (int r = 0; r < n_active; ++r) {
      ga(r) = g(active[r]);
      for (int c = 0; c < n_active; ++c) Ha(r, c) = H(active[r], active[c]);
    }

    bool accepted = false;
    bool done = false;
    while (!accepted && !done) {
      Eigen::MatrixXd Hd = Ha;
      Hd.diagonal().array() += damping;
      const Eigen::VectorXd delta = Hd.ldlt().solve(-ga);

      Eigen::VectorXd trial = params;
      for (int r = 0; r < n_active; ++r) trial(active[r]) += delta(r);
      trial(9) = std::max(trial(9), options.min_radius_mm);  // r > 0

      double trial_cost = std::numeric_limits<double>::infinity();
      const bool finite = evaluate_cost(trial, obs, target, options, trial_cost);

      if (finite && trial_cost <= cost) {
        const double decrease = (cost - trial_cost) / std::max(cost, 1e-300);
        params = trial;
        cost = trial_cost;
        report.cost_trace.push_back(cost);
        damping = std::max(damping * options.damping_down, 1e-15);
        consecutive_increases = 0;
        accepted = true;
        if (decrease < options.cost_decrease_tol) {
          reason = "cost_decrease";
          done = true;
        }
      } else if (finite &&
                 trial_cost - cost <= options.cost_decrease_tol * std::max(cost, 1.0)) {
        // a trial within termination tolerance of the current cost means
        // convergence, not divergence
        reason = "cost_decrease";
        done = true;
      } else {
        damping *= options.damping_up;
        if (++consecutive_increases >= options.max_consecutive_increases) {
          throw DivergenceDetected("cost increased for " +
                                   std::to_string(consecutive_increases) +
                                   " consecutive damping escalations");
        }
      }
    }
    if (done) {
      ++iter;
      break;
    }
  }

  // iterations counted as accepted parameter updates
  report.iterations = static_cast<int>(report.cost_trace.size()) - 1;
  report.reason = reason;
  report.final_cost = cost;

  BAResult out;
  unpack_parameters(params, out.intrinsics, out.distortion, out.extrinsics);
  const Eigen::VectorXd r = ba_residuals(params, obs, target);
  report.final_rms_px = std::sqrt(r.squaredNorm() / static_cast<double>(r.size()));
  out.report = std::move(report);
  return out;
}

}  // namespace spherecal
