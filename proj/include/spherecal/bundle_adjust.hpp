#ifndef SPHERECAL_BUNDLE_ADJUST_HPP
#define SPHERECAL_BUNDLE_ADJUST_HPP

#include <string>
#include <vector>

#include <Eigen/Core>

#include "spherecal/types.hpp"

namespace spherecal {

// Parameter vector layout, length 10 + 3N:
//   [fx, fy, cx, cy, skew, k1, k2, x, y, r, then one axis-angle triple per view]
// The motion block is 3N + 3 parameters instead of the 6N a free-motion
// refinement would need.
constexpr int kGlobalParams = 10;

Eigen::VectorXd pack_parameters(const CameraIntrinsics& K, const RadialDistortion& dist,
                                const SphericalExtrinsics& ext);

void unpack_parameters(const Eigen::VectorXd& params, CameraIntrinsics& K,
                       RadialDistortion& dist, SphericalExtrinsics& ext);

// Reprojection residuals, view-major, point-minor, u before v (2 M N total).
// Throws NonPositiveDepth with the offending (view, point).
Eigen::VectorXd ba_residuals(const Eigen::VectorXd& params,
                             const PlanarObservations& obs, const PlanarTarget& target);

// Dense analytic Jacobian of ba_residuals.
Eigen::MatrixXd ba_jacobian(const Eigen::VectorXd& params,
                            const PlanarObservations& obs, const PlanarTarget& target);

struct BAOptions {
  double cauchy_scale_px = 2.0;
  double initial_damping = 1e-4;
  double damping_up = 10.0;
  double damping_down = 0.1;
  int max_iterations = 100;
  double cost_decrease_tol = 1e-12;   // relative accepted-cost decrease
  double gradient_tol = 1e-10;        // max-norm of the robust gradient
  int max_consecutive_increases = 10;
  bool freeze_skew = false;
  double min_radius_mm = 1e-6;
  bool parallel = false;  // OpenMP accumulation over views
};

struct BAReport {
  double initial_cost = 0.0;
  double final_cost = 0.0;
  std::vector<double> cost_trace;  // accepted costs, starting at the initial one
  double final_rms_px = 0.0;       // per-component reprojection RMS
  int iterations = 0;
  std::string reason;
};

struct BAResult {
  CameraIntrinsics intrinsics;
  RadialDistortion distortion;
  SphericalExtrinsics extrinsics;
  BAReport report;
};

// Levenberg-Marquardt minimization of the Cauchy-robustified reprojection
// error over intrinsics, distortion, per-view rotations and the shared
// center. Throws InvalidInitialization if the initial parameters project a
// point behind the camera, DivergenceDetected on repeated cost increases.
BAResult bundle_adjust(const CameraIntrinsics& K, const RadialDistortion& dist,
                       const SphericalExtrinsics& ext, const PlanarObservations& obs,
                       const PlanarTarget& target, const BAOptions& options = {});

// Robustified normal equations H = J^T W J, g = J^T W r and the robust cost.
// The parallel path computes per-view blocks concurrently and reduces them
// in view-index order, so results match the serial path bit for bit.
// Returns false if any point projects with non-positive depth.
bool accumulate_normal_equations(const Eigen::VectorXd& params,
                                 const PlanarObservations& obs,
                                 const PlanarTarget& target, const BAOptions& options,
                                 Eigen::MatrixXd& H, Eigen::VectorXd& g, double& cost);

// Robust cost only (used for trial steps). Returns false on non-positive depth.
bool evaluate_cost(const Eigen::VectorXd& params, const PlanarObservations& obs,
                   const PlanarTarget& target, const BAOptions& options, double& cost);

}  // namespace spherecal

#endif  // SPHERECAL_BUNDLE_ADJUST_HPP
