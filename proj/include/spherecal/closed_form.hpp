#ifndef SPHERECAL_CLOSED_FORM_HPP
#define SPHERECAL_CLOSED_FORM_HPP

#include <utility>
#include <vector>

#include <Eigen/Core>

#include "spherecal/types.hpp"

namespace spherecal {

// Stacked linear system in the 11 unknowns [w; a], where w holds the five
// free entries of W = K K^T (W33 = 1) and a the six entries of the center
// matrix A. One view contributes the six symmetric-entry equations of
// H^-1 W H^-T = (1/lambda_i1^2) A, so D is 6N x 11.
struct LinearSystem {
  Eigen::MatrixXd D;
  Eigen::VectorXd b;
  std::vector<double> scale_ratios;  // lambda_i1 per view
  int base_index = 0;

  int view_count() const { return static_cast<int>(scale_ratios.size()); }
};

// Numerical rank of D with singular values >= tol_rel * sigma_max, computed
// on a column-equilibrated copy so the mixed-unit columns compare fairly.
// Returns (rank, smallest retained singular value ratio).
std::pair<int, double> numerical_rank(const Eigen::MatrixXd& D, double tol_rel = 1e-8);

// Real cube root of det(H_base^-1 H_i) = lambda_i / lambda_base.
// Throws SingularHomography if either determinant magnitude is below 1e-14,
// GaugeViolation if the argument is negative (impossible in the fixed gauge).
double scale_ratio(const Homography& H_i, const Homography& H_base);

// Assembles D, b and the scale ratios. Throws TooFewViews if fewer than 3
// homographies are given.
LinearSystem build_linear_system(const std::vector<Homography>& homographies,
                                 int base_index);

// Internal assembly without the N >= 3 gate; used by the degeneracy
// diagnostics which operate on as few as two views.
LinearSystem assemble_design_matrix(const std::vector<Homography>& homographies,
                                    int base_index);

struct ClosedFormDiagnostics {
  int rank = 0;
  double smallest_retained_sv = 0.0;   // relative to sigma_max
  double min_eigenvalue_A = 0.0;       // of the reconstituted A
  bool clamped_radicand = false;       // a tiny negative radicand was clamped
  int base_index = 0;
};

// N > 2 view linear calibration: homography estimation, scale-ratio
// recovery, least-squares solve of the stacked system, extraction of
// intrinsics and the fixed camera center, per-view rotations.
// With parallel = true the per-view homographies are estimated on OpenMP
// threads into indexed slots, so the result matches the serial path.
// Throws TooFewViews, DegenerateConfiguration, NotPositiveDefinite.
std::pair<CameraIntrinsics, SphericalExtrinsics> solve_closed_form(
    const PlanarObservations& views, const PlanarTarget& target,
    ClosedFormDiagnostics* diagnostics = nullptr, bool parallel = false);

// Homographies for each view in target-mm units, estimated by normalized DLT.
std::vector<Homography> estimate_view_homographies(const PlanarObservations& views,
                                                   const PlanarTarget& target,
                                                   bool parallel = false);

}  // namespace spherecal

#endif  // SPHERECAL_CLOSED_FORM_HPP
