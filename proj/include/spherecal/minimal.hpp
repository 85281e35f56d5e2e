#ifndef SPHERECAL_MINIMAL_HPP
#define SPHERECAL_MINIMAL_HPP

#include <utility>
#include <vector>

#include <Eigen/Core>

#include "spherecal/types.hpp"

namespace spherecal {

using Vector6d = Eigen::Matrix<double, 6, 1>;

// Coefficient row of (H^T w H)_mn over the 6-vector
// w = (W11, W12, W13, W22, W23, W33); m, n index columns of H (0-based).
Vector6d conic_row(const Homography& H, int m, int n);

// The three constraint rows one view contributes to the hidden-variable
// system: the off-diagonal row, the diagonal-difference row, and the
// c-linear row split into its constant and c-coefficient parts.
struct ConstraintRows {
  Vector6d off_diag;      // v12
  Vector6d diag_diff;     // v11 - v22
  Vector6d center_const;  // v13 + v23 + v33
  Vector6d center_lin;    // v11 (multiplied by the hidden variable)
};

ConstraintRows constraint_rows(const Homography& H);

struct MinimalOptions {
  // refine w against the full 10-row constraint set after extraction
  bool use_full_constraints = false;
};

struct MinimalDiagnostics {
  std::vector<double> roots;        // candidate roots of det(C(c))
  double chosen_root = 0.0;         // in normalized target units
  double q2 = 0.0, q1 = 0.0, q0 = 0.0;
};

// Two-view minimal solver: hidden-variable elimination of
// c = x + y - |t_cp|^2, root selection by the 10-constraint residual,
// inverse-Cholesky recovery of K, back-substitution for x, y, r.
// Throws NoRealRoot, NotPositiveDefinite, NotConsistent,
// DegenerateConfiguration, TooFewPoints.
std::pair<CameraIntrinsics, SphericalExtrinsics> solve_minimal(
    const ViewObservations& view_a, const ViewObservations& view_b,
    const PlanarTarget& target, const MinimalOptions& options = {},
    MinimalDiagnostics* diagnostics = nullptr);

std::pair<CameraIntrinsics, SphericalExtrinsics> solve_minimal(
    const PlanarObservations& views, const PlanarTarget& target,
    const MinimalOptions& options = {}, MinimalDiagnostics* diagnostics = nullptr);

}  // namespace spherecal

#endif  // SPHERECAL_MINIMAL_HPP
