#include "spherecal/minimal.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "spherecal/error.hpp"
#include "spherecal/homography.hpp"

namespace spherecal {

Vector6d conic_row(const Homography& Hg, int m, int n) {
  const Eigen::Matrix3d& H = Hg.H;
  Vector6d v;
  v << H(0, m) * H(0, n),
      H(0, m) * H(1, n) + H(0, n) * H(1, m),
      H(0, m) * H(2, n) + H(0, n) * H(2, m),
      H(1, m) * H(1, n),
      H(1, m) * H(2, n) + H(1, n) * H(2, m),
      H(2, m) * H(2, n);
  return v;
}

ConstraintRows constraint_rows(const Homography& H) {
  if (std::abs(H.H.determinant()) < 1e-14) {
    throw SingularHomography("homography is singular");
  }
  ConstraintRows rows;
  rows.off_diag = conic_row(H, 0, 1);
  rows.diag_diff = conic_row(H, 0, 0) - conic_row(H, 1, 1);
  rows.center_const = conic_row(H, 0, 2) + conic_row(H, 1, 2) + conic_row(H, 2, 2);
  rows.center_lin = conic_row(H, 0, 0);
  return rows;
}

namespace {

struct TargetFrame {
  double scale = 1.0;
  Eigen::Vector2d shift = Eigen::Vector2d::Zero();
};

TargetFrame target_frame(const PlanarTarget& target) {
  TargetFrame f;
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
  const int n = target.point_count();
  for (int i = 0; i < n; ++i) c += target.point(i);
  c /= n;
  double mean_dist = 0.0;
  for (int i = 0; i < n; ++i) mean_dist += (target.point(i) - c).norm();
  mean_dist /= n;
  f.shift = c;
  f.scale = mean_dist > 1e-12 ? std::sqrt(2.0) / mean_dist : 1.0;
  return f;
}

// pixel-side similarity shared by both views; without it the estimated conic
// K^-T K^-1 has a ~1e6 eigenvalue spread and noise breaks its definiteness
struct PixelFrame {
  double scale = 1.0;
  Eigen::Vector2d shift = Eigen::Vector2d::Zero();

  Eigen::Matrix3d matrix() const {
    Eigen::Matrix3d T;
    T << scale, 0.0, -scale * shift.x(), 0.0, scale, -scale * shift.y(), 0.0, 0.0, 1.0;
    return T;
  }
};

PixelFrame pixel_frame(const ViewObservations& a, const ViewObservations& b) {
  PixelFrame f;
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
  const int n = a.size() + b.size();
  for (const auto& p : a.pixels) c += p;
  for (const auto& p : b.pixels) c += p;
  c /= n;
  double mean_dist = 0.0;
  for (const auto& p : a.pixels) mean_dist += (p - c).norm();
  for (const auto& p : b.pixels) mean_dist += (p - c).norm();
  mean_dist /= n;
  f.shift = c;
  f.scale = mean_dist > 1e-12 ? std::sqrt(2.0) / mean_dist : 1.0;
  return f;
}

Homography view_homography(const ViewObservations& view, const PlanarTarget& target,
                           const TargetFrame& frame, const PixelFrame& pixels) {
  if (view.size() < 4) {
    throw TooFewPoints("view " + std::to_string(view.view_id) +
                       " has fewer than 4 correspondences");
  }
  std::vector<Correspondence> corr;
  corr.reserve(view.indices.size());
  for (std::size_t i = 0; i < view.indices.size(); ++i) {
    corr.emplace_back(frame.scale * (target.point(view.indices[i]) - frame.shift),
                      pixels.scale * (view.pixels[i] - pixels.shift));
  }
  return estimate_homography(corr);
}

Eigen::Matrix<double, 6, 6> hidden_variable_matrix(const ConstraintRows& a,
                                                   const ConstraintRows& b, double c) {
  Eigen::Matrix<double, 6, 6> C;
  C.row(0) = a.off_diag.transpose();
  C.row(1) = a.diag_diff.transpose();
  C.row(2) = (a.center_const + c * a.center_lin).transpose();
  C.row(3) = b.off_diag.transpose();
  C.row(4) = b.diag_diff.transpose();
  C.row(5) = (b.center_const + c * b.center_lin).transpose();
  return C;
}

}  // namespace

std::pair<CameraIntrinsics, SphericalExtrinsics> solve_minimal(
    const ViewObservations& view_a, const ViewObservations& view_b,
    const PlanarTarget& target, const MinimalOptions& options,
    MinimalDiagnostics* diagnostics) {
  const TargetFrame frame = target_frame(target);
  const PixelFrame pixels = pixel_frame(view_a, view_b);
  const Homography Ha = view_homography(view_a, target, frame, pixels);
  const Homography Hb = view_homography(view_b, target, frame, pixels);

  if ((Ha.H - Hb.H).norm() < 1e-9) {
    throw DegenerateConfiguration("the two views' homographies coincide");
  }

  const ConstraintRows ra = constraint_rows(Ha);
  const ConstraintRows rb = constraint_rows(Hb);

  // det(C(c)) sampled at {-1, 0, 1} for the diagnostic polynomial; the actual
  // root extraction below works in the nullspace of the c-free rows, which is
  // algebraically the same vanishing condition but does not difference
  // near-cancelling 6x6 determinants
  if (diagnostics) {
    const double d_neg = hidden_variable_matrix(ra, rb, -1.0).determinant();
    const double d_zero = hidden_variable_matrix(ra, rb, 0.0).determinant();
    const double d_pos = hidden_variable_matrix(ra, rb, 1.0).determinant();
    diagnostics->q0 = d_zero;
    diagnostics->q1 = 0.5 * (d_pos - d_neg);
    diagnostics->q2 = 0.5 * (d_pos + d_neg) - d_zero;
  }

  // the four c-free rows leave a two-dimensional candidate space for w
  Eigen::Matrix<double, 4, 6> Q;
  Q.row(0) = ra.off_diag.transpose();
  Q.row(1) = ra.diag_diff.transpose();
  Q.row(2) = rb.off_diag.transpose();
  Q.row(3) = rb.diag_diff.transpose();
  Eigen::JacobiSVD<Eigen::Matrix<double, 4, 6>> qsvd(Q, Eigen::ComputeFullV);
  const Vector6d n1 = qsvd.matrixV().col(4);
  const Vector6d n2 = qsvd.matrixV().col(5);

  // both views must agree on c = -(a^T w)/(b^T w); the cross condition is a
  // homogeneous quadratic in the nullspace coordinates (alpha, beta)
  const double A1 = ra.center_const.dot(n1), A1p = ra.center_const.dot(n2);
  const double B1 = ra.center_lin.dot(n1), B1p = ra.center_lin.dot(n2);
  const double A2 = rb.center_const.dot(n1), A2p = rb.center_const.dot(n2);
  const double B2 = rb.center_lin.dot(n1), B2p = rb.center_lin.dot(n2);
  const double qa = A1 * B2 - A2 * B1;
  const double qb = A1 * B2p + A1p * B2 - A2 * B1p - A2p * B1;
  const double qc = A1p * B2p - A2p * B1p;

  std::vector<std::pair<double, double>> dirs;  // (alpha, beta)
  const double scale_q = std::max({std::abs(qa), std::abs(qb), std::abs(qc)});
  if (scale_q == 0.0) {
    throw NoRealRoot("hidden-variable condition vanished identically");
  }
  if (std::abs(qa) < 1e-14 * scale_q) {
    // root at beta = 0 plus the linear one
    dirs.emplace_back(1.0, 0.0);
    if (std::abs(qb) > 1e-14 * scale_q) dirs.emplace_back(-qc / qb, 1.0);
  } else {
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc < 0.0) {
      const double real = -qb / (2.0 * qa);
      const double imag = std::sqrt(-disc) / (2.0 * std::abs(qa));
      if (imag > 1e-6 * std::abs(real)) {
        throw NoRealRoot("both hidden-variable roots are complex");
      }
      dirs.emplace_back(real, 1.0);
    } else {
      const double sq = std::sqrt(disc);
      const double tmp = -0.5 * (qb + (qb >= 0.0 ? sq : -sq));
      dirs.emplace_back(tmp / qa, 1.0);              // larger-magnitude branch
      if (tmp != 0.0) dirs.emplace_back(qc / tmp, 1.0);  // stable small branch
    }
  }

  // score every candidate by the residual of the full 10-constraint system
  struct Candidate {
    double c = 0.0;
    double score = std::numeric_limits<double>::infinity();
    Vector6d w;
    double x = 0.0, y = 0.0, t2 = 0.0;
    Eigen::Matrix3d K;
    bool ok = false;
  };

  auto evaluate_direction = [&](double alpha, double beta) {
    Candidate cand;
    Vector6d w = alpha * n1 + beta * n2;
    const double norm = w.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) return cand;
    w /= norm;
    if (w(5) < 0.0) w = -w;

    const double denom_a = ra.center_lin.dot(w);
    const double denom_b = rb.center_lin.dot(w);
    if (std::abs(denom_a) < 1e-300 || std::abs(denom_b) < 1e-300) return cand;
    cand.c = 0.5 * (-ra.center_const.dot(w) / denom_a -
                    rb.center_const.dot(w) / denom_b);

    // omega must factor as U^T U; try both signs of w
    Eigen::Matrix3d K;
    bool factored = false;
    for (int sign = 0; sign < 2 && !factored; ++sign) {
      const Vector6d ws = sign == 0 ? w : Vector6d(-w);
      Eigen::Matrix3d omega;
      omega << ws(0), ws(1), ws(2), ws(1), ws(3), ws(4), ws(2), ws(4), ws(5);
      Eigen::LLT<Eigen::Matrix3d> llt(omega);
      if (llt.info() != Eigen::Success) continue;
      const Eigen::Matrix3d U = llt.matrixL().transpose();
      Eigen::Matrix3d Kc = U.inverse();
      if (!(Kc(2, 2) > 0.0) || !std::isfinite(Kc(2, 2))) continue;
      K = Kc / Kc(2, 2);
      w = ws;
      factored = true;
    }
    if (!factored) return cand;

    // per-view back-substitution averaged over both views
    double x_sum = 0.0, y_sum = 0.0, t2_sum = 0.0;
    for (const Homography* H : {&Ha, &Hb}) {
      const double denom = conic_row(*H, 0, 0).dot(w);
      if (std::abs(denom) < 1e-300) return cand;
      x_sum += -conic_row(*H, 0, 2).dot(w) / denom;
      y_sum += -conic_row(*H, 1, 2).dot(w) / denom;
      t2_sum += conic_row(*H, 2, 2).dot(w) / denom;
    }
    cand.x = 0.5 * x_sum;
    cand.y = 0.5 * y_sum;
    cand.t2 = 0.5 * t2_sum;

    double score = 0.0;
    for (const Homography* H : {&Ha, &Hb}) {
      const double l2 = conic_row(*H, 0, 0).dot(w);
      score += std::pow(conic_row(*H, 0, 1).dot(w), 2);
      score += std::pow(conic_row(*H, 0, 0).dot(w) - conic_row(*H, 1, 1).dot(w), 2);
      score += std::pow(conic_row(*H, 0, 2).dot(w) + cand.x * l2, 2);
      score += std::pow(conic_row(*H, 1, 2).dot(w) + cand.y * l2, 2);
      score += std::pow(conic_row(*H, 2, 2).dot(w) - cand.t2 * l2, 2);
    }
    cand.score = score;
    cand.w = w;
    cand.K = K;
    cand.ok = true;
    return cand;
  };

  Candidate best;
  std::vector<double> roots;
  for (const auto& [alpha, beta] : dirs) {
    Candidate cand = evaluate_direction(alpha, beta);
    if (!cand.ok) continue;
    roots.push_back(cand.c);
    const bool better =
        cand.score < best.score - 1e-12 ||
        (std::abs(cand.score - best.score) <= 1e-12 && std::abs(cand.c) < std::abs(best.c));
    if (!best.ok || better) best = cand;
  }
  if (diagnostics) diagnostics->roots = roots;
  if (!best.ok) {
    throw NotPositiveDefinite("no hidden-variable root yields a factorable conic");
  }

  if (options.use_full_constraints) {
    // one refinement pass of w against all 10 rows with the extracted center
    Eigen::Matrix<double, 10, 6> full;
    int r = 0;
    for (const Homography* H : {&Ha, &Hb}) {
      full.row(r++) = conic_row(*H, 0, 1).transpose();
      full.row(r++) = (conic_row(*H, 0, 0) - conic_row(*H, 1, 1)).transpose();
      full.row(r++) =
          (conic_row(*H, 0, 2) + best.x * conic_row(*H, 0, 0)).transpose();
      full.row(r++) =
          (conic_row(*H, 1, 2) + best.y * conic_row(*H, 0, 0)).transpose();
      full.row(r++) =
          (conic_row(*H, 2, 2) - best.t2 * conic_row(*H, 0, 0)).transpose();
    }
    Eigen::JacobiSVD<Eigen::Matrix<double, 10, 6>> svd(full, Eigen::ComputeFullV);
    Vector6d w = svd.matrixV().col(5);
    if (w(5) < 0.0) w = -w;
    Eigen::Matrix3d omega;
    omega << w(0), w(1), w(2), w(1), w(3), w(4), w(2), w(4), w(5);
    Eigen::LLT<Eigen::Matrix3d> llt(omega);
    if (llt.info() == Eigen::Success) {
      const Eigen::Matrix3d U = llt.matrixL().transpose();
      Eigen::Matrix3d Kc = U.inverse();
      if (Kc(2, 2) > 0.0 && std::isfinite(Kc(2, 2))) {
        best.K = Kc / Kc(2, 2);
        best.w = w;
        double x_sum = 0.0, y_sum = 0.0, t2_sum = 0.0;
        for (const Homography* H : {&Ha, &Hb}) {
          const double denom = conic_row(*H, 0, 0).dot(w);
          x_sum += -conic_row(*H, 0, 2).dot(w) / denom;
          y_sum += -conic_row(*H, 1, 2).dot(w) / denom;
          t2_sum += conic_row(*H, 2, 2).dot(w) / denom;
        }
        best.x = 0.5 * x_sum;
        best.y = 0.5 * y_sum;
        best.t2 = 0.5 * t2_sum;
      }
    }
  }

  if (diagnostics) diagnostics->chosen_root = best.c;

  const double r2 = best.t2 - best.x * best.x - best.y * best.y;
  const double tol = 1e-9 * std::max(1.0, std::abs(best.t2));
  if (r2 < -tol) {
    throw NotConsistent("recovered center has negative squared radius");
  }
  const double r_norm = std::sqrt(std::max(r2, 0.0));

  // rotations come from the normalized quantities; K maps back to pixels
  const CameraIntrinsics K_norm = CameraIntrinsics::from_matrix(best.K);
  const CameraIntrinsics K =
      CameraIntrinsics::from_matrix(pixels.matrix().inverse() * best.K);
  SphericalExtrinsics ext;
  ext.x = best.x / frame.scale + frame.shift.x();
  ext.y = best.y / frame.scale + frame.shift.y();
  ext.r = r_norm / frame.scale;
  ext.rotations.push_back(rotation_from_homography(Ha, K_norm).first);
  ext.rotations.push_back(rotation_from_homography(Hb, K_norm).first);
  return {K, ext};
}

std::pair<CameraIntrinsics, SphericalExtrinsics> solve_minimal(
    const PlanarObservations& views, const PlanarTarget& target,
    const MinimalOptions& options, MinimalDiagnostics* diagnostics) {
  if (views.view_count() != 2) {
    throw TooFewViews("minimal solver requires exactly 2 views");
  }
  return solve_minimal(views.views[0], views.views[1], target, options, diagnostics);
}

}  // namespace spherecal
