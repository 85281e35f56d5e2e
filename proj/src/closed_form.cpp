#include "spherecal/closed_form.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include <Eigen/Dense>

#include "spherecal/error.hpp"
#include "spherecal/homography.hpp"

namespace spherecal {

namespace {

constexpr int kEntryPairs[6][2] = {{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}, {2, 2}};

// Row of (H^-1 W H^-T)_mn over w = (W11, W12, W13, W22, W23); the W33 term
// goes to the right-hand side.
Eigen::Matrix<double, 5, 1> v_row(const Eigen::Matrix3d& G, int m, int n) {
  Eigen::Matrix<double, 5, 1> v;
  v << G(m, 0) * G(n, 0),
      G(m, 0) * G(n, 1) + G(m, 1) * G(n, 0),
      G(m, 0) * G(n, 2) + G(m, 2) * G(n, 0),
      G(m, 1) * G(n, 1),
      G(m, 1) * G(n, 2) + G(m, 2) * G(n, 1);
  return v;
}

Eigen::VectorXd column_scales(const Eigen::MatrixXd& D) {
  Eigen::VectorXd s = D.cwiseAbs().colwise().maxCoeff();
  for (int i = 0; i < s.size(); ++i) {
    if (s(i) <= 0.0) s(i) = 1.0;
  }
  return s;
}

}  // namespace

std::pair<int, double> numerical_rank(const Eigen::MatrixXd& D, double tol_rel) {
  const Eigen::VectorXd s = column_scales(D);
  const Eigen::MatrixXd Deq = D * s.cwiseInverse().asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Deq);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return {0, 0.0};
  int rank = 0;
  double smallest = 0.0;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv(i) >= tol_rel * sv(0)) {
      ++rank;
      smallest = sv(i) / sv(0);
    }
  }
  return {rank, smallest};
}

double scale_ratio(const Homography& H_i, const Homography& H_base) {
  const double det_i = H_i.H.determinant();
  const double det_b = H_base.H.determinant();
  if (std::abs(det_i) < 1e-14 || std::abs(det_b) < 1e-14) {
    throw SingularHomography("determinant below tolerance in scale_ratio");
  }
  const double arg = det_i / det_b;
  if (arg <= 0.0) {
    throw GaugeViolation("negative determinant ratio; homography gauge violated");
  }
  return std::cbrt(arg);
}

LinearSystem assemble_design_matrix(const std::vector<Homography>& hs, int base) {
  const int n = static_cast<int>(hs.size());
  LinearSystem sys;
  sys.base_index = base;
  sys.D.resize(6 * n, 11);
  sys.b.resize(6 * n);
  sys.scale_ratios.resize(n);

  for (int i = 0; i < n; ++i) {
    const double lam = scale_ratio(hs[i], hs[base]);
    sys.scale_ratios[i] = lam;
    const double inv_lam2 = 1.0 / (lam * lam);
    const Eigen::Matrix3d G = hs[i].H.inverse();
    for (int k = 0; k < 6; ++k) {
      const int m = kEntryPairs[k][0];
      const int nn = kEntryPairs[k][1];
      const int row = 6 * i + k;
      sys.D.row(row).setZero();
      sys.D.block<1, 5>(row, 0) = v_row(G, m, nn).transpose();
      sys.D(row, 5 + k) = -inv_lam2;
      sys.b(row) = -G(m, 2) * G(nn, 2);
    }
  }
  return sys;
}

LinearSystem build_linear_system(const std::vector<Homography>& hs, int base) {
  if (static_cast<int>(hs.size()) < 3) {
    throw TooFewViews("closed-form system needs at least 3 views");
  }
  return assemble_design_matrix(hs, base);
}

std::vector<Homography> estimate_view_homographies(const PlanarObservations& views,
                                                   const PlanarTarget& target,
                                                   bool parallel) {
  const int n = views.view_count();
  std::vector<Homography> hs(n);
  std::vector<std::exception_ptr> errors(n);
  auto estimate_one = [&](int v) noexcept {
    try {
      const ViewObservations& view = views.views[v];
      std::vector<Correspondence> corr;
      corr.reserve(view.indices.size());
      for (std::size_t i = 0; i < view.indices.size(); ++i) {
        corr.emplace_back(target.point(view.indices[i]), view.pixels[i]);
      }
      hs[v] = estimate_homography(corr);
    } catch (...) {
      errors[v] = std::current_exception();
    }
  };
  if (parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int v = 0; v < n; ++v) estimate_one(v);
  } else {
    for (int v = 0; v < n; ++v) estimate_one(v);
  }
  // first failing view wins regardless of scheduling
  for (int v = 0; v < n; ++v) {
    if (errors[v]) std::rethrow_exception(errors[v]);
  }
  return hs;
}

namespace {

// sqrt with a clamp for tiny negative radicands: values in [-tol*scale, 0)
// clamp to 0, more negative raises NotPositiveDefinite.
double guarded_sqrt(double radicand, double scale, bool& clamped, const char* what) {
  const double tol = 1e-9 * std::max(1.0, std::abs(scale));
  if (radicand < -tol) {
    throw NotPositiveDefinite(std::string("negative radicand extracting ") + what);
  }
  if (radicand < 0.0) {
    clamped = true;
    return 0.0;
  }
  return std::sqrt(radicand);
}

struct TargetFrame {
  double scale = 1.0;
  Eigen::Vector2d shift = Eigen::Vector2d::Zero();

  Eigen::Vector2d normalize(const Eigen::Vector2d& p) const {
    return scale * (p - shift);
  }
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

}  // namespace

std::pair<CameraIntrinsics, SphericalExtrinsics> solve_closed_form(
    const PlanarObservations& views, const PlanarTarget& target,
    ClosedFormDiagnostics* diagnostics, bool parallel) {
  const int n = views.view_count();
  if (n < 3) throw TooFewViews("closed-form solver needs at least 3 views");
  for (const auto& view : views.views) {
    if (view.size() < 4) {
      throw TooFewPoints("view " + std::to_string(view.view_id) +
                         " has fewer than 4 correspondences");
    }
  }

  // homographies in a normalized target frame so the mixed-unit columns of
  // the linear system stay comparable
  const TargetFrame frame = target_frame(target);
  std::vector<Homography> hs(n);
  std::vector<std::exception_ptr> errors(n);
  auto estimate_one = [&](int v) noexcept {
    try {
      const ViewObservations& view = views.views[v];
      std::vector<Correspondence> corr;
      corr.reserve(view.indices.size());
      for (std::size_t i = 0; i < view.indices.size(); ++i) {
        corr.emplace_back(frame.normalize(target.point(view.indices[i])),
                          view.pixels[i]);
      }
      hs[v] = estimate_homography(corr);
    } catch (...) {
      errors[v] = std::current_exception();
    }
  };
  if (parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int v = 0; v < n; ++v) estimate_one(v);
  } else {
    for (int v = 0; v < n; ++v) estimate_one(v);
  }
  for (int v = 0; v < n; ++v) {
    if (errors[v]) std::rethrow_exception(errors[v]);
  }

  // base view: most correspondences, ties to the lowest index
  int base = 0;
  for (int v = 1; v < n; ++v) {
    if (views.views[v].size() > views.views[base].size()) base = v;
  }

  LinearSystem sys = build_linear_system(hs, base);
  for (int v = 0; v < n; ++v) hs[v].lambda_to_base = sys.scale_ratios[v];

  const auto [rank, smallest_sv] = numerical_rank(sys.D);
  if (diagnostics) {
    diagnostics->rank = rank;
    diagnostics->smallest_retained_sv = smallest_sv;
    diagnostics->base_index = base;
  }
  if (rank < 11) {
    throw DegenerateConfiguration("design matrix rank " + std::to_string(rank) +
                                  " < 11; motion does not constrain the solution");
  }

  // equilibrated least-squares solve
  const Eigen::VectorXd scales =
      sys.D.cwiseAbs().colwise().maxCoeff().cwiseMax(1e-300);
  const Eigen::MatrixXd Deq = sys.D * scales.cwiseInverse().asDiagonal();
  const Eigen::VectorXd y = Deq.colPivHouseholderQr().solve(sys.b);
  const Eigen::VectorXd x = y.cwiseQuotient(scales);

  const double W11 = x(0), W12 = x(1), W13 = x(2), W22 = x(3), W23 = x(4);
  Eigen::Matrix3d A;
  A << x(5), x(6), x(7), x(6), x(8), x(9), x(7), x(9), x(10);

  if (diagnostics) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(A);
    diagnostics->min_eigenvalue_A = eig.eigenvalues().minCoeff();
  }

  bool clamped = false;
  CameraIntrinsics K;
  K.cx = W13;
  K.cy = W23;
  K.fy = guarded_sqrt(W22 - K.cy * K.cy, W22, clamped, "fy");
  if (K.fy <= 0.0) throw NotPositiveDefinite("fy collapsed to zero");
  K.skew = (W12 - K.cx * K.cy) / K.fy;
  K.fx = guarded_sqrt(W11 - K.cx * K.cx - K.skew * K.skew, W11, clamped, "fx");
  if (K.fx <= 0.0) throw NotPositiveDefinite("fx collapsed to zero");

  if (std::abs(A(2, 2)) < 1e-300) throw NotPositiveDefinite("A33 is zero");
  const double xs = A(0, 2) / A(2, 2);
  const double ys = A(1, 2) / A(2, 2);
  const double rs =
      guarded_sqrt(A(0, 0) / A(2, 2) - xs * xs, A(0, 0) / A(2, 2), clamped, "r");
  if (diagnostics) diagnostics->clamped_radicand = clamped;

  SphericalExtrinsics ext;
  ext.x = xs / frame.scale + frame.shift.x();
  ext.y = ys / frame.scale + frame.shift.y();
  ext.r = rs / frame.scale;

  ext.rotations.reserve(n);
  for (int v = 0; v < n; ++v) {
    ext.rotations.push_back(rotation_from_homography(hs[v], K).first);
  }
  return {K, ext};
}

}  // namespace spherecal
