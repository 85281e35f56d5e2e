#include "spherecal/validate.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "spherecal/closed_form.hpp"
#include "spherecal/error.hpp"

namespace spherecal {

SphereFit fit_sphere(const std::vector<Eigen::Vector3d>& positions) {
  const int n = static_cast<int>(positions.size());
  if (n < 4) throw TooFewPoints("sphere fit needs at least 4 points");

  // linearized fit: |p|^2 = 2 c . p + (r^2 - |c|^2)
  Eigen::MatrixXd A(n, 4);
  Eigen::VectorXd rhs(n);
  for (int i = 0; i < n; ++i) {
    A.row(i) << 2.0 * positions[i].transpose(), 1.0;
    rhs(i) = positions[i].squaredNorm();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SphereFit fit;
  const Eigen::VectorXd& sv = svd.singularValues();
  fit.condition_warning = sv(3) < 1e-10 * sv(0);

  const Eigen::Vector4d sol = svd.solve(rhs);
  fit.center = sol.head<3>();
  fit.radius = std::sqrt(std::max(sol(3) + fit.center.squaredNorm(), 0.0));

  if (!fit.condition_warning) {
    // one Gauss-Newton pass on the geometric residuals |p - c| - r
    Eigen::MatrixXd J(n, 4);
    Eigen::VectorXd res(n);
    for (int i = 0; i < n; ++i) {
      const Eigen::Vector3d d = positions[i] - fit.center;
      const double dist = d.norm();
      res(i) = dist - fit.radius;
      if (dist > 1e-12) {
        J.row(i) << (-d / dist).transpose(), -1.0;
      } else {
        J.row(i).setZero();
        J(i, 3) = -1.0;
      }
    }
    const Eigen::Vector4d step = (J.transpose() * J)
                                     .ldlt()
                                     .solve(-(J.transpose() * res));
    fit.center += step.head<3>();
    fit.radius += step(3);
  }

  double sq_sum = 0.0, abs_sum = 0.0;
  for (const auto& p : positions) {
    const double e = (p - fit.center).norm() - fit.radius;
    sq_sum += e * e;
    abs_sum += std::abs(e);
  }
  fit.rms_residual_mm = std::sqrt(sq_sum / n);
  fit.mean_abs_residual_mm = abs_sum / n;
  return fit;
}

SphereFitReport sphere_motion_report(const std::vector<ViewPose>& poses) {
  const int n = static_cast<int>(poses.size());
  if (n < 3) throw TooFewPoints("sphere motion report needs at least 3 poses");

  SphereFitReport report;

  // camera centers in the target frame
  std::vector<Eigen::Vector3d> centers(n);
  for (int i = 0; i < n; ++i) {
    centers[i] = -poses[i].R.transpose() * poses[i].t;
  }
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& c : centers) mean += c;
  mean /= n;
  report.centroid_mm = mean;
  report.mean_radius_mm = std::abs(mean.z());

  Eigen::Vector3d var = Eigen::Vector3d::Zero();
  Eigen::Vector3d lo = centers[0], hi = centers[0];
  for (const auto& c : centers) {
    var += (c - mean).cwiseAbs2();
    lo = lo.cwiseMin(c);
    hi = hi.cwiseMax(c);
  }
  report.std_mm = (var / n).cwiseSqrt();
  report.range_mm = hi - lo;
  if (report.mean_radius_mm > 0.0) {
    report.std_percent_of_radius = 100.0 * report.std_mm / report.mean_radius_mm;
  }

  // motion-center points seen from the camera lie on a sphere of radius r
  // about the optical center
  const Eigen::Vector3d motion_center(mean.x(), mean.y(), 0.0);
  std::vector<Eigen::Vector3d> from_camera(n);
  for (int i = 0; i < n; ++i) {
    from_camera[i] = poses[i].R * motion_center + poses[i].t;
  }
  if (n >= 4) {
    const SphereFit fit = fit_sphere(from_camera);
    report.fitted_radius_mm = fit.radius;
    report.mean_sphere_distance_error_mm = fit.mean_abs_residual_mm;
  } else {
    double mean_r = 0.0;
    for (const auto& p : from_camera) mean_r += p.norm();
    report.fitted_radius_mm = mean_r / n;
    double err = 0.0;
    for (const auto& p : from_camera) err += std::abs(p.norm() - report.fitted_radius_mm);
    report.mean_sphere_distance_error_mm = err / n;
  }

  // the viewing axis attached to each pose is the target-frame vertical
  // through the camera center; its plane intersection is the center's (x, y)
  Eigen::Vector2d imean = Eigen::Vector2d::Zero();
  for (const auto& c : centers) imean += c.head<2>();
  imean /= n;
  Eigen::Vector2d ivar = Eigen::Vector2d::Zero();
  for (const auto& c : centers) ivar += (c.head<2>() - imean).cwiseAbs2();
  report.axis_intersection_centroid = imean;
  report.axis_intersection_std = (ivar / n).cwiseSqrt();

  return report;
}

DegeneracyReport degeneracy_score(const std::vector<Homography>& homographies) {
  if (homographies.size() < 2) {
    throw TooFewViews("degeneracy score needs at least 2 homographies");
  }
  const LinearSystem sys = assemble_design_matrix(homographies, 0);
  const auto [rank, smallest] = numerical_rank(sys.D);
  DegeneracyReport report;
  report.rank = rank;
  report.smallest_retained_sv = smallest;
  report.verdict =
      (homographies.size() >= 3 && rank < 11) ? "degenerate" : "ok";
  return report;
}

}  // namespace spherecal
