#include "spherecal/evaluate.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "spherecal/error.hpp"
#include "spherecal/homography.hpp"
#include "spherecal/project.hpp"

namespace spherecal {

std::pair<double, std::vector<double>> reprojection_rms(
    const CameraIntrinsics& K, const RadialDistortion& dist,
    const SphericalExtrinsics& ext, const PlanarObservations& obs,
    const PlanarTarget& target) {
  if (ext.rotations.size() != obs.views.size()) {
    throw InvalidInitialization("rotation count does not match view count");
  }
  std::vector<double> per_view(obs.views.size(), 0.0);
  double total_sq = 0.0;
  int total_comps = 0;
  for (std::size_t v = 0; v < obs.views.size(); ++v) {
    const ViewObservations& view = obs.views[v];
    double sq = 0.0;
    for (int j = 0; j < view.size(); ++j) {
      const Eigen::Vector2d P2 = target.point(view.indices[j]);
      const Eigen::Vector2d uv =
          project(K, dist, ext.rotations[v], ext.center(), {P2.x(), P2.y(), 0.0});
      sq += (uv - view.pixels[j]).squaredNorm();
    }
    const int comps = 2 * view.size();
    per_view[v] = comps > 0 ? std::sqrt(sq / comps) : 0.0;
    total_sq += sq;
    total_comps += comps;
  }
  const double total = total_comps > 0 ? std::sqrt(total_sq / total_comps) : 0.0;
  return {total, per_view};
}

namespace {

// free-translation reprojection
Eigen::Vector2d project_pose(const CameraIntrinsics& K, const RadialDistortion& dist,
                             const Eigen::Matrix3d& R, const Eigen::Vector3d& t,
                             const Eigen::Vector2d& P2) {
  const Eigen::Vector3d Xc = R * Eigen::Vector3d(P2.x(), P2.y(), 0.0) + t;
  if (Xc.z() <= 0.0) throw NonPositiveDepth("evaluation point behind the camera");
  const Eigen::Vector2d xn(Xc.x() / Xc.z(), Xc.y() / Xc.z());
  const Eigen::Vector2d xd = distort(dist, xn);
  return {K.fx * xd.x() + K.skew * xd.y() + K.cx, K.fy * xd.y() + K.cy};
}

}  // namespace

EvalReport evaluate_held_out(const CameraIntrinsics& K, const RadialDistortion& dist,
                             const PlanarObservations& obs, const PlanarTarget& target,
                             const EvalOptions& options) {
  EvalReport report;
  const Eigen::Matrix3d Km = K.matrix();
  const Eigen::Matrix3d Kinv = Km.inverse();

  for (const ViewObservations& view : obs.views) {
    // pose subset: every 4th point, or all of them
    std::vector<int> pose_set, eval_set;
    for (int j = 0; j < view.size(); ++j) {
      if (!options.quarter_points || j % 4 == 0) pose_set.push_back(j);
      if (options.quarter_points && j % 4 != 0) eval_set.push_back(j);
    }
    if (!options.quarter_points) eval_set = pose_set;
    if (static_cast<int>(pose_set.size()) < 4) {
      throw TooFewPoints("view " + std::to_string(view.view_id) +
                         ": pose subset smaller than 4 points");
    }

    // undistort pixels, then fit the homography in pixel units
    std::vector<Correspondence> corr;
    corr.reserve(pose_set.size());
    for (int j : pose_set) {
      const Eigen::Vector3d hom = Kinv * view.pixels[j].homogeneous();
      const Eigen::Vector2d xn = undistort(dist, hom.head<2>() / hom.z());
      const Eigen::Vector3d pix = Km * xn.homogeneous();
      corr.emplace_back(target.point(view.indices[j]), pix.head<2>() / pix.z());
    }
    const Homography H = estimate_homography(corr);
    const auto [R, t] = pose_from_homography(H, K);

    double sq = 0.0;
    for (int j : eval_set) {
      const Eigen::Vector2d uv =
          project_pose(K, dist, R, t, target.point(view.indices[j]));
      sq += (uv - view.pixels[j]).squaredNorm();
    }
    ViewEvaluation ve;
    ve.view_id = view.view_id;
    ve.pose_points = static_cast<int>(pose_set.size());
    ve.eval_points = static_cast<int>(eval_set.size());
    ve.rms_px = eval_set.empty() ? 0.0 : std::sqrt(sq / (2.0 * eval_set.size()));
    report.per_view.push_back(ve);
  }

  if (!report.per_view.empty()) {
    std::vector<double> rms;
    rms.reserve(report.per_view.size());
    double sum = 0.0;
    for (const auto& ve : report.per_view) {
      rms.push_back(ve.rms_px);
      sum += ve.rms_px;
    }
    report.mean_rms_px = sum / rms.size();
    std::sort(rms.begin(), rms.end());
    const std::size_t mid = rms.size() / 2;
    report.median_rms_px =
        rms.size() % 2 == 1 ? rms[mid] : 0.5 * (rms[mid - 1] + rms[mid]);
  }
  return report;
}

}  // namespace spherecal
