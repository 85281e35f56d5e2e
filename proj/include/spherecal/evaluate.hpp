#ifndef SPHERECAL_EVALUATE_HPP
#define SPHERECAL_EVALUATE_HPP

#include <utility>
#include <vector>

#include "spherecal/types.hpp"

namespace spherecal {

// Per-component reprojection RMS of the spherical model over all views,
// plus the per-view breakdown.
std::pair<double, std::vector<double>> reprojection_rms(
    const CameraIntrinsics& K, const RadialDistortion& dist,
    const SphericalExtrinsics& ext, const PlanarObservations& obs,
    const PlanarTarget& target);

struct EvalOptions {
  bool quarter_points = true;  // every 4th point estimates the pose
};

struct ViewEvaluation {
  int view_id = 0;
  int pose_points = 0;
  int eval_points = 0;
  double rms_px = 0.0;  // per-component RMS over the held-out points
};

struct EvalReport {
  std::vector<ViewEvaluation> per_view;
  double mean_rms_px = 0.0;
  double median_rms_px = 0.0;
};

// Held-out accuracy protocol: per view, a pose is estimated from a point
// subset by homography decomposition with the known intrinsics (free
// translation), and the remaining points are reprojected to measure the
// error. Distorted observations are undistorted with the given coefficients
// before the homography fit.
EvalReport evaluate_held_out(const CameraIntrinsics& K, const RadialDistortion& dist,
                             const PlanarObservations& obs, const PlanarTarget& target,
                             const EvalOptions& options = {});

}  // namespace spherecal

#endif  // SPHERECAL_EVALUATE_HPP
