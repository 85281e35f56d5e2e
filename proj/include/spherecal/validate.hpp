#ifndef SPHERECAL_VALIDATE_HPP
#define SPHERECAL_VALIDATE_HPP

#include <string>
#include <vector>

#include <Eigen/Core>

#include "spherecal/types.hpp"

namespace spherecal {

struct SphereFit {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double radius = 0.0;
  double rms_residual_mm = 0.0;
  double mean_abs_residual_mm = 0.0;
  bool condition_warning = false;  // coplanar/clustered input, algebraic fit only
};

// Algebraic least-squares sphere fit followed by one Gauss-Newton geometric
// refinement pass. Throws TooFewPoints if fewer than 4 points are given.
SphereFit fit_sphere(const std::vector<Eigen::Vector3d>& positions);

// Pose of one view as the general extrinsics pair [R | t], X_c = R X_p + t.
struct ViewPose {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();
};

struct SphereFitReport {
  Eigen::Vector3d centroid_mm = Eigen::Vector3d::Zero();  // camera centers, target frame
  double mean_radius_mm = 0.0;
  Eigen::Vector3d std_mm = Eigen::Vector3d::Zero();
  Eigen::Vector3d std_percent_of_radius = Eigen::Vector3d::Zero();
  Eigen::Vector3d range_mm = Eigen::Vector3d::Zero();
  double mean_sphere_distance_error_mm = 0.0;  // camera-frame sphere fit
  double fitted_radius_mm = 0.0;
  Eigen::Vector2d axis_intersection_centroid = Eigen::Vector2d::Zero();
  Eigen::Vector2d axis_intersection_std = Eigen::Vector2d::Zero();
};

// Spherical-motion verification: camera centers in the target frame
// (-R^T t per pose), their spread statistics, a sphere fit of the motion
// center seen from the camera, and the spread of the per-pose viewing-axis
// intersections with the target plane. Throws TooFewPoints if fewer than
// 3 poses are given.
SphereFitReport sphere_motion_report(const std::vector<ViewPose>& poses);

struct DegeneracyReport {
  int rank = 0;
  double smallest_retained_sv = 0.0;  // relative to sigma_max
  std::string verdict;                // "ok" or "degenerate"
};

// Numerical rank of the closed-form design matrix built from the given
// homographies; verdict "degenerate" when rank < 11 with N >= 3 views.
DegeneracyReport degeneracy_score(const std::vector<Homography>& homographies);

}  // namespace spherecal

#endif  // SPHERECAL_VALIDATE_HPP
