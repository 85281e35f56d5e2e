#ifndef SPHERECAL_PROJECT_HPP
#define SPHERECAL_PROJECT_HPP

#include <Eigen/Core>

#include "spherecal/types.hpp"

namespace spherecal {

// Projects a target-frame point through the spherical-motion pose
// [R | -R t_cp]: X_c = R (P - t_cp), normalization, two-term radial
// distortion in normalized coordinates, then K.
// Throws NonPositiveDepth if the camera-frame depth is <= 0.
Eigen::Vector2d project(const CameraIntrinsics& K, const RadialDistortion& dist,
                        const Eigen::Matrix3d& R, const Eigen::Vector3d& t_cp,
                        const Eigen::Vector3d& P);

// Radial distortion applied to normalized coordinates.
Eigen::Vector2d distort(const RadialDistortion& dist, const Eigen::Vector2d& xn);

// Inverts the radial distortion by fixed-point iteration.
Eigen::Vector2d undistort(const RadialDistortion& dist, const Eigen::Vector2d& xd,
                          int max_iters = 20);

// Derivatives of the projected pixel, 2 rows each:
//   d_intrinsics: [fx, fy, cx, cy, skew]
//   d_distortion: [k1, k2]
//   d_center:     [x, y, r]  for t_cp = (x, y, -r)
//   d_rotation:   axis-angle parameters, R = exp([theta]x), via the right Jacobian
struct ProjectionJacobian {
  Eigen::Matrix<double, 2, 5> d_intrinsics;
  Eigen::Matrix<double, 2, 2> d_distortion;
  Eigen::Matrix<double, 2, 3> d_center;
  Eigen::Matrix<double, 2, 3> d_rotation;
};

// Projection and its analytic Jacobian. The rotation is passed as the
// axis-angle vector it is parameterized by in optimization.
Eigen::Vector2d project_with_jacobian(const CameraIntrinsics& K,
                                      const RadialDistortion& dist,
                                      const Eigen::Vector3d& rotation_aa,
                                      const Eigen::Vector3d& t_cp,
                                      const Eigen::Vector3d& P,
                                      ProjectionJacobian& jac);

}  // namespace spherecal

#endif  // SPHERECAL_PROJECT_HPP
