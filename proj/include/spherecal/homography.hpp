#ifndef SPHERECAL_HOMOGRAPHY_HPP
#define SPHERECAL_HOMOGRAPHY_HPP

#include <utility>
#include <vector>

#include <Eigen/Core>

#include "spherecal/types.hpp"

namespace spherecal {

using Correspondence = std::pair<Eigen::Vector2d, Eigen::Vector2d>;  // (target mm, image px)

// Least-squares DLT with isotropic Hartley normalization on both point sets.
// Throws DegenerateConfiguration if the design matrix has numerical rank < 8
// (singular values below 1e-10 relative to the largest).
Homography estimate_homography(const std::vector<Correspondence>& correspondences);

// H = K [r1 r2 -R t_cp] in the fixed gauge; exact synthesis for simulation
// and tests.
Homography homography_from_pose(const CameraIntrinsics& K, const Eigen::Matrix3d& R,
                                const Eigen::Vector3d& t_cp);

// Recovers the view rotation from H with known K:
//   r1 = K^-1 h1 / lambda, r2 = K^-1 h2 / lambda, r3 = r1 x r2,
//   lambda = (|K^-1 h1| + |K^-1 h2|) / 2, then SVD re-orthogonalization.
// Returns the rotation and lambda. Throws SingularIntrinsics.
std::pair<Eigen::Matrix3d, double> rotation_from_homography(const Homography& H,
                                                            const CameraIntrinsics& K);

// Full pose decomposition with free translation, H = lambda K [r1 r2 t].
// Used for held-out pose estimation in evaluation.
std::pair<Eigen::Matrix3d, Eigen::Vector3d> pose_from_homography(
    const Homography& H, const CameraIntrinsics& K);

}  // namespace spherecal

#endif  // SPHERECAL_HOMOGRAPHY_HPP
