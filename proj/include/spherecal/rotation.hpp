#ifndef SPHERECAL_ROTATION_HPP
#define SPHERECAL_ROTATION_HPP

#include <Eigen/Core>

namespace spherecal {

// exp: axis-angle 3-vector -> SO(3) via Rodrigues.
Eigen::Matrix3d so3_exp(const Eigen::Vector3d& axis_angle);

// log: SO(3) -> axis-angle 3-vector, angle in [0, pi].
Eigen::Vector3d so3_log(const Eigen::Matrix3d& R);

// Right Jacobian of the exponential map: exp(theta + d) ~ exp(theta) exp(Jr(theta) d).
Eigen::Matrix3d so3_right_jacobian(const Eigen::Vector3d& axis_angle);

// Nearest rotation in Frobenius norm (SVD projection with det sign fix).
Eigen::Matrix3d project_to_so3(const Eigen::Matrix3d& M);

// Angle of the relative rotation between two rotations, radians.
double rotation_geodesic(const Eigen::Matrix3d& Ra, const Eigen::Matrix3d& Rb);

// R^T R = I and det R = +1 within tol (Frobenius norm).
bool is_rotation(const Eigen::Matrix3d& R, double tol = 1e-12);

Eigen::Matrix3d skew3(const Eigen::Vector3d& v);

Eigen::Matrix3d rotation_about_z(double angle_rad);
Eigen::Matrix3d rotation_about_x(double angle_rad);

}  // namespace spherecal

#endif  // SPHERECAL_ROTATION_HPP
