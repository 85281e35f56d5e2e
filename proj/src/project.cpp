#include "spherecal/project.hpp"

#include <cmath>

#include "spherecal/error.hpp"
#include "spherecal/rotation.hpp"

namespace spherecal {

CameraIntrinsics CameraIntrinsics::from_matrix(const Eigen::Matrix3d& K) {
  const double s = K(2, 2);
  if (s == 0.0) throw SingularIntrinsics("K(2,2) is zero");
  CameraIntrinsics out;
  out.fx = K(0, 0) / s;
  out.skew = K(0, 1) / s;
  out.cx = K(0, 2) / s;
  out.fy = K(1, 1) / s;
  out.cy = K(1, 2) / s;
  return out;
}

Eigen::Vector2d distort(const RadialDistortion& dist, const Eigen::Vector2d& xn) {
  const double rho2 = xn.squaredNorm();
  const double f = 1.0 + rho2 * (dist.k1 + dist.k2 * rho2);
  return f * xn;
}

Eigen::Vector2d undistort(const RadialDistortion& dist, const Eigen::Vector2d& xd,
                          int max_iters) {
  Eigen::Vector2d xn = xd;
  for (int i = 0; i < max_iters; ++i) {
    const double rho2 = xn.squaredNorm();
    const double f = 1.0 + rho2 * (dist.k1 + dist.k2 * rho2);
    xn = xd / f;
  }
  return xn;
}

Eigen::Vector2d project(const CameraIntrinsics& K, const RadialDistortion& dist,
                        const Eigen::Matrix3d& R, const Eigen::Vector3d& t_cp,
                        const Eigen::Vector3d& P) {
  const Eigen::Vector3d Xc = R * (P - t_cp);
  if (Xc.z() <= 0.0) {
    throw NonPositiveDepth("point has non-positive camera-frame depth");
  }
  const Eigen::Vector2d xn(Xc.x() / Xc.z(), Xc.y() / Xc.z());
  const Eigen::Vector2d xd = distort(dist, xn);
  return {K.fx * xd.x() + K.skew * xd.y() + K.cx, K.fy * xd.y() + K.cy};
}

Eigen::Vector2d project_with_jacobian(const CameraIntrinsics& K,
                                      const RadialDistortion& dist,
                                      const Eigen::Vector3d& rotation_aa,
                                      const Eigen::Vector3d& t_cp,
                                      const Eigen::Vector3d& P,
                                      ProjectionJacobian& jac) {
  const Eigen::Matrix3d R = so3_exp(rotation_aa);
  const Eigen::Vector3d q = P - t_cp;
  const Eigen::Vector3d Xc = R * q;
  if (Xc.z() <= 0.0) {
    throw NonPositiveDepth("point has non-positive camera-frame depth");
  }
  const double iz = 1.0 / Xc.z();
  const Eigen::Vector2d xn(Xc.x() * iz, Xc.y() * iz);
  const double rho2 = xn.squaredNorm();
  const double f = 1.0 + rho2 * (dist.k1 + dist.k2 * rho2);
  const Eigen::Vector2d xd = f * xn;
  const Eigen::Vector2d uv(K.fx * xd.x() + K.skew * xd.y() + K.cx,
                           K.fy * xd.y() + K.cy);

  // pixel w.r.t. distorted normalized coords
  Eigen::Matrix2d duv_dxd;
  duv_dxd << K.fx, K.skew, 0.0, K.fy;

  // distorted w.r.t. normalized: xd = f(rho2) xn
  const double fp = dist.k1 + 2.0 * dist.k2 * rho2;  // df/drho2
  Eigen::Matrix2d dxd_dxn = f * Eigen::Matrix2d::Identity() +
                            2.0 * fp * xn * xn.transpose();

  // normalized w.r.t. camera point
  Eigen::Matrix<double, 2, 3> dxn_dXc;
  dxn_dXc << iz, 0.0, -xn.x() * iz, 0.0, iz, -xn.y() * iz;

  const Eigen::Matrix<double, 2, 3> duv_dXc = duv_dxd * dxd_dxn * dxn_dXc;

  // intrinsics
  jac.d_intrinsics.setZero();
  jac.d_intrinsics(0, 0) = xd.x();  // fx
  jac.d_intrinsics(1, 1) = xd.y();  // fy
  jac.d_intrinsics(0, 2) = 1.0;     // cx
  jac.d_intrinsics(1, 3) = 1.0;     // cy
  jac.d_intrinsics(0, 4) = xd.y();  // skew

  // distortion: dxd/dk1 = rho2 xn, dxd/dk2 = rho2^2 xn
  const Eigen::Vector2d dk1 = rho2 * xn;
  const Eigen::Vector2d dk2 = rho2 * rho2 * xn;
  jac.d_distortion.col(0) = duv_dxd * dk1;
  jac.d_distortion.col(1) = duv_dxd * dk2;

  // center parameters (x, y, r): t_cp = (x, y, -r), Xc = R (P - t_cp)
  Eigen::Matrix3d dXc_dcenter;
  dXc_dcenter.col(0) = -R.col(0);
  dXc_dcenter.col(1) = -R.col(1);
  dXc_dcenter.col(2) = R.col(2);
  jac.d_center = duv_dXc * dXc_dcenter;

  // rotation: d(exp(theta) q)/dtheta = -R [q]x Jr(theta)
  const Eigen::Matrix3d dXc_dtheta = -R * skew3(q) * so3_right_jacobian(rotation_aa);
  jac.d_rotation = duv_dXc * dXc_dtheta;

  return uv;
}

}  // namespace spherecal
