#include "spherecal/rotation.hpp"

#include <cmath>

#include <Eigen/Dense>

namespace spherecal {

Eigen::Matrix3d skew3(const Eigen::Vector3d& v) {
  Eigen::Matrix3d S;
  S << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return S;
}

Eigen::Matrix3d so3_exp(const Eigen::Vector3d& w) {
  const double theta2 = w.squaredNorm();
  const Eigen::Matrix3d S = skew3(w);
  if (theta2 < 1e-16) {
    // second-order Taylor keeps the result orthonormal to machine precision
    return Eigen::Matrix3d::Identity() + S + 0.5 * S * S;
  }
  const double theta = std::sqrt(theta2);
  return Eigen::Matrix3d::Identity() + (std::sin(theta) / theta) * S +
         ((1.0 - std::cos(theta)) / theta2) * S * S;
}

Eigen::Vector3d so3_log(const Eigen::Matrix3d& R) {
  const double tr = R.trace();
  const double cos_theta = std::clamp(0.5 * (tr - 1.0), -1.0, 1.0);
  const double theta = std::acos(cos_theta);
  Eigen::Vector3d v(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  if (theta < 1e-9) {
    return 0.5 * v;  // first order
  }
  if (theta > M_PI - 1e-6) {
    // near pi the vee of (R - R^T) loses the axis; recover it from R + I
    const Eigen::Matrix3d B = 0.5 * (R + Eigen::Matrix3d::Identity());
    Eigen::Vector3d axis = B.diagonal().cwiseMax(0.0).cwiseSqrt();
    int k;
    B.diagonal().maxCoeff(&k);
    if (axis[k] > 0) {
      for (int i = 0; i < 3; ++i)
        if (i != k) axis[i] = B(k, i) / axis[k];
    }
    axis.normalize();
    // fix sign with the off-diagonal antisymmetric part
    if (v.dot(axis) < 0) axis = -axis;
    return theta * axis;
  }
  return (theta / (2.0 * std::sin(theta))) * v;
}

Eigen::Matrix3d so3_right_jacobian(const Eigen::Vector3d& w) {
  const double theta2 = w.squaredNorm();
  const Eigen::Matrix3d S = skew3(w);
  if (theta2 < 1e-16) {
    return Eigen::Matrix3d::Identity() - 0.5 * S + (1.0 / 6.0) * S * S;
  }
  const double theta = std::sqrt(theta2);
  const double a = (1.0 - std::cos(theta)) / theta2;
  const double b = (theta - std::sin(theta)) / (theta2 * theta);
  return Eigen::Matrix3d::Identity() - a * S + b * S * S;
}

Eigen::Matrix3d project_to_so3(const Eigen::Matrix3d& M) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d R = svd.matrixU() * svd.matrixV().transpose();
  if (R.determinant() < 0) {
    Eigen::Matrix3d flip = Eigen::Matrix3d::Identity();
    flip(2, 2) = -1.0;
    R = svd.matrixU() * flip * svd.matrixV().transpose();
  }
  return R;
}

double rotation_geodesic(const Eigen::Matrix3d& Ra, const Eigen::Matrix3d& Rb) {
  // |Ra - Rb|_F = 2 sqrt(2) sin(theta/2); stays accurate near theta = 0
  // where the trace formula loses half the digits
  const double s = (Ra - Rb).norm() / (2.0 * std::sqrt(2.0));
  return 2.0 * std::asin(std::clamp(s, 0.0, 1.0));
}

bool is_rotation(const Eigen::Matrix3d& R, double tol) {
  const double ortho = (R.transpose() * R - Eigen::Matrix3d::Identity()).norm();
  return ortho <= tol && std::abs(R.determinant() - 1.0) <= tol;
}

Eigen::Matrix3d rotation_about_z(double a) {
  Eigen::Matrix3d R;
  R << std::cos(a), -std::sin(a), 0.0, std::sin(a), std::cos(a), 0.0, 0.0, 0.0, 1.0;
  return R;
}

Eigen::Matrix3d rotation_about_x(double a) {
  Eigen::Matrix3d R;
  R << 1.0, 0.0, 0.0, 0.0, std::cos(a), -std::sin(a), 0.0, std::sin(a), std::cos(a);
  return R;
}

}  // namespace spherecal
