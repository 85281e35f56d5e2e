#include "spherecal/homography.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "spherecal/error.hpp"
#include "spherecal/rotation.hpp"

namespace spherecal {

Homography Homography::from_matrix(const Eigen::Matrix3d& M) {
  const double fro = M.norm();
  if (!(fro > 0.0) || !std::isfinite(fro)) {
    throw SingularHomography("homography matrix has invalid norm");
  }
  Eigen::Matrix3d H = M / fro;
  if (std::abs(H(2, 2)) < 1e-14) {
    throw GaugeViolation("homography (3,3) entry vanishes, gauge sign undefined");
  }
  if (H(2, 2) < 0.0) H = -H;
  if (std::abs(H.determinant()) < 1e-14) {
    throw SingularHomography("homography is numerically singular");
  }
  Homography out;
  out.H = H;
  return out;
}

namespace {

// Similarity that moves the centroid to the origin and the mean distance
// to sqrt(2).
Eigen::Matrix3d normalizing_similarity(const std::vector<Eigen::Vector2d>& pts) {
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += (p - centroid).norm();
  mean_dist /= static_cast<double>(pts.size());
  const double s = mean_dist > 1e-12 ? std::sqrt(2.0) / mean_dist : 1.0;
  Eigen::Matrix3d T;
  T << s, 0.0, -s * centroid.x(), 0.0, s, -s * centroid.y(), 0.0, 0.0, 1.0;
  return T;
}

}  // namespace

Homography estimate_homography(const std::vector<Correspondence>& correspondences) {
  const int n = static_cast<int>(correspondences.size());
  std::vector<Eigen::Vector2d> src(n), dst(n);
  for (int i = 0; i < n; ++i) {
    src[i] = correspondences[i].first;
    dst[i] = correspondences[i].second;
  }
  if (n < 1) throw DegenerateConfiguration("no correspondences");

  const Eigen::Matrix3d Ts = normalizing_similarity(src);
  const Eigen::Matrix3d Td = normalizing_similarity(dst);

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * n, 9);
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d ps = Ts * src[i].homogeneous();
    const Eigen::Vector3d pd = Td * dst[i].homogeneous();
    const double X = ps.x(), Y = ps.y();
    const double u = pd.x(), v = pd.y();
    A.row(2 * i) << X, Y, 1.0, 0.0, 0.0, 0.0, -u * X, -u * Y, -u;
    A.row(2 * i + 1) << 0.0, 0.0, 0.0, X, Y, 1.0, -v * X, -v * Y, -v;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const int rank_needed = 8;
  if (sv.size() < rank_needed || sv(rank_needed - 1) < 1e-10 * sv(0)) {
    throw DegenerateConfiguration("homography design matrix rank < 8");
  }

  const Eigen::VectorXd h = svd.matrixV().col(svd.matrixV().cols() - 1);
  Eigen::Matrix3d Hn;
  Hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  return Homography::from_matrix(Td.inverse() * Hn * Ts);
}

Homography homography_from_pose(const CameraIntrinsics& K, const Eigen::Matrix3d& R,
                                const Eigen::Vector3d& t_cp) {
  Eigen::Matrix3d M;
  M.col(0) = R.col(0);
  M.col(1) = R.col(1);
  M.col(2) = -R * t_cp;
  return Homography::from_matrix(K.matrix() * M);
}

std::pair<Eigen::Matrix3d, double> rotation_from_homography(const Homography& H,
                                                            const CameraIntrinsics& K) {
  const Eigen::Matrix3d Km = K.matrix();
  if (std::abs(Km.determinant()) < 1e-14) {
    throw SingularIntrinsics("intrinsic matrix is not invertible");
  }
  const Eigen::Matrix3d Kinv = Km.inverse();
  const Eigen::Vector3d m1 = Kinv * H.H.col(0);
  const Eigen::Vector3d m2 = Kinv * H.H.col(1);
  const double lambda = 0.5 * (m1.norm() + m2.norm());
  Eigen::Matrix3d M;
  M.col(0) = m1 / lambda;
  M.col(1) = m2 / lambda;
  M.col(2) = M.col(0).cross(M.col(1));
  return {project_to_so3(M), lambda};
}

std::pair<Eigen::Matrix3d, Eigen::Vector3d> pose_from_homography(
    const Homography& H, const CameraIntrinsics& K) {
  const Eigen::Matrix3d Km = K.matrix();
  if (std::abs(Km.determinant()) < 1e-14) {
    throw SingularIntrinsics("intrinsic matrix is not invertible");
  }
  const Eigen::Matrix3d M = Km.inverse() * H.H;
  const double lambda = 0.5 * (M.col(0).norm() + M.col(1).norm());
  Eigen::Matrix3d Rcols;
  Rcols.col(0) = M.col(0) / lambda;
  Rcols.col(1) = M.col(1) / lambda;
  Rcols.col(2) = Rcols.col(0).cross(Rcols.col(1));
  const Eigen::Matrix3d R = project_to_so3(Rcols);
  const Eigen::Vector3d t = M.col(2) / lambda;
  return {R, t};
}

}  // namespace spherecal
