#ifndef SPHERECAL_TYPES_HPP
#define SPHERECAL_TYPES_HPP

#include <optional>
#include <vector>

#include <Eigen/Core>

namespace spherecal {

// Pinhole intrinsics: focal lengths, principal point and skew, all in pixels
// except the dimensionless skew.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  double skew = 0.0;

  Eigen::Matrix3d matrix() const {
    Eigen::Matrix3d K;
    K << fx, skew, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
    return K;
  }

  // Reads the upper-triangular entries of K, normalizing so K(2,2) = 1.
  static CameraIntrinsics from_matrix(const Eigen::Matrix3d& K);

  bool valid() const { return fx > 0.0 && fy > 0.0; }
};

struct RadialDistortion {
  double k1 = 0.0;
  double k2 = 0.0;
  bool is_zero() const { return k1 == 0.0 && k2 == 0.0; }
};

// Planar grid target on Z = 0, row-major point indexing.
struct PlanarTarget {
  int rows = 8;
  int cols = 11;
  double spacing_mm = 30.0;

  int point_count() const { return rows * cols; }

  Eigen::Vector2d point(int index) const {
    const int row = index / cols;
    const int col = index % cols;
    return {col * spacing_mm, row * spacing_mm};
  }

  std::vector<Eigen::Vector2d> points() const {
    std::vector<Eigen::Vector2d> ps(point_count());
    for (int i = 0; i < point_count(); ++i) ps[i] = point(i);
    return ps;
  }
};

// Image points of one view matched to target point indices.
struct ViewObservations {
  int view_id = 0;
  std::vector<int> indices;
  std::vector<Eigen::Vector2d> pixels;

  int size() const { return static_cast<int>(indices.size()); }
};

struct PlanarObservations {
  int image_width = 1080;
  int image_height = 960;
  std::vector<ViewObservations> views;

  int view_count() const { return static_cast<int>(views.size()); }
};

// Fixed camera center t_cp = (x, y, -r) in the target frame plus one
// rotation per view. r > 0 is the sphere radius.
struct SphericalExtrinsics {
  double x = 0.0;
  double y = 0.0;
  double r = 1.0;
  std::vector<Eigen::Matrix3d> rotations;

  Eigen::Vector3d center() const { return {x, y, -r}; }
};

// 3x3 projective map stored in a fixed gauge: unit Frobenius norm and
// positive (3,3) entry, so equality and scale ratios are well defined.
struct Homography {
  Eigen::Matrix3d H = Eigen::Matrix3d::Identity();
  std::optional<double> lambda_to_base;  // scale ratio bookkeeping

  // Applies the gauge. Throws SingularHomography if M is (near) singular,
  // GaugeViolation if the (3,3) entry vanishes and the sign cannot be fixed.
  static Homography from_matrix(const Eigen::Matrix3d& M);

  const Eigen::Matrix3d& matrix() const { return H; }
};

struct CalibrationResult {
  CameraIntrinsics intrinsics;
  RadialDistortion distortion;
  SphericalExtrinsics extrinsics;
  double rms_px = 0.0;
  std::vector<double> per_view_rms;
};

}  // namespace spherecal

#endif  // SPHERECAL_TYPES_HPP
