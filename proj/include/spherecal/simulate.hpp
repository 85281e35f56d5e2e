#ifndef SPHERECAL_SIMULATE_HPP
#define SPHERECAL_SIMULATE_HPP

#include <cstdint>

#include <Eigen/Core>

#include "spherecal/rng.hpp"
#include "spherecal/types.hpp"

namespace spherecal {

// Synthetic spherical-motion configuration. Defaults reproduce the virtual
// camera used throughout the test suites.
struct SimConfig {
  CameraIntrinsics intrinsics{1000.0, 1000.0, 542.0, 478.0, 0.01};
  RadialDistortion distortion{0.1, -0.2};
  int image_width = 1080;
  int image_height = 960;
  PlanarTarget target{8, 11, 30.0};
  double center_x = 150.0;
  double center_y = 105.0;
  double radius = 700.0;
  int num_views = 15;
  double pixel_noise = 0.0;        // per-axis std, px
  double sphere_noise_mm = 0.0;    // per-view center perturbation std, mm
  std::uint64_t seed = 0;

  // pose sampling law
  double cone_half_angle_deg = 25.0;
  double visibility_margin_px = 5.0;
  int max_pose_attempts = 1000;

  Eigen::Vector3d center() const { return {center_x, center_y, -radius}; }
};

struct GroundTruth {
  CameraIntrinsics intrinsics;
  RadialDistortion distortion;
  SphericalExtrinsics extrinsics;
};

struct SimResult {
  PlanarObservations observations;
  GroundTruth truth;
};

// Samples a rotation within a cone of the given half-angle about the nominal
// viewing direction plus a uniform in-plane roll, rejecting poses that do not
// keep the whole target inside the image with the configured margin.
// Throws SamplingExhausted after max_pose_attempts rejections.
Eigen::Matrix3d sample_pose(const SimConfig& config, Rng& rng);

// Full data generation: pose sampling, optional per-view center perturbation,
// distorted projection, pixel noise. The returned ground truth carries the
// unperturbed center.
SimResult generate(const SimConfig& config);

}  // namespace spherecal

#endif  // SPHERECAL_SIMULATE_HPP
