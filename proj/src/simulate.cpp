#include "spherecal/simulate.hpp"

#include <cmath>

#include <Eigen/Geometry>

#include "spherecal/error.hpp"
#include "spherecal/project.hpp"
#include "spherecal/rotation.hpp"

namespace spherecal {

namespace {

bool all_points_visible(const SimConfig& cfg, const Eigen::Matrix3d& R,
                        const Eigen::Vector3d& t_cp) {
  const double m = cfg.visibility_margin_px;
  for (int i = 0; i < cfg.target.point_count(); ++i) {
    const Eigen::Vector2d P2 = cfg.target.point(i);
    const Eigen::Vector3d P(P2.x(), P2.y(), 0.0);
    const Eigen::Vector3d Xc = R * (P - t_cp);
    if (Xc.z() <= 0.0) return false;
    const Eigen::Vector2d uv =
        project(cfg.intrinsics, cfg.distortion, R, t_cp, P);
    if (uv.x() < m || uv.x() >= cfg.image_width - m || uv.y() < m ||
        uv.y() >= cfg.image_height - m) {
      return false;
    }
  }
  return true;
}

Eigen::Matrix3d tilt_and_roll(const SimConfig& cfg, Rng& rng) {
  const double half = cfg.cone_half_angle_deg * M_PI / 180.0;
  // direction uniform over the spherical cap about +z
  const double ct = rng.uniform(std::cos(half), 1.0);
  const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
  const double psi = rng.uniform(0.0, 2.0 * M_PI);
  const Eigen::Vector3d d(st * std::cos(psi), st * std::sin(psi), ct);
  const Eigen::Vector3d axis = Eigen::Vector3d::UnitZ().cross(d);
  Eigen::Matrix3d tilt = Eigen::Matrix3d::Identity();
  const double na = axis.norm();
  if (na > 1e-14) {
    const double ang = std::acos(std::clamp(ct, -1.0, 1.0));
    tilt = so3_exp(axis / na * ang);
  }
  const double roll = cfg.cone_half_angle_deg == 0.0 ? 0.0 : rng.uniform(0.0, 2.0 * M_PI);
  return tilt * rotation_about_z(roll);
}

}  // namespace

Eigen::Matrix3d sample_pose(const SimConfig& cfg, Rng& rng) {
  const Eigen::Vector3d t_cp = cfg.center();
  if (cfg.cone_half_angle_deg == 0.0) {
    const Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
    if (!all_points_visible(cfg, R, t_cp)) {
      throw SamplingExhausted("nominal pose does not keep the target visible");
    }
    return R;
  }
  for (int attempt = 0; attempt < cfg.max_pose_attempts; ++attempt) {
    const Eigen::Matrix3d R = tilt_and_roll(cfg, rng);
    if (all_points_visible(cfg, R, t_cp)) return R;
  }
  throw SamplingExhausted("no visible pose found within the attempt budget");
}

SimResult generate(const SimConfig& cfg) {
  Rng rng(cfg.seed);
  SimResult out;
  out.observations.image_width = cfg.image_width;
  out.observations.image_height = cfg.image_height;
  out.truth.intrinsics = cfg.intrinsics;
  out.truth.distortion = cfg.distortion;
  out.truth.extrinsics.x = cfg.center_x;
  out.truth.extrinsics.y = cfg.center_y;
  out.truth.extrinsics.r = cfg.radius;

  const int n_pts = cfg.target.point_count();
  for (int v = 0; v < cfg.num_views; ++v) {
    const Eigen::Matrix3d R = sample_pose(cfg, rng);
    Eigen::Vector3d t_cp = cfg.center();
    if (cfg.sphere_noise_mm > 0.0) {
      t_cp += cfg.sphere_noise_mm *
              Eigen::Vector3d(rng.gaussian(), rng.gaussian(), rng.gaussian());
    }

    ViewObservations view;
    view.view_id = v;
    view.indices.reserve(n_pts);
    view.pixels.reserve(n_pts);
    for (int i = 0; i < n_pts; ++i) {
      const Eigen::Vector2d P2 = cfg.target.point(i);
      const Eigen::Vector3d P(P2.x(), P2.y(), 0.0);
      const Eigen::Vector2d uv = project(cfg.intrinsics, cfg.distortion, R, t_cp, P);
      // a perturbed center can push points out of frame; those are simply
      // not observed
      if (uv.x() < 0.0 || uv.x() >= cfg.image_width || uv.y() < 0.0 ||
          uv.y() >= cfg.image_height) {
        continue;
      }
      Eigen::Vector2d emitted = uv;
      if (cfg.pixel_noise > 0.0) {
        // truncated at the image border so emitted points stay in-frame
        int tries = 0;
        do {
          emitted =
              uv + cfg.pixel_noise * Eigen::Vector2d(rng.gaussian(), rng.gaussian());
          if (++tries > 100) throw SamplingExhausted("pixel noise cannot stay in-frame");
        } while (emitted.x() < 0.0 || emitted.x() >= cfg.image_width ||
                 emitted.y() < 0.0 || emitted.y() >= cfg.image_height);
      }
      view.indices.push_back(i);
      view.pixels.push_back(emitted);
    }
    out.observations.views.push_back(std::move(view));
    out.truth.extrinsics.rotations.push_back(R);
  }
  return out;
}

}  // namespace spherecal
