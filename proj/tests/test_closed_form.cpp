#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include "spherecal/closed_form.hpp"
#include "spherecal/error.hpp"
#include "spherecal/homography.hpp"
#include "spherecal/project.hpp"
#include "spherecal/rotation.hpp"
#include "spherecal/simulate.hpp"
#include "test_support.hpp"

using namespace spherecal;

namespace {

std::vector<Homography> synthetic_homographies(const CameraIntrinsics& K,
                                               const Eigen::Vector3d& center, int n,
                                               std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Homography> hs;
  hs.reserve(n);
  for (int i = 0; i < n; ++i) {
    hs.push_back(homography_from_pose(K, testsup::random_pose(rng), center));
  }
  return hs;
}

// ground-truth unknown vector [w; a] for homographies synthesized in the
// gauge (unit Frobenius, positive (3,3)); lambda_base is 1 / |K [r1 r2 t]|_F
Eigen::VectorXd ground_truth_solution(const CameraIntrinsics& K,
                                      const Eigen::Vector3d& center,
                                      const Eigen::Matrix3d& base_rotation) {
  const Eigen::Matrix3d Km = K.matrix();
  Eigen::Matrix3d M;
  M << base_rotation.col(0), base_rotation.col(1), -base_rotation * center;
  const double lambda1 = 1.0 / (Km * M).norm();

  const Eigen::Matrix3d W = Km * Km.transpose();
  const double x = center.x(), y = center.y(), r = -center.z();
  Eigen::Matrix3d G;
  G << r * r + x * x, x * y, x, x * y, r * r + y * y, y, x, y, 1.0;
  const Eigen::Matrix3d A = G / (lambda1 * r) / (lambda1 * r);

  Eigen::VectorXd sol(11);
  sol << W(0, 0), W(0, 1), W(0, 2), W(1, 1), W(1, 2), A(0, 0), A(0, 1), A(0, 2),
      A(1, 1), A(1, 2), A(2, 2);
  return sol;
}

}  // namespace

TEST_CASE("scale ratio basics") {
  const CameraIntrinsics K = testsup::reference_intrinsics();
  const auto hs = synthetic_homographies(K, testsup::reference_center(), 2, 31);

  SUBCASE("same view gives one") {
    CHECK(scale_ratio(hs[0], hs[0]) == doctest::Approx(1.0).epsilon(1e-15));
  }

  SUBCASE("matches the synthesis scales") {
    // lambda_i of a gauged homography is 1 / |K M_i|_F
    Rng rng(32);
    const Eigen::Matrix3d Ra = testsup::random_pose(rng);
    const Eigen::Matrix3d Rb = testsup::random_pose(rng);
    auto lambda_of = [&](const Eigen::Matrix3d& R) {
      Eigen::Matrix3d M;
      M << R.col(0), R.col(1), -R * testsup::reference_center();
      return 1.0 / (K.matrix() * M).norm();
    };
    const Homography Ha = homography_from_pose(K, Ra, testsup::reference_center());
    const Homography Hb = homography_from_pose(K, Rb, testsup::reference_center());
    const double expected = lambda_of(Ra) / lambda_of(Rb);
    CHECK(scale_ratio(Ha, Hb) == doctest::Approx(expected).epsilon(1e-10));
  }

  SUBCASE("gauge fixes the overall scale") {
    // the same projective map scaled by 2 renormalizes to the same H
    const Homography doubled = Homography::from_matrix(2.0 * hs[0].H);
    CHECK(scale_ratio(doubled, hs[1]) ==
          doctest::Approx(scale_ratio(hs[0], hs[1])).epsilon(1e-15));
  }

  SUBCASE("triple consistency") {
    const auto h3 = synthetic_homographies(K, testsup::reference_center(), 3, 33);
    const double l_01 = scale_ratio(h3[0], h3[1]);
    const double l_12 = scale_ratio(h3[1], h3[2]);
    const double l_02 = scale_ratio(h3[0], h3[2]);
    CHECK(l_01 * l_12 == doctest::Approx(l_02).epsilon(1e-10));
  }
}

TEST_CASE("stacked system is consistent for exact data") {
  const CameraIntrinsics K = testsup::reference_intrinsics();
  const Eigen::Vector3d center = testsup::reference_center();

  Rng rng(34);
  std::vector<Eigen::Matrix3d> rotations;
  std::vector<Homography> hs;
  for (int i = 0; i < 3; ++i) {
    rotations.push_back(testsup::random_pose(rng));
    hs.push_back(homography_from_pose(K, rotations.back(), center));
  }

  const LinearSystem sys = build_linear_system(hs, 0);
  CHECK(sys.D.rows() == 6 * 3);
  CHECK(sys.D.cols() == 11);

  const Eigen::VectorXd sol = ground_truth_solution(K, center, rotations[0]);
  const double residual = (sys.D * sol - sys.b).norm() / sys.b.norm();
  CHECK(residual < 1e-9);
}

TEST_CASE("too few views is rejected") {
  const CameraIntrinsics K = testsup::reference_intrinsics();
  const auto hs = synthetic_homographies(K, testsup::reference_center(), 2, 35);
  CHECK_THROWS_AS(build_linear_system(hs, 0), TooFewViews);
}

TEST_CASE("duplicated views add no constraints") {
  const CameraIntrinsics K = testsup::reference_intrinsics();
  const auto hs = synthetic_homographies(K, testsup::reference_center(), 1, 36);
  const std::vector<Homography> dup{hs[0], hs[0], hs[0]};
  const LinearSystem sys = build_linear_system(dup, 0);
  CHECK(numerical_rank(sys.D).first <= 10);
}

TEST_CASE("rotation about the fixed vertical axis stalls the rank") {
  const CameraIntrinsics K = testsup::reference_intrinsics();
  const Eigen::Vector3d center = testsup::reference_center();
  Rng rng(37);
  const Eigen::Matrix3d base = testsup::random_pose(rng);

  std::vector<Homography> hs;
  for (int i = 0; i < 5; ++i) {
    const Eigen::Matrix3d R = base * rotation_about_z(0.15 + 0.5 * i);
    hs.push_back(homography_from_pose(K, R, center));
  }
  const int rank5 = numerical_rank(build_linear_system(hs, 0).D).first;
  const std::vector<Homography> two{hs[0], hs[1]};
  const int rank2 = numerical_rank(assemble_design_matrix(two, 0).D).first;
  CHECK(rank5 == rank2);
  CHECK(rank5 < 11);
}

TEST_CASE("closed form recovers the reference camera exactly") {
  for (int n_views : {15, 3}) {
    CAPTURE(n_views);
    auto cfg = testsup::reference_config();
    cfg.num_views = n_views;
    cfg.seed = 40 + n_views;
    const SimResult sim = generate(cfg);

    ClosedFormDiagnostics diag;
    const auto [K, ext] = solve_closed_form(sim.observations, cfg.target, &diag);
    CHECK(diag.rank == 11);

    const CameraIntrinsics truth = cfg.intrinsics;
    CHECK(std::abs(K.fx - truth.fx) / truth.fx < 1e-6);
    CHECK(std::abs(K.fy - truth.fy) / truth.fy < 1e-6);
    CHECK(std::abs(K.cx - truth.cx) / truth.cx < 1e-6);
    CHECK(std::abs(K.cy - truth.cy) / truth.cy < 1e-6);
    CHECK(std::abs(K.skew - truth.skew) / truth.skew < 1e-6);
    CHECK(std::abs(ext.x - cfg.center_x) < 1e-6);
    CHECK(std::abs(ext.y - cfg.center_y) < 1e-6);
    CHECK(std::abs(ext.r - cfg.radius) < 1e-6);

    // rotations match the generating poses
    for (int v = 0; v < n_views; ++v) {
      CHECK(rotation_geodesic(ext.rotations[v], sim.truth.extrinsics.rotations[v]) <
            1e-6);
    }
  }
}

TEST_CASE("degenerate observations raise through the solver") {
  auto cfg = testsup::reference_config();
  cfg.num_views = 5;
  cfg.seed = 41;
  SimResult sim = generate(cfg);

  // overwrite poses with a fixed-axis family and reproject
  Rng rng(42);
  const Eigen::Matrix3d base = testsup::random_pose(rng, 10.0);
  for (int v = 0; v < cfg.num_views; ++v) {
    const Eigen::Matrix3d R = base * rotation_about_z(0.2 + 0.45 * v);
    for (int j = 0; j < cfg.target.point_count(); ++j) {
      const Eigen::Vector2d P2 = cfg.target.point(j);
      sim.observations.views[v].pixels[j] =
          project(cfg.intrinsics, cfg.distortion, R, cfg.center(), {P2.x(), P2.y(), 0.0});
    }
  }
  CHECK_THROWS_AS(solve_closed_form(sim.observations, cfg.target),
                  DegenerateConfiguration);
}

TEST_CASE("determinant of the normalized map equals the radius") {
  const CameraIntrinsics K = testsup::reference_intrinsics();
  const Eigen::Vector3d center = testsup::reference_center();
  const Eigen::Matrix3d Kinv = K.matrix().inverse();
  Rng rng(43);
  for (int i = 0; i < 20; ++i) {
    const Homography H = homography_from_pose(K, testsup::random_pose(rng), center);
    const Eigen::Matrix3d M = Kinv * H.H;
    const double lambda = 0.5 * (M.col(0).norm() + M.col(1).norm());
    const double det = M.determinant() / (lambda * lambda * lambda);
    CHECK(det == doctest::Approx(700.0).epsilon(1e-8));
  }
}

TEST_CASE("conic sandwich matches the center matrix form") {
  const CameraIntrinsics K = testsup::reference_intrinsics();
  const Eigen::Vector3d center = testsup::reference_center();
  const Eigen::Matrix3d omega =
      (K.matrix() * K.matrix().transpose()).inverse();
  Rng rng(44);
  for (int i = 0; i < 20; ++i) {
    const Homography H = homography_from_pose(K, testsup::random_pose(rng), center);
    Eigen::Matrix3d S = H.H.transpose() * omega * H.H;
    S /= S(0, 0);
    Eigen::Matrix3d expected;
    expected << 1.0, 0.0, -center.x(), 0.0, 1.0, -center.y(), -center.x(),
        -center.y(), center.squaredNorm();
    CHECK((S - expected).cwiseAbs().maxCoeff() /
              expected.cwiseAbs().maxCoeff() <
          1e-8);
  }
}

TEST_CASE("recovered center matrix stays positive semidefinite under noise") {
  auto cfg = testsup::reference_config(0.5);
  cfg.num_views = 15;
  cfg.seed = 45;
  const SimResult sim = generate(cfg);
  ClosedFormDiagnostics diag;
  const auto result = solve_closed_form(sim.observations, cfg.target, &diag);
  CHECK(diag.min_eigenvalue_A > -1e-9 * std::abs(diag.min_eigenvalue_A + 1.0));
  CHECK_FALSE(diag.clamped_radicand);
}

TEST_CASE("parallel homography estimation reproduces the serial solve") {
  auto cfg = testsup::reference_config(0.8);
  cfg.num_views = 10;
  cfg.seed = 46;
  const SimResult sim = generate(cfg);
  const auto [Ks, exts] = solve_closed_form(sim.observations, cfg.target, nullptr, false);
  const auto [Kp, extp] = solve_closed_form(sim.observations, cfg.target, nullptr, true);
  CHECK(Ks.fx == Kp.fx);
  CHECK(Ks.skew == Kp.skew);
  CHECK(exts.r == extp.r);
  for (int v = 0; v < 10; ++v) {
    CHECK((exts.rotations[v] - extp.rotations[v]).norm() == 0.0);
  }
}

TEST_CASE("median initial-value accuracy at half-pixel noise") {
  std::vector<double> focal_errors, pp_errors;
  for (int trial = 0; trial < 200; ++trial) {
    auto cfg = testsup::reference_config(0.5);
    cfg.num_views = 15;
    cfg.seed = 5000 + trial;
    const SimResult sim = generate(cfg);
    try {
      const auto [K, ext] = solve_closed_form(sim.observations, cfg.target);
      focal_errors.push_back(testsup::focal_error(K, cfg.intrinsics));
      pp_errors.push_back(testsup::principal_point_error(K, cfg.intrinsics));
    } catch (const Error&) {
      focal_errors.push_back(1.0);
      pp_errors.push_back(100.0);
    }
  }
  CHECK(testsup::median(focal_errors) < 0.005);
  CHECK(testsup::median(pp_errors) < 2.0);
}
