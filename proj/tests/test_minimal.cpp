#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include "spherecal/bundle_adjust.hpp"
#include "spherecal/closed_form.hpp"
#include "spherecal/error.hpp"
#include "spherecal/homography.hpp"
#include "spherecal/minimal.hpp"
#include "spherecal/rotation.hpp"
#include "spherecal/simulate.hpp"
#include "test_support.hpp"

using namespace spherecal;

namespace {

Vector6d omega_vector(const CameraIntrinsics& K) {
  const Eigen::Matrix3d omega = (K.matrix() * K.matrix().transpose()).inverse();
  Vector6d w;
  w << omega(0, 0), omega(0, 1), omega(0, 2), omega(1, 1), omega(1, 2), omega(2, 2);
  return w.normalized();
}

Eigen::Matrix<double, 6, 6> build_c_matrix(const ConstraintRows& a,
                                           const ConstraintRows& b, double c) {
  Eigen::Matrix<double, 6, 6> C;
  C.row(0) = a.off_diag.transpose();
  C.row(1) = a.diag_diff.transpose();
  C.row(2) = (a.center_const + c * a.center_lin).transpose();
  C.row(3) = b.off_diag.transpose();
  C.row(4) = b.diag_diff.transpose();
  C.row(5) = (b.center_const + c * b.center_lin).transpose();
  return C;
}

}  // namespace

TEST_CASE("constraint rows of the identity homography") {
  Homography H;
  H.H = Eigen::Matrix3d::Identity();
  const ConstraintRows rows = constraint_rows(H);
  Vector6d v12_expected, diff_expected;
  v12_expected << 0, 1, 0, 0, 0, 0;
  diff_expected << 1, 0, 0, -1, 0, 0;
  CHECK((rows.off_diag - v12_expected).norm() == 0.0);
  CHECK((rows.diag_diff - diff_expected).norm() == 0.0);
}

TEST_CASE("ground-truth conic annihilates the constraint rows") {
  const CameraIntrinsics K = testsup::reference_intrinsics();
  const Eigen::Vector3d center = testsup::reference_center();
  const Vector6d w = omega_vector(K);
  Rng rng(51);
  for (int i = 0; i < 20; ++i) {
    const Homography H = homography_from_pose(K, testsup::random_pose(rng), center);
    const ConstraintRows rows = constraint_rows(H);
    CHECK(std::abs(rows.off_diag.dot(w)) < 1e-10);
    CHECK(std::abs(rows.diag_diff.dot(w)) < 1e-10);

    const double c = center.x() + center.y() - center.squaredNorm();
    const double res = (rows.center_const + c * rows.center_lin).dot(w);
    CHECK(std::abs(res) < 1e-10 * (rows.center_const.norm() + std::abs(c)));
  }
}

TEST_CASE("determinant of the hidden-variable matrix is at most quadratic") {
  const CameraIntrinsics K = testsup::reference_intrinsics();
  Rng rng(52);
  const Homography Ha = homography_from_pose(K, testsup::random_pose(rng),
                                             testsup::reference_center());
  const Homography Hb = homography_from_pose(K, testsup::random_pose(rng),
                                             testsup::reference_center());
  const ConstraintRows ra = constraint_rows(Ha);
  const ConstraintRows rb = constraint_rows(Hb);

  const double samples[4] = {-2.0, -1.0, 1.0, 2.0};
  double dets[4];
  double max_abs = 0.0;
  for (int i = 0; i < 4; ++i) {
    dets[i] = build_c_matrix(ra, rb, samples[i]).determinant();
    max_abs = std::max(max_abs, std::abs(dets[i]));
  }
  // quadratic through the first three samples must predict the fourth
  Eigen::Matrix3d V;
  Eigen::Vector3d d3;
  for (int i = 0; i < 3; ++i) {
    V.row(i) << samples[i] * samples[i], samples[i], 1.0;
    d3(i) = dets[i];
  }
  const Eigen::Vector3d q = V.fullPivLu().solve(d3);
  const double predicted = q(0) * samples[3] * samples[3] + q(1) * samples[3] + q(2);
  CHECK(std::abs(predicted - dets[3]) < 1e-9 * max_abs);
}

TEST_CASE("the true hidden variable is a root of the determinant") {
  const CameraIntrinsics K = testsup::reference_intrinsics();
  const Eigen::Vector3d center = testsup::reference_center();
  Rng rng(53);
  const Homography Ha = homography_from_pose(K, testsup::random_pose(rng), center);
  const Homography Hb = homography_from_pose(K, testsup::random_pose(rng), center);
  const ConstraintRows ra = constraint_rows(Ha);
  const ConstraintRows rb = constraint_rows(Hb);

  double max_on_unit = 0.0;
  for (double c = -1.0; c <= 1.0; c += 0.125) {
    max_on_unit = std::max(max_on_unit,
                           std::abs(build_c_matrix(ra, rb, c).determinant()));
  }
  const double c_true = center.x() + center.y() - center.squaredNorm();
  CHECK(std::abs(build_c_matrix(ra, rb, c_true).determinant()) < 1e-8 * max_on_unit);
}

TEST_CASE("inverse-cholesky recovery round trips the intrinsics") {
  const CameraIntrinsics K = testsup::reference_intrinsics();
  const Eigen::Matrix3d omega = (K.matrix() * K.matrix().transpose()).inverse();
  Eigen::LLT<Eigen::Matrix3d> llt(omega);
  REQUIRE(llt.info() == Eigen::Success);
  const Eigen::Matrix3d U = llt.matrixL().transpose();
  Eigen::Matrix3d Krec = U.inverse();
  Krec /= Krec(2, 2);
  CHECK((Krec - K.matrix()).cwiseAbs().maxCoeff() / 1000.0 < 1e-10);
}

TEST_CASE("two views leave the stacked linear system at rank ten") {
  const CameraIntrinsics K = testsup::reference_intrinsics();
  Rng rng(54);
  std::vector<Homography> hs;
  for (int i = 0; i < 2; ++i) {
    hs.push_back(homography_from_pose(K, testsup::random_pose(rng),
                                      testsup::reference_center()));
  }
  const LinearSystem sys = assemble_design_matrix(hs, 0);
  CHECK(numerical_rank(sys.D).first == 10);
}

TEST_CASE("minimal solver round trips exact two-view data") {
  auto cfg = testsup::reference_config();
  cfg.num_views = 2;
  cfg.seed = 55;
  const SimResult sim = generate(cfg);

  for (bool full : {false, true}) {
    CAPTURE(full);
    MinimalOptions opts;
    opts.use_full_constraints = full;
    MinimalDiagnostics diag;
    const auto [K, ext] =
        solve_minimal(sim.observations, cfg.target, opts, &diag);

    const CameraIntrinsics truth = cfg.intrinsics;
    CHECK(std::abs(K.fx - truth.fx) / truth.fx < 1e-6);
    CHECK(std::abs(K.fy - truth.fy) / truth.fy < 1e-6);
    CHECK(std::abs(K.cx - truth.cx) / truth.cx < 1e-6);
    CHECK(std::abs(K.cy - truth.cy) / truth.cy < 1e-6);
    CHECK(std::abs(K.skew - truth.skew) / std::abs(truth.skew) < 1e-2);
    CHECK(std::abs(ext.x - cfg.center_x) < 1e-5);
    CHECK(std::abs(ext.y - cfg.center_y) < 1e-5);
    CHECK(std::abs(ext.r - cfg.radius) < 1e-5);
    for (int v = 0; v < 2; ++v) {
      CHECK(rotation_geodesic(ext.rotations[v], sim.truth.extrinsics.rotations[v]) <
            1e-6);
    }
  }
}

TEST_CASE("identical views are rejected") {
  auto cfg = testsup::reference_config();
  cfg.num_views = 1;
  cfg.seed = 56;
  const SimResult sim = generate(cfg);
  CHECK_THROWS_AS(
      solve_minimal(sim.observations.views[0], sim.observations.views[0], cfg.target),
      DegenerateConfiguration);
}

TEST_CASE("exactly two views are required") {
  auto cfg = testsup::reference_config();
  cfg.num_views = 3;
  cfg.seed = 57;
  const SimResult sim = generate(cfg);
  CHECK_THROWS_AS(solve_minimal(sim.observations, cfg.target), TooFewViews);
}

TEST_CASE("noisy two-view estimates feed BA to the noise floor") {
  // the solver's precondition excludes pairs related by the degenerate
  // fixed-axis motion; resample seeds whose relative rotation is close to it
  auto valid_pair = [](const SimResult& sim) {
    const Eigen::Matrix3d rel = sim.truth.extrinsics.rotations[0].transpose() *
                                sim.truth.extrinsics.rotations[1];
    const Eigen::Vector3d aa = so3_log(rel);
    return aa.norm() > 0.15 && std::abs(aa.normalized().z()) < 0.9;
  };

  std::vector<double> rms;
  int failures = 0;
  for (int trial = 0; trial < 200; ++trial) {
    auto cfg = testsup::reference_config(0.5);
    cfg.num_views = 2;
    SimResult sim;
    for (std::uint64_t k = 0;; ++k) {
      cfg.seed = 9000 + 1000 * trial + k;
      sim = generate(cfg);
      if (valid_pair(sim)) break;
    }
    try {
      const auto [K, ext] = solve_minimal(sim.observations, cfg.target);
      const BAResult ba = bundle_adjust(K, {}, ext, sim.observations, cfg.target);
      rms.push_back(ba.report.final_rms_px);
    } catch (const Error&) {
      ++failures;
      rms.push_back(1e9);
    }
  }
  CHECK(failures < 20);
  const double med = testsup::median(rms);
  CHECK(med > 0.45);
  CHECK(med < 0.55);
}
