#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include "spherecal/error.hpp"
#include "spherecal/project.hpp"
#include "spherecal/rotation.hpp"
#include "test_support.hpp"

using namespace spherecal;

TEST_CASE("intrinsic matrix assembly") {
  const CameraIntrinsics K = testsup::reference_intrinsics();
  const Eigen::Matrix3d Km = K.matrix();
  CHECK(Km(0, 0) == 1000.0);
  CHECK(Km(0, 1) == 0.01);
  CHECK(Km(2, 2) == 1.0);
  CHECK(Km(1, 0) == 0.0);
  CHECK(Km(2, 0) == 0.0);

  const CameraIntrinsics back = CameraIntrinsics::from_matrix(2.0 * Km);
  CHECK(back.fx == doctest::Approx(K.fx));
  CHECK(back.skew == doctest::Approx(K.skew));
  CHECK(back.cy == doctest::Approx(K.cy));
}

TEST_CASE("planar target layout") {
  PlanarTarget target;  // 8 x 11 at 30 mm
  CHECK(target.point_count() == 88);
  CHECK(target.point(0) == Eigen::Vector2d(0.0, 0.0));
  CHECK(target.point(10) == Eigen::Vector2d(300.0, 0.0));
  CHECK(target.point(87) == Eigen::Vector2d(300.0, 210.0));
}

TEST_CASE("so3 exp/log round trip and invariants") {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const Eigen::Vector3d aa(rng.gaussian(), rng.gaussian(), rng.gaussian());
    const Eigen::Matrix3d R = so3_exp(aa);
    CHECK(is_rotation(R, 1e-12));
    if (aa.norm() < M_PI) {
      CHECK((so3_log(R) - aa).norm() < 1e-9 * std::max(1.0, aa.norm()));
    }
  }
  CHECK(so3_exp(Eigen::Vector3d::Zero()) == Eigen::Matrix3d::Identity());
}

TEST_CASE("svd projection restores orthonormality") {
  Rng rng(12);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Matrix3d R = testsup::random_pose(rng);
    Eigen::Matrix3d noisy = R;
    for (int k = 0; k < 9; ++k) noisy(k / 3, k % 3) += 1e-3 * rng.gaussian();
    const Eigen::Matrix3d P = project_to_so3(noisy);
    CHECK(is_rotation(P, 1e-12));
    CHECK(rotation_geodesic(P, R) < 1e-2);
  }
}

TEST_CASE("projection of the optical-axis point") {
  CameraIntrinsics K;  // identity
  const Eigen::Vector2d uv = project(K, {}, Eigen::Matrix3d::Identity(),
                                     {0.0, 0.0, -1.0}, {0.0, 0.0, 0.0});
  CHECK(uv.x() == 0.0);
  CHECK(uv.y() == 0.0);
}

TEST_CASE("point on the central ray lands on the principal point") {
  const CameraIntrinsics K = testsup::reference_intrinsics();
  const RadialDistortion dist{0.1, -0.2};
  const Eigen::Vector2d uv = project(K, dist, Eigen::Matrix3d::Identity(),
                                     testsup::reference_center(), {150.0, 105.0, 0.0});
  CHECK(uv.x() == doctest::Approx(542.0).epsilon(1e-12));
  CHECK(uv.y() == doctest::Approx(478.0).epsilon(1e-12));
}

TEST_CASE("projection matches the frozen independent oracle") {
  const CameraIntrinsics K = testsup::reference_intrinsics();
  const RadialDistortion dist{0.1, -0.2};
  const Eigen::Matrix3d R = rotation_about_x(10.0 * M_PI / 180.0);

  const Eigen::Vector2d uv0 =
      project(K, dist, R, testsup::reference_center(), {0.0, 0.0, 0.0});
  CHECK(uv0.x() == doctest::Approx(testsup::frozen_projection_origin().x()).epsilon(1e-12));
  CHECK(uv0.y() == doctest::Approx(testsup::frozen_projection_origin().y()).epsilon(1e-12));

  const Eigen::Vector2d uv1 =
      project(K, dist, R, testsup::reference_center(), {300.0, 210.0, 0.0});
  CHECK(uv1.x() ==
        doctest::Approx(testsup::frozen_projection_far_corner().x()).epsilon(1e-12));
  CHECK(uv1.y() ==
        doctest::Approx(testsup::frozen_projection_far_corner().y()).epsilon(1e-12));
}

TEST_CASE("zero distortion equals the pure pinhole projection") {
  const CameraIntrinsics K = testsup::reference_intrinsics();
  Rng rng(13);
  for (int i = 0; i < 50; ++i) {
    const Eigen::Matrix3d R = testsup::random_pose(rng);
    const Eigen::Vector3d P(rng.uniform(0.0, 300.0), rng.uniform(0.0, 210.0), 0.0);
    const Eigen::Vector3d Xc = R * (P - testsup::reference_center());
    if (Xc.z() <= 0.0) continue;
    const Eigen::Vector2d uv = project(K, {0.0, 0.0}, R, testsup::reference_center(), P);
    // pinhole reference: normalize, then map through K, no distortion step
    const double xn = Xc.x() / Xc.z(), yn = Xc.y() / Xc.z();
    CHECK(uv.x() == K.fx * xn + K.skew * yn + K.cx);
    CHECK(uv.y() == K.fy * yn + K.cy);
  }
}

TEST_CASE("non-positive depth raises") {
  CameraIntrinsics K;
  CHECK_THROWS_AS(project(K, {}, Eigen::Matrix3d::Identity(), {0.0, 0.0, 1.0},
                          {0.0, 0.0, 0.0}),
                  NonPositiveDepth);
}

TEST_CASE("undistort inverts distort over the working range") {
  const RadialDistortion dist{0.1, -0.2};
  Rng rng(14);
  for (int i = 0; i < 200; ++i) {
    const Eigen::Vector2d xn(rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4));
    const Eigen::Vector2d xd = distort(dist, xn);
    CHECK((undistort(dist, xd) - xn).norm() < 1e-12);
  }
}

TEST_CASE("angles are invariant under rotation about the camera center") {
  Rng rng(15);
  const Eigen::Vector3d c = testsup::reference_center();
  for (int i = 0; i < 100; ++i) {
    const Eigen::Matrix3d R = testsup::random_pose(rng, 80.0);
    const Eigen::Vector3d Pi(rng.uniform(0.0, 300.0), rng.uniform(0.0, 210.0), 0.0);
    const Eigen::Vector3d Pj(rng.uniform(0.0, 300.0), rng.uniform(0.0, 210.0), 0.0);
    const Eigen::Vector3d a = Pi - c, b = Pj - c;
    const double before = std::acos(std::clamp(a.normalized().dot(b.normalized()), -1.0, 1.0));
    const Eigen::Vector3d ar = R * a, br = R * b;
    const double after =
        std::acos(std::clamp(ar.normalized().dot(br.normalized()), -1.0, 1.0));
    CHECK(std::abs(before - after) < 1e-12);
  }
}

TEST_CASE("any nonzero translation breaks the special point-pair angles") {
  // pairs on the target plane at distance r whose angles pin the translation
  const double r = 700.0;
  const Eigen::Vector3d A(r, 0.0, r), B(-r, 0.0, r);
  const Eigen::Vector3d C(2.0 * r, 0.0, r), D(-2.0 * r, 0.0, r);
  auto cos_angle = [](const Eigen::Vector3d& u, const Eigen::Vector3d& v) {
    return u.normalized().dot(v.normalized());
  };
  CHECK(std::abs(cos_angle(A, B)) < 1e-15);
  CHECK(cos_angle(C, D) == doctest::Approx(-3.0 / 5.0).epsilon(1e-15));

  Rng rng(16);
  for (int i = 0; i < 100; ++i) {
    Eigen::Vector3d t(rng.gaussian(), rng.gaussian(), rng.gaussian());
    t = t.normalized() * rng.uniform(1.0, 100.0);  // at least 1 mm
    const double dev_ab = std::abs(cos_angle(A + t, B + t) - cos_angle(A, B));
    const double dev_cd = std::abs(cos_angle(C + t, D + t) - cos_angle(C, D));
    CHECK(std::max(dev_ab, dev_cd) > 1e-10);
  }
}

TEST_CASE("analytic projection jacobian matches central differences") {
  Rng rng(17);
  int checked = 0;
  while (checked < 100) {
    CameraIntrinsics K{1000.0 + 50.0 * rng.gaussian(), 1000.0 + 50.0 * rng.gaussian(),
                       542.0 + 10.0 * rng.gaussian(), 478.0 + 10.0 * rng.gaussian(),
                       0.01 + 0.01 * rng.gaussian()};
    RadialDistortion dist{0.1 * rng.gaussian(), 0.1 * rng.gaussian()};
    const Eigen::Vector3d aa = 0.3 * Eigen::Vector3d(rng.gaussian(), rng.gaussian(),
                                                     rng.gaussian());
    const Eigen::Vector3d center(150.0 + 20.0 * rng.gaussian(),
                                 105.0 + 20.0 * rng.gaussian(),
                                 -(700.0 + 50.0 * rng.gaussian()));
    const Eigen::Vector3d P(rng.uniform(0.0, 300.0), rng.uniform(0.0, 210.0), 0.0);

    // flat parameter block for differencing
    Eigen::Matrix<double, 13, 1> params;
    params << K.fx, K.fy, K.cx, K.cy, K.skew, dist.k1, dist.k2, center.x(), center.y(),
        -center.z(), aa.x(), aa.y(), aa.z();

    auto eval = [&](const Eigen::Matrix<double, 13, 1>& p) -> Eigen::Vector2d {
      const CameraIntrinsics k{p(0), p(1), p(2), p(3), p(4)};
      const RadialDistortion d{p(5), p(6)};
      const Eigen::Vector3d c(p(7), p(8), -p(9));
      return project(k, d, so3_exp(p.segment<3>(10)), c, P);
    };

    ProjectionJacobian jac;
    try {
      project_with_jacobian(K, dist, aa, {params(7), params(8), -params(9)}, P, jac);
      eval(params);
    } catch (const NonPositiveDepth&) {
      continue;
    }
    ++checked;

    Eigen::Matrix<double, 2, 13> analytic;
    analytic << jac.d_intrinsics, jac.d_distortion, jac.d_center, jac.d_rotation;

    const double h = 1e-6;
    for (int col = 0; col < 13; ++col) {
      Eigen::Matrix<double, 13, 1> lo = params, hi = params;
      lo(col) -= h;
      hi(col) += h;
      Eigen::Vector2d fd;
      try {
        fd = (eval(hi) - eval(lo)) / (2.0 * h);
      } catch (const NonPositiveDepth&) {
        continue;
      }
      const Eigen::Vector2d a = analytic.col(col);
      const double denom = std::max({1.0, fd.norm(), a.norm()});
      CHECK((a - fd).norm() / denom < 1e-5);
    }
  }
}
