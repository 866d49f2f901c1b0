#include "invmetric/domain.hpp"
#include "invmetric/io.hpp"

#include <gtest/gtest.h>

using namespace invmetric;

TEST(Contains, BallCenter) { EXPECT_TRUE(contains(make_ball(2), make_point({0.0, 0.0}))); }

TEST(Contains, PolydiskBoundaryExcluded) { EXPECT_FALSE(contains(make_polydisk({1.0, 1.0}), make_point({1.0, 0.0}))); }

TEST(Contains, EllipsoidWeightedSum) {
  const Domain e = make_ellipsoid({1.0, 4.0});
  EXPECT_FALSE(contains(e, make_point({0.0, 0.6})));  // 4 * 0.36 > 1
  EXPECT_TRUE(contains(e, make_point({0.0, 0.4})));
}

TEST(Contains, DimensionMismatchThrows) {
  EXPECT_THROW(contains(make_ball(2), make_point({0.0})), Error);
}

TEST(Contains, ShiftedBall) {
  const Domain b = make_ball(1, 0.5, make_point({2.0}));
  EXPECT_TRUE(contains(b, make_point({2.4})));
  EXPECT_FALSE(contains(b, make_point({0.0})));
}

TEST(Contains, ProductAndImage) {
  const Domain p = make_product(make_disk(), make_disk(2.0));
  EXPECT_TRUE(contains(p, make_point({0.5, 1.5})));
  EXPECT_FALSE(contains(p, make_point({1.5, 0.5})));
  CMat l = CMat::Identity(1, 1) * 3.0;
  const Domain im = make_image(make_disk(), affine_map(make_point({1.0}), l));
  EXPECT_TRUE(contains(im, make_point({3.5})));
  EXPECT_FALSE(contains(im, make_point({4.5})));
}

TEST(Validate, RejectsBadParameters) {
  EXPECT_THROW(make_ball(2, -1.0), Error);
  EXPECT_THROW(make_polydisk({1.0, 0.0}), Error);
  EXPECT_THROW(make_ellipsoid({}), Error);
}

TEST(LineDistance, Disk) {
  EXPECT_NEAR(line_boundary_distance(make_disk(), make_point({0.0}), make_point({1.0})), 1.0, 1e-12);
  EXPECT_NEAR(line_boundary_distance(make_disk(), make_point({0.9}), make_point({1.0})), 0.1, 1e-12);
}

TEST(LineDistance, PolydiskFirstFactor) {
  EXPECT_NEAR(line_boundary_distance(make_polydisk({1.0, 1.0}), make_point({0.0, 0.0}), make_point({1.0, 0.0})), 1.0,
              1e-12);
}

TEST(LineDistance, EllipsoidShortAxis) {
  EXPECT_NEAR(line_boundary_distance(make_ellipsoid({1.0, 4.0}), make_point({0.0, 0.0}), make_point({0.0, 1.0})), 0.5,
              1e-9);
}

TEST(LineDistance, InvariantUnderScalingOfDirection) {
  const Domain b = make_ball(2);
  const CVec z = make_point({0.3, -0.2});
  const CVec v = make_point({cplx(0.4, 0.1), 0.7});
  EXPECT_NEAR(line_boundary_distance(b, z, v), line_boundary_distance(b, z, CVec(cplx(0, 3) * v)), 1e-10);
}

TEST(LineDistance, BallClosedForm) {
  // z + zeta v leaves the unit ball when |z + zeta v| = 1; along v orthogonal
  // to z the minimum radius is sqrt(1 - |z|^2).
  const CVec z = make_point({0.6, 0.0});
  EXPECT_NEAR(line_boundary_distance(make_ball(2), z, make_point({0.0, 1.0})), 0.8, 1e-9);
}

TEST(BoundaryDistance, DiskAndPolydisk) {
  EXPECT_NEAR(boundary_distance(make_disk(), make_point({cplx(0.3, 0.4)})), 0.5, 1e-12);
  EXPECT_NEAR(boundary_distance(make_polydisk({1.0, 2.0}), make_point({0.5, 1.8})), 0.2, 1e-12);
}

TEST(Sampling, ZeroCount) { EXPECT_TRUE(sample_interior(make_disk(), 0, 1).empty()); }

TEST(Sampling, AllInsideAndReproducible) {
  const Domain e = make_ellipsoid({1.0, 4.0});
  const auto a = sample_interior(e, 1000, 7);
  const auto b = sample_interior(e, 1000, 7);
  ASSERT_EQ(a.size(), 1000u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(contains(e, a[i]));
    EXPECT_EQ((a[i] - b[i]).norm(), 0.0);
  }
}

TEST(Sampling, EllipsoidVolume) {
  // vol{|z1|^2 + 4|z2|^2 < 1} = pi^2 / (2 * 1 * 4)
  const double v = estimate_volume(make_ellipsoid({1.0, 4.0}), 10000, 11);
  EXPECT_NEAR(v / (kPi * kPi / 8.0), 1.0, 0.02);
}

TEST(Sampling, BallVolume) {
  EXPECT_NEAR(estimate_volume(make_ball(2), 20000, 5) / (kPi * kPi / 2.0), 1.0, 0.02);
}

TEST(Maps, AffineJacobianAndInverse) {
  CMat l(2, 2);
  l << cplx(1, 1), 0.5, 0.0, cplx(0, 2);
  const HoloMap m = affine_map(make_point({0.1, -0.2}), l);
  const CVec z = make_point({0.3, cplx(0.1, 0.2)});
  EXPECT_LT((m.inverse(m(z)) - z).norm(), 1e-14);
  EXPECT_LT(jacobian_fd_error(m, z), 1e-8);
}

TEST(Maps, OmegaPsiRoundTrip) {
  const HoloMap f = omega_psi_map();
  const CVec z = make_point({0.3, cplx(0.2, -0.4)});
  EXPECT_LT((f.inverse(f(z)) - z).norm(), 1e-13);
  EXPECT_LT(jacobian_fd_error(f, z), 1e-6);
  // det F' = psi(z2)
  EXPECT_NEAR(std::abs(f.jacobian(z).determinant() - std::exp(-(1.0 + z[1]) / (1.0 - z[1]))), 0.0, 1e-14);
}

TEST(Planar, UnivalenceRejected) {
  // f(zeta) = zeta + zeta^2 has f'(-1/2) = 0 inside the disk.
  EXPECT_THROW(make_planar({0.0, 1.0, 1.0}), Error);
}

TEST(Convexity, Recognized) {
  EXPECT_TRUE(is_convex(make_ball(2)));
  EXPECT_TRUE(is_convex(make_ellipsoid({1.0, 4.0})));
  EXPECT_TRUE(is_convex(make_polydisk({1.0, 2.0})));
  EXPECT_FALSE(is_convex(make_omega_psi()));
}

TEST(Json, DomainRoundTrip) {
  const Domain d = make_product(make_ellipsoid({1.0, 2.0}), make_planar({0.0, 1.0, 0.3}));
  const json j = domain_to_json(d);
  const Domain back = domain_from_json(j);
  EXPECT_EQ(domain_to_json(back).dump(), j.dump());
  const CVec z = make_point({0.2, 0.1, 0.3});
  EXPECT_EQ(contains(d, z), contains(back, z));
}

TEST(Json, UnknownKeyRejected) {
  const json j = json::parse(R"({"variant": "ball", "dim": 2, "radius": 1, "colour": "red"})");
  try {
    domain_from_json(j);
    FAIL() << "expected a config error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::config);
  }
}

TEST(Json, UnknownVariantRejected) {
  EXPECT_THROW(domain_from_json(json::parse(R"({"variant": "torus"})")), Error);
}
