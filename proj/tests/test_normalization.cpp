#include "invmetric/normalization.hpp"

#include <gtest/gtest.h>

using namespace invmetric;

TEST(Affine, ComposeAndInverse) {
  CMat l(2, 2);
  l << 2.0, cplx(0, 1), 0.0, 3.0;
  const AffineMap t(make_point({1.0, -1.0}), l);
  const CVec z = make_point({cplx(0.2, 0.3), 0.5});
  EXPECT_LT((t.inverse()(t(z)) - z).norm(), 1e-14);
  EXPECT_LT((t.compose(t.inverse())(z) - z).norm(), 1e-14);
  EXPECT_THROW(AffineMap(make_point({0.0, 0.0}), CMat::Zero(2, 2)), Error);
}

TEST(Frankel, BallCenterIsUnitary) {
  const Frankel fr = frankel_recenter(make_ball(2), make_point({0.0, 0.0}));
  const RVec s = fr.map.singular_values();
  EXPECT_NEAR(s[0], 1.0, 1e-6);
  EXPECT_NEAR(s[1], 1.0, 1e-6);
  EXPECT_LT(fr.map(make_point({0.0, 0.0})).norm(), 1e-12);
}

TEST(Frankel, DiskNearBoundaryScalesByTen) {
  const Frankel fr = frankel_recenter(make_disk(), make_point({0.9}));
  EXPECT_NEAR(fr.deltas[0], 0.1, 1e-6);
  EXPECT_NEAR(fr.map.singular_values()[0], 10.0, 1e-4);
}

TEST(Frankel, EllipsoidAxes) {
  const Frankel fr = frankel_recenter(make_ellipsoid({1.0, 4.0}), make_point({0.0, 0.0}));
  const RVec s = fr.map.singular_values();
  EXPECT_NEAR(s[0], 2.0, 1e-4);
  EXPECT_NEAR(s[1], 1.0, 1e-4);
  EXPECT_NEAR(fr.deltas[0], 0.5, 1e-6);
}

TEST(Frankel, RigidMotionInvariance) {
  // Singular values of the recentering are unchanged under a unitary change
  // of coordinates plus translation.
  const double c = std::cos(0.7), s = std::sin(0.7);
  CMat u(2, 2);
  u << c, cplx(0, s), cplx(0, s), c;
  const HoloMap m = affine_map(make_point({0.3, -0.2}), u);
  const Domain e = make_ellipsoid({1.0, 4.0});
  const Domain img = make_image(e, m);
  const CVec z = make_point({0.5, cplx(0.1, 0.1)});
  const RVec a = frankel_recenter(e, z).map.singular_values();
  const RVec b = frankel_recenter(img, m(z)).map.singular_values();
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-6 * a[0]);
}

TEST(Frankel, NonConvexRejected) {
  EXPECT_THROW(frankel_recenter(make_omega_psi(), make_point({0.1, 0.1})), Error);
}

TEST(Squeezing, IdentityOnBall) {
  SqueezingOptions o;
  o.outer = OuterBody::unit_ball;
  const auto r = verify_squeezing(make_ball(2), AffineMap::identity(2), o);
  EXPECT_GE(r.inner_radius, 0.98);
  EXPECT_TRUE(r.outer_ok);
}

TEST(Squeezing, DiskNearBoundary) {
  const Frankel fr = frankel_recenter(make_disk(), make_point({0.9}));
  const auto r = verify_squeezing(make_disk(), fr.map);
  EXPECT_GE(r.inner_radius, 0.05);
  EXPECT_TRUE(r.outer_ok);
}

TEST(Squeezing, ScaledMapViolatesOuterBall) {
  SqueezingOptions o;
  o.outer = OuterBody::unit_ball;
  const AffineMap t(make_point({0.0, 0.0}), CMat(3.0 * CMat::Identity(2, 2)));
  EXPECT_FALSE(verify_squeezing(make_ball(2), t, o).outer_ok);
}

TEST(Squeezing, UniformAlongBoundarySequence) {
  for (const Domain& d : {make_disk(), make_ball(2), make_ellipsoid({1.0, 4.0})}) {
    std::vector<double> s;
    for (int k = 1; k <= 8; ++k) {
      CVec z = CVec::Zero(d.dim());
      z[0] = 1.0 - std::pow(0.5, k);
      s.push_back(verify_squeezing(d, frankel_recenter(d, z).map).inner_radius);
    }
    const double lo = *std::min_element(s.begin(), s.end()), hi = *std::max_element(s.begin(), s.end());
    EXPECT_GE(lo, 0.5 * hi);
  }
}

TEST(Chart, BallCenterConstant) {
  const Domain b = make_ball(2);
  const auto r = chart_embedding(b, make_point({0.0, 0.0}), bergman_metric_source(closed_form_kernel(b)));
  // metric at 0 is 3 I and Phi(w) = s U w, so the pullback at 0 is 3 s^2 I
  const double m = 3.0 * r.inner_radius * r.inner_radius;
  EXPECT_NEAR(r.A_center, std::max(m, 1.0 / m), 1e-5);
  EXPECT_TRUE(r.outer_ok);
  EXPECT_TRUE(r.distance_ok);
}

TEST(Chart, DiskUniformEnvelope) {
  const Domain d = make_disk();
  const MetricSource g = bergman_metric_source(closed_form_kernel(d));
  double lo = kInf, hi = 0.0;
  for (double s : {0.5, 0.9, 0.99}) {
    ChartOptions o;
    o.pairs = 0;
    const double a = chart_embedding(d, make_point({s}), g, o).A;
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  EXPECT_LT(hi, 10.0);
  EXPECT_LT(hi / lo, 3.0);
}

TEST(Chart, NonConvexUnsupported) {
  const Domain om = make_omega_psi();
  const MetricSource g = bergman_metric_source(closed_form_kernel(om));
  EXPECT_THROW(chart_embedding(om, make_point({0.1, 0.1}), g), Error);
}
