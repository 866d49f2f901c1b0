#include "invmetric/metrics.hpp"

#include <gtest/gtest.h>

using namespace invmetric;

TEST(Metric, DiskAtOrigin) {
  const HermitianForm g = bergman_metric(closed_form_kernel(make_disk()), make_point({0.0}));
  EXPECT_NEAR(g.matrix()(0, 0).real(), 2.0, 1e-12);
}

TEST(Metric, BallAtOriginIsThreeIdentity) {
  const HermitianForm g = bergman_metric(closed_form_kernel(make_ball(2)), make_point({0.0, 0.0}));
  EXPECT_LT((g.matrix() - 3.0 * CMat::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Metric, BallDimensionThree) {
  const HermitianForm g = bergman_metric(closed_form_kernel(make_ball(3)), make_point({0.0, 0.0, 0.0}));
  EXPECT_LT((g.matrix() - 4.0 * CMat::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Metric, PolydiskDiagonal) {
  const cplx a(0.3, 0.4), b(-0.6, 0.0);
  const HermitianForm g = bergman_metric(closed_form_kernel(make_polydisk({1.0, 1.0})), make_point({a, b}));
  EXPECT_NEAR(g.matrix()(0, 0).real(), 2.0 / std::pow(1.0 - std::norm(a), 2), 1e-10);
  EXPECT_NEAR(g.matrix()(1, 1).real(), 2.0 / std::pow(1.0 - std::norm(b), 2), 1e-10);
  EXPECT_NEAR(std::abs(g.matrix()(0, 1)), 0.0, 1e-12);
}

TEST(Metric, BallEigenvaluesOffCenter) {
  // at (r, 0): radial (d+1)/(1-r^2)^2, tangential (d+1)/(1-r^2)
  const HermitianForm g = bergman_metric(closed_form_kernel(make_ball(2)), make_point({0.9, 0.0}));
  EXPECT_NEAR(g.sigma(1), 3.0 / (0.19 * 0.19), 1e-8);
  EXPECT_NEAR(g.sigma(2), 3.0 / 0.19, 1e-9);
}

TEST(Metric, ConstantKernelGivesZeroForm) {
  const Kernel k = model_kernel(fit_kernel_numeric(make_disk(), 0, 20000, 1));
  EXPECT_NEAR(std::abs(bergman_metric(k, make_point({0.2})).matrix()(0, 0)), 0.0, 1e-12);
}

TEST(Metric, IndefiniteFormRejected) {
  // K(z, w) = exp(-z conj w) has log-Hessian -1.
  Kernel k = closed_form_kernel(make_disk());
  k.jet = [](const PointT<Jet>& z, const PointT<Jet>& w) { return exp(-(z[0] * w[0])); };
  try {
    bergman_metric(k, make_point({0.1}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::numerical_degeneracy);
  }
}

TEST(Metric, AffinePullbackInvariance) {
  CMat l(2, 2);
  l << cplx(1.0, 0.5), 0.3, 0.0, cplx(0.0, 2.0);
  const CVec b = make_point({0.5, -1.0});
  const HoloMap t = affine_map(b, l);
  const Kernel k0 = closed_form_kernel(make_ball(2));
  const Kernel k1 = closed_form_kernel(make_image(make_ball(2), t));
  const CVec z = make_point({cplx(0.2, 0.1), 0.4});
  // g_0(u, v) = g_1(L u, L v)
  const CMat g0 = bergman_metric(k0, z).matrix();
  const CMat g1 = bergman_metric(k1, t(z)).matrix();
  EXPECT_LT((l.transpose() * g1 * l.conjugate() - g0).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(SingularValues, Trivial) {
  EXPECT_EQ(singular_values(HermitianForm(CMat::Identity(3, 3))), RVec::Ones(3));
  CMat m = CMat::Zero(2, 2);
  m(0, 0) = 2.0;
  m(1, 1) = 5.0;
  const RVec s = singular_values(HermitianForm(m));
  EXPECT_EQ(s[0], 5.0);
  EXPECT_EQ(s[1], 2.0);
}

TEST(SingularValues, RejectsNonHermitian) {
  CMat m = CMat::Identity(2, 2);
  m(0, 1) = 1.0;
  EXPECT_THROW(HermitianForm{m}, Error);
}

TEST(Curvature, DiskIsMinusTwo) {
  const Kernel k = closed_form_kernel(make_disk());
  for (double r : {0.0, 0.4, 0.8})
    EXPECT_NEAR(line_gaussian_curvature(k, make_point({cplx(r, 0.1)}), make_point({1.0})), -2.0, 1e-3);
}

TEST(Curvature, BallHolomorphicSectional) {
  const Kernel k = closed_form_kernel(make_ball(2));
  const CVec o = make_point({0.0, 0.0});
  for (const CVec& v : {make_point({1.0, 0.0}), make_point({cplx(0.3, 0.4), 0.5})})
    EXPECT_NEAR(hol_sectional_curvature(k, o, v), -2.0 / 3.0, 1e-2);
  // constant curvature, also away from the center
  EXPECT_NEAR(hol_sectional_curvature(k, make_point({0.5, cplx(0, 0.3)}), make_point({0.2, 1.0})), -2.0 / 3.0, 1e-6);
}

TEST(Curvature, JetsAgreeWithFiniteDifferences) {
  const Kernel k = closed_form_kernel(make_ellipsoid({1.0, 4.0}));
  const CVec z = make_point({0.2, cplx(0.1, 0.1)}), v = make_point({1.0, cplx(0.5, -0.2)});
  EXPECT_NEAR(line_gaussian_curvature(k, z, v), line_gaussian_curvature_fd(k, z, v), 1e-4);
}

TEST(Curvature, UpperBoundTwo) {
  const Domain doms[] = {make_disk(), make_ball(2), make_polydisk({1.0, 2.0}), make_ellipsoid({1.0, 4.0})};
  for (const Domain& d : doms) {
    const Kernel k = closed_form_kernel(d);
    for (const CVec& z : sample_interior(d, 10, 3)) {
      CVec v = CVec::Ones(d.dim());
      EXPECT_LE(hol_sectional_curvature(k, z, v), 2.0 + 1e-3);
    }
  }
}

TEST(Compactness, PolydiskQ1BoundedWitness) {
  const Domain p = make_polydisk({1.0, 1.0});
  std::vector<CVec> path;
  for (int k = 1; k <= 10; ++k) path.push_back(make_point({1.0 - std::ldexp(1.0, -k), 0.0}));
  const auto v = compactness_classify(p, bergman_metric_source(closed_form_kernel(p)), 1, path, 1000.0);
  EXPECT_EQ(v.verdict, Verdict::bounded_witness);
  for (double s : v.sigma) EXPECT_NEAR(s, 2.0, 1e-10);
  // the minimizing line is the z2-direction
  ASSERT_EQ(v.witness.cols(), 1);
  EXPECT_NEAR(std::abs(v.witness(1, 0)), 1.0, 1e-10);
}

TEST(Compactness, BallBlowsUp) {
  const Domain b = make_ball(2);
  std::vector<CVec> path;
  for (int k = 1; k <= 14; ++k) path.push_back(make_point({1.0 - std::ldexp(1.0, -k), 0.0}));
  const MetricSource g = bergman_metric_source(closed_form_kernel(b));
  const auto v1 = compactness_classify(b, g, 1, path, 1000.0);
  EXPECT_EQ(v1.verdict, Verdict::blows_up);
  for (std::size_t k = 0; k < path.size(); ++k)
    EXPECT_NEAR(v1.sigma[k] / (3.0 / (1.0 - path[k].squaredNorm())), 1.0, 1e-8);
  EXPECT_EQ(compactness_classify(b, g, 2, path, 1000.0).verdict, Verdict::blows_up);
}

TEST(Compactness, RejectsShortPath) {
  const Domain b = make_ball(2);
  EXPECT_THROW(compactness_classify(b, bergman_metric_source(closed_form_kernel(b)), 1, {make_point({0.0, 0.0})}, 10.0),
               Error);
}

TEST(VarietyProbe, PolydiskDisk) {
  const auto r = boundary_variety_probe(make_polydisk({1.0, 1.0}), 1);
  EXPECT_EQ(r.status, ProbeStatus::found);
  EXPECT_TRUE(r.verified);
  EXPECT_EQ(r.rank, 1);
  const CVec x = r.phi(make_point({cplx(0.3, 0.2)}));
  EXPECT_NEAR(std::abs(x[0]), 1.0, 1e-14);
}

TEST(VarietyProbe, TridiskBidisk) {
  const auto r = boundary_variety_probe(make_polydisk({1.0, 1.0, 1.0}), 2);
  EXPECT_EQ(r.status, ProbeStatus::found);
  EXPECT_EQ(r.rank, 2);
}

TEST(VarietyProbe, BallHasNone) {
  EXPECT_EQ(boundary_variety_probe(make_ball(2), 1).status, ProbeStatus::none);
}
