#include "invmetric/psh.hpp"

#include <gtest/gtest.h>

using namespace invmetric;

namespace {

ScalarPotential norm_squared(int d) {
  return fd_potential(d, "|z|^2", [](const CVec& z) { return z.squaredNorm(); });
}

}  // namespace

TEST(Levi, FlatPotential) {
  EXPECT_NEAR(levi_form(norm_squared(1), make_point({cplx(0.3, 0.4)})).matrix()(0, 0).real(), 1.0, 1e-6);
}

TEST(Levi, PluriharmonicVanishes) {
  const auto p = fd_potential(1, "Re z", [](const CVec& z) { return z[0].real(); });
  EXPECT_NEAR(std::abs(levi_form(p, make_point({0.2})).matrix()(0, 0)), 0.0, 1e-6);
}

TEST(Levi, LogKernelMatchesMetric) {
  const Kernel k = closed_form_kernel(make_disk());
  const ScalarPotential lam = log_kernel_potential(k);
  for (double r : {0.0, 0.5, 0.8}) {
    const CVec z = make_point({cplx(r, 0.1)});
    const double expect = 2.0 / std::pow(1.0 - z.squaredNorm(), 2);
    EXPECT_NEAR(levi_form(lam, z).matrix()(0, 0).real(), expect, 1e-10 * expect);
    const ScalarPotential fd = fd_potential(1, "fd", lam.value, [](const CVec& x) { return x.norm() < 1.0; });
    EXPECT_NEAR(levi_form(fd, z).matrix()(0, 0).real() / expect, 1.0, 1e-5);
  }
}

TEST(Levi, StencilNearBoundaryThrows) {
  const ScalarPotential p = fd_potential(1, "log(1-|z|^2)", [](const CVec& z) { return std::log(1.0 - z.squaredNorm()); },
                                         [](const CVec& z) { return z.norm() < 1.0; });
  try {
    levi_form(p, make_point({1.0 - 1e-5}));
    FAIL() << "expected boundary proximity";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::boundary_proximity);
  }
}

TEST(Sbg, FlatAtTwo) {
  // p = conj(z), H = 1, so the norm is |z|
  EXPECT_NEAR(sbg_norm(norm_squared(1), make_point({2.0})), 2.0, 1e-6);
}

TEST(Sbg, DegenerateIsInfinite) {
  EXPECT_TRUE(std::isinf(sbg_norm(HermitianForm(CMat::Zero(1, 1)), make_point({1.0}))));
}

TEST(Sbg, ScalingLawIsSquareRoot) {
  // L(t lam) = t L, d(t lam) = t d lam, so the norm scales by sqrt(t).
  const ScalarPotential lam = log_kernel_potential(closed_form_kernel(make_ball(2)));
  for (const CVec& z : sample_interior(make_ball(2), 5, 9)) {
    const double base = sbg_norm(lam, z);
    for (double t : {0.5, 2.0, 7.0}) EXPECT_NEAR(sbg_norm(scaled(lam, t), z) / base, std::sqrt(t), 1e-12);
  }
}

TEST(Sbg, PolydiskClosedForm) {
  // p_j = 2 conj(z_j) / (1 - |z_j|^2), H_jj = 2 / (1 - |z_j|^2)^2, norm^2 = 2 sum |z_j|^2
  const ScalarPotential lam = log_kernel_potential(closed_form_kernel(make_polydisk({1.0, 1.0})));
  const CVec z = make_point({cplx(0.5, 0.3), cplx(-0.9, 0.2)});
  EXPECT_NEAR(sbg_norm(lam, z), std::sqrt(2.0 * z.squaredNorm()), 1e-10);
  EXPECT_LE(sbg_norm(lam, make_point({0.99, 0.99})), 2.0);
}

TEST(BdPsh, FlatDisk) {
  // L(-e^{-eta|z|^2}) = eta e^{-eta|z|^2} (1 - eta|z|^2) >= (eta/2C) e^{-eta|z|^2} on |z| <= 1, C = 1, eta = 1/2
  const ScalarPotential lam = norm_squared(1);
  const MetricSource g = [](const CVec&) { return HermitianForm(CMat::Identity(1, 1)); };
  std::vector<CVec> grid;
  for (int i = 0; i <= 10; ++i)
    for (int a = 0; a < 8; ++a) grid.push_back(make_point({std::polar(i / 10.0, 0.785 * a)}));
  const auto rep = bd_psh_construct(lam, 0.5, 1.0, g, grid);
  EXPECT_EQ(rep.eta, 0.5);
  EXPECT_GE(rep.min_margin, -1e-8);
  const CVec z = make_point({0.6});
  EXPECT_NEAR(rep.u.value(z), -std::exp(-0.5 * 0.36), 1e-15);
}

TEST(BdPsh, ConstantPotentialFails) {
  const ScalarPotential lam = fd_potential(1, "0", [](const CVec&) { return 0.0; });
  const MetricSource g = [](const CVec&) { return HermitianForm(CMat::Identity(1, 1)); };
  try {
    bd_psh_construct(lam, 0.5, 1.0, g, {make_point({0.0}), make_point({0.5})});
    FAIL() << "expected construction failure";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::construction_failure);
  }
}

TEST(BdPsh, PolydiskLogKernel) {
  const Domain p = make_polydisk({1.0, 1.0});
  const Kernel k = closed_form_kernel(p);
  const auto grid = sample_interior(p, 500, 2);
  const auto rep = bd_psh_construct(log_kernel_potential(k), 0.5, 2.0, bergman_metric_source(k), grid);
  EXPECT_GE(rep.eta, std::ldexp(1.0, -10));
  EXPECT_GE(rep.min_margin, -1e-8);
  EXPECT_EQ(rep.grid_points, 500u);
}

TEST(Chi, SmoothAndConvex) {
  const ChiSpline chi{-2.0};
  EXPECT_EQ(chi(-3.0), 0.0);
  EXPECT_NEAR(chi(-1.0), 0.75, 1e-15);
  EXPECT_NEAR(chi.d1(-1.0), 1.5, 1e-15);
  EXPECT_NEAR(chi.d2(-1.0), 0.0, 1e-15);
  // derivatives match finite differences across the blend
  for (double t : {-1.9, -1.5, -1.2}) {
    EXPECT_NEAR(chi.d1(t), (chi(t + 1e-6) - chi(t - 1e-6)) / 2e-6, 1e-6);
    EXPECT_NEAR(chi.d2(t), (chi.d1(t + 1e-6) - chi.d1(t - 1e-6)) / 2e-6, 1e-6);
    EXPECT_GE(chi.d2(t), 0.0);
  }
}

TEST(ChartPsh, PolydiskCenterAndNearBoundary) {
  const Domain p = make_polydisk({1.0, 1.0});
  const Kernel k = closed_form_kernel(p);
  const ScalarPotential lam = log_kernel_potential(k);
  const MetricSource g = bergman_metric_source(k);
  const auto bd = bd_psh_construct(lam, 0.5, 2.0, g, sample_interior(p, 200, 5));
  double a2 = -1.0;
  for (double s : {0.0, 0.9, 0.99}) {
    const auto r = chart_psh(p, lam, make_point({s, 0.0}), 1.0, 2.0, bd.eta, g);
    EXPECT_TRUE(r.ok()) << "center " << s;
    EXPECT_LE(r.max_value, 1e-12);
    EXPECT_GE(r.min_value, -r.A2 - 1e-12);
    if (a2 < 0) a2 = r.A2;
    EXPECT_NEAR(r.A2, a2, 1e-12);  // same M, same cap
  }
}

TEST(ChartPsh, RejectsBadRadius) {
  const Domain p = make_polydisk({1.0, 1.0});
  const Kernel k = closed_form_kernel(p);
  EXPECT_THROW(chart_psh(p, log_kernel_potential(k), make_point({0.0, 0.0}), 0.0, 2.0, 0.5, bergman_metric_source(k)),
               Error);
}

namespace {

std::vector<CVec> polydisk_grid() {
  std::vector<CVec> g;
  for (double a : {0.0, 0.3, 0.6, 0.9, 0.99, 0.999})
    for (double b : {0.0, 0.3, 0.6, 0.9, 0.99, 0.999}) g.push_back(make_point({a, std::polar(b, 1.0)}));
  return g;
}

}  // namespace

TEST(Pq, PolydiskPattern) {
  const Domain p = make_polydisk({1.0, 1.0});
  const ScalarPotential lam = log_kernel_potential(closed_form_kernel(p));
  const auto grid = polydisk_grid();
  double sup = 0.0;
  for (const CVec& z : grid) sup = std::max(sup, sbg_norm(lam, z));
  const PotentialFamily fam = [&](double) { return scaled(lam, 1.0 / (sup * sup)); };
  std::vector<double> eps;
  for (int j = 1; j <= 12; ++j) eps.push_back(std::ldexp(1.0, -j));
  EXPECT_EQ(pq_certify(p, fam, {10.0, 100.0}, 1, eps, grid).overall, PqVerdict::fail);
  EXPECT_EQ(pq_certify(p, fam, {10.0, 100.0}, 2, eps, grid).overall, PqVerdict::pass);
}

TEST(Pq, EmptyExteriorIsInconclusive) {
  const Domain p = make_polydisk({1.0, 1.0});
  const ScalarPotential lam = log_kernel_potential(closed_form_kernel(p));
  const PotentialFamily fam = [&](double) { return lam; };
  const auto c = pq_certify(p, fam, {10.0}, 2, {0.5}, {make_point({0.0, 0.0})});
  EXPECT_EQ(c.overall, PqVerdict::inconclusive);
}
