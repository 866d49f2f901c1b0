#include "invmetric/bergman.hpp"
#include "invmetric/io.hpp"

#include <gtest/gtest.h>

using namespace invmetric;

namespace {

// Independent oracles typed from the textbook formulas.
cplx disk_kernel(cplx z, cplx w) { return 1.0 / (kPi * std::pow(1.0 - z * std::conj(w), 2)); }

cplx ball2_kernel(const CVec& z, const CVec& w) {
  const cplx s = 1.0 - (z[0] * std::conj(w[0]) + z[1] * std::conj(w[1]));
  return 2.0 / (kPi * kPi * s * s * s);
}

}  // namespace

TEST(ClosedForm, BallAtOrigin) {
  const CVec o = make_point({0.0, 0.0});
  EXPECT_NEAR(kernel_closed_form(make_ball(2), o, o).real(), 2.0 / (kPi * kPi), 1e-15);
}

TEST(ClosedForm, NormalizedDisk) {
  const CVec o = make_point({0.0});
  EXPECT_NEAR(kernel_closed_form(make_disk(), o, o, KernelNormalization::normalized).real(), 1.0, 1e-15);
}

TEST(ClosedForm, DiskOffDiagonal) {
  const cplx z(0.3, 0.2), w(-0.1, 0.5);
  EXPECT_LT(std::abs(kernel_closed_form(make_disk(), make_point({z}), make_point({w})) - disk_kernel(z, w)), 1e-14);
  EXPECT_NEAR(kernel_closed_form(make_disk(), make_point({0.5}), make_point({0.5})).real(), 16.0 / (9.0 * kPi), 1e-14);
}

TEST(ClosedForm, Ball2OffDiagonal) {
  const CVec z = make_point({cplx(0.2, 0.1), -0.3}), w = make_point({0.4, cplx(0, 0.2)});
  EXPECT_LT(std::abs(kernel_closed_form(make_ball(2), z, w) - ball2_kernel(z, w)), 1e-13);
}

TEST(ClosedForm, PolydiskFactorizes) {
  const CVec z = make_point({0.3, cplx(0, 0.4)}), w = make_point({-0.2, 0.1});
  const cplx expect = disk_kernel(z[0], w[0]) * disk_kernel(z[1], w[1]);
  EXPECT_LT(std::abs(kernel_closed_form(make_polydisk({1.0, 1.0}), z, w) - expect), 1e-13);
}

TEST(ClosedForm, EllipsoidAtOrigin) {
  // 1 / vol, vol = pi^2 / (2 w1 w2)
  const CVec o = make_point({0.0, 0.0});
  EXPECT_NEAR(kernel_closed_form(make_ellipsoid({1.0, 4.0}), o, o).real(), 8.0 / (kPi * kPi), 1e-14);
}

TEST(ClosedForm, Hermitian) {
  const Domain b = make_ball(2);
  const CVec z = make_point({cplx(0.2, 0.1), -0.3}), w = make_point({0.4, cplx(0, 0.2)});
  EXPECT_LT(std::abs(kernel_closed_form(b, z, w) - std::conj(kernel_closed_form(b, w, z))), 1e-14);
}

TEST(ClosedForm, UnsupportedWithoutFormula) {
  EXPECT_THROW(closed_form_kernel(make_complex_lp_body(1.5, {1.0, 1.0})), Error);
}

TEST(Transform, IdentityLeavesKernelUnchanged) {
  const Kernel k = closed_form_kernel(make_ball(2));
  const Kernel t = kernel_transform(k, identity_map(2));
  const CVec z = make_point({0.1, 0.2}), w = make_point({-0.3, 0.1});
  EXPECT_LT(std::abs(t(z, w) - k(z, w)), 1e-15);
}

TEST(Transform, ScaledDisk) {
  // z -> 2z maps the unit disk onto the radius-2 disk; B(0, 0) scales by 1/4.
  CMat l = CMat::Identity(1, 1) * 2.0;
  const Kernel t = kernel_transform(closed_form_kernel(make_disk()), affine_map(make_point({0.0}), l));
  const CVec o = make_point({0.0});
  EXPECT_NEAR(t.diagonal(o), 1.0 / (4.0 * kPi), 1e-15);
  EXPECT_NEAR(kernel_closed_form(make_disk(2.0), o, o).real(), 1.0 / (4.0 * kPi), 1e-15);
}

TEST(Transform, OmegaPsiDeterminantRule) {
  const Domain om = make_omega_psi();
  const HoloMap f = omega_psi_map();
  const Kernel kb = closed_form_kernel(make_polydisk({1.0, 1.0}));
  const Kernel ko = closed_form_kernel(om);
  for (double s : {0.0, 0.3, 0.8}) {
    const CVec z = make_point({0.3, cplx(s, 0.1)});
    const double psi = std::abs(std::exp(-(1.0 + z[1]) / (1.0 - z[1])));
    EXPECT_NEAR(ko.diagonal(f(z)) * psi * psi / kb.diagonal(z), 1.0, 1e-12);
  }
}

TEST(Numeric, DegreeZeroIsConstant) {
  // 1 / area, with the area from Halton quadrature
  const Kernel k = model_kernel(fit_kernel_numeric(make_disk(), 0, 20000, 1));
  const cplx k0 = k(make_point({0.0}), make_point({0.0}));
  EXPECT_EQ(k(make_point({0.3}), make_point({-0.5})), k0);
  EXPECT_NEAR(k0.real() * kPi, 1.0, 2e-3);
  EXPECT_NEAR(std::abs(kernel_derivatives(k, make_point({0.3}), {0}, {})), 0.0, 1e-14);
}

TEST(Numeric, DiskDegree30) {
  const Kernel k = model_kernel(fit_kernel_numeric(make_disk(), 30, 200000, 1));
  double worst = 0.0;
  for (double a : {0.0, 0.3, 0.7})
    for (double t : {0.0, 1.0, 2.5}) {
      const cplx z = std::polar(a, t), w = std::polar(0.7 - 0.5 * a, -t);
      worst = std::max(worst, std::abs(k(make_point({z}), make_point({w})) / disk_kernel(z, w) - 1.0));
    }
  EXPECT_LT(worst, 1e-3);
}

TEST(Numeric, DiskDegree30DenseQuadrature) {
  const Kernel k = model_kernel(fit_kernel_numeric(make_disk(), 30, 1000000, 1));
  EXPECT_NEAR(k.diagonal(make_point({0.5})) / (16.0 / (9.0 * kPi)), 1.0, 1e-4);
}

TEST(Numeric, PolydiskTensorDegree20) {
  const Domain p = make_polydisk({1.0, 1.0});
  const Kernel k = model_kernel(fit_kernel_numeric(p, 20, 200000, 1));
  double worst = 0.0;
  for (double a : {0.0, 0.25, 0.5})
    for (double b : {0.0, 0.5}) {
      const CVec z = make_point({std::polar(a, 0.4), std::polar(b, -1.0)}), w = make_point({std::polar(b, 2.0), a});
      worst = std::max(worst, std::abs(k(z, w) / (disk_kernel(z[0], w[0]) * disk_kernel(z[1], w[1])) - 1.0));
    }
  EXPECT_LT(worst, 1e-6);
}

TEST(Numeric, SeedReproducible) {
  const KernelModel a = fit_kernel_numeric(make_ball(2), 6, 20000, 3);
  const KernelModel b = fit_kernel_numeric(make_ball(2), 6, 20000, 3);
  EXPECT_EQ((a.coeffs - b.coeffs).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Numeric, ModelJsonRoundTrip) {
  const KernelModel a = fit_kernel_numeric(make_ball(2), 4, 20000, 3);
  const KernelModel b = kernel_model_from_json(json::parse(kernel_model_to_json(a).dump()));
  const Kernel ka = model_kernel(a), kb = model_kernel(b);
  const CVec z = make_point({0.1, cplx(0.2, 0.3)});
  EXPECT_EQ(ka(z, z), kb(z, z));
}

TEST(Derivatives, JetsMatchFiniteDifferences) {
  const Kernel k = closed_form_kernel(make_ball(2));
  const CVec z = make_point({cplx(0.2, 0.1), -0.3});
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      EXPECT_LT(std::abs(kernel_derivatives(k, z, {i}, {j}) - kernel_derivative_fd(k, z, i, j)), 1e-6);
}

TEST(Derivatives, DiskSecondOrderClosedForm) {
  // K = 1/(pi (1 - z w*)^2): d_z d_zbar K(z, z) = (2 + 4|z|^2) / (pi (1 - |z|^2)^4)
  const Kernel k = closed_form_kernel(make_disk());
  const double r2 = 0.09;
  const cplx v = kernel_derivatives(k, make_point({0.3}), {0}, {0});
  EXPECT_NEAR(v.real(), (2.0 + 4.0 * r2) / (kPi * std::pow(1.0 - r2, 4)), 1e-12);
  // d_z^2 K(z, z) at 0 vanishes (only zbar-dependence through w)
  EXPECT_NEAR(std::abs(kernel_derivatives(k, make_point({0.0}), {0, 0}, {})), 0.0, 1e-14);
}

TEST(Derivatives, OrderAboveTwoUnsupported) {
  const Kernel k = closed_form_kernel(make_disk());
  EXPECT_THROW(kernel_derivatives(k, make_point({0.0}), {0, 0, 0}, {}), Error);
}
