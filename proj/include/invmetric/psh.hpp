#pragma once

// Scalar potentials and their Levi forms, the self-bounded-gradient norm,
// the exponential construction -exp(-eta lambda), chart psh functions and
// grid certificates for McNeal's condition (P~_q).

#include "invmetric/green.hpp"
#include "invmetric/metrics.hpp"

#include <Eigen/Cholesky>

namespace invmetric {

enum class Provenance { analytic, log_kernel, finite_difference };

inline const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::analytic: return "analytic";
    case Provenance::log_kernel: return "log-kernel";
    case Provenance::finite_difference: return "finite-difference";
  }
  return "?";
}

// A real C^2 function on a domain. gradient returns the covector
// (d lambda / dz_j)_j. Missing evaluators are filled by finite differences.
struct ScalarPotential {
  int dim = 0;
  std::string name;
  std::function<double(const CVec&)> value;
  std::function<CVec(const CVec&)> gradient;
  std::function<HermitianForm(const CVec&)> levi;
  Provenance provenance = Provenance::finite_difference;
  // Where the stencil may be evaluated; empty means everywhere.
  std::function<bool(const CVec&)> inside;
};

namespace detail {

inline constexpr double kLeviStep = 1e-4;

inline double stencil_value(const ScalarPotential& p, const CVec& x) {
  if (p.inside && !p.inside(x)) throw Error(ErrorCode::boundary_proximity, "stencil point leaves the domain");
  double v;
  try {
    v = p.value(x);
  } catch (const Error&) {
    throw Error(ErrorCode::boundary_proximity, "potential evaluation failed at a stencil point");
  }
  if (!std::isfinite(v)) throw Error(ErrorCode::boundary_proximity, "non-finite potential at a stencil point");
  return v;
}

// Real coordinate k of C^d: even k is Re z_{k/2}, odd k is Im z_{k/2}.
inline CVec real_shift(const CVec& z, int k, double h) {
  CVec x = z;
  x[k / 2] += (k % 2 == 0) ? cplx(h, 0) : cplx(0, h);
  return x;
}

inline CVec fd_gradient(const ScalarPotential& p, const CVec& z, double h = kLeviStep) {
  CVec g(z.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    const int kx = static_cast<int>(2 * j), ky = kx + 1;
    const double fx = (stencil_value(p, real_shift(z, kx, h)) - stencil_value(p, real_shift(z, kx, -h))) / (2 * h);
    const double fy = (stencil_value(p, real_shift(z, ky, h)) - stencil_value(p, real_shift(z, ky, -h))) / (2 * h);
    g[j] = 0.5 * cplx(fx, -fy);
  }
  return g;
}

// d_i dbar_j f = (f_xx + f_yy)/4 + i (f_{x_i y_j} - f_{y_i x_j})/4.
inline CMat fd_levi(const ScalarPotential& p, const CVec& z, double h = kLeviStep) {
  const int n = static_cast<int>(2 * z.size());
  RMat hess(n, n);
  const double f0 = stencil_value(p, z);
  for (int a = 0; a < n; ++a) {
    hess(a, a) = (stencil_value(p, real_shift(z, a, h)) - 2 * f0 + stencil_value(p, real_shift(z, a, -h))) / (h * h);
    for (int b = a + 1; b < n; ++b) {
      auto f = [&](double sa, double sb) { return stencil_value(p, real_shift(real_shift(z, a, sa * h), b, sb * h)); };
      hess(a, b) = hess(b, a) = (f(1, 1) - f(1, -1) - f(-1, 1) + f(-1, -1)) / (4 * h * h);
    }
  }
  const auto d = z.size();
  CMat l(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) {
      const auto xi = 2 * i, yi = xi + 1, xj = 2 * j, yj = xj + 1;
      l(i, j) = 0.25 * cplx(hess(xi, xj) + hess(yi, yj), hess(xi, yj) - hess(yi, xj));
    }
  return l;
}

}  // namespace detail

inline HermitianForm levi_form(const ScalarPotential& p, const CVec& z) {
  if (z.size() != p.dim) throw Error(ErrorCode::invalid_argument, "levi_form: dimension mismatch");
  if (p.levi) return p.levi(z);
  return HermitianForm(detail::fd_levi(p, z));
}

inline CVec complex_gradient(const ScalarPotential& p, const CVec& z) {
  if (z.size() != p.dim) throw Error(ErrorCode::invalid_argument, "complex_gradient: dimension mismatch");
  if (p.gradient) return p.gradient(z);
  return detail::fd_gradient(p, z);
}

// Value-only potential; gradient and Levi form by finite differences.
inline ScalarPotential fd_potential(int dim, std::string name, std::function<double(const CVec&)> f,
                                    std::function<bool(const CVec&)> inside = {}) {
  ScalarPotential p;
  p.dim = dim;
  p.name = std::move(name);
  p.value = std::move(f);
  p.inside = std::move(inside);
  p.provenance = Provenance::finite_difference;
  return p;
}

// lambda(z) = log K(z, z); derivatives from exact kernel jets.
inline ScalarPotential log_kernel_potential(const Kernel& k) {
  ScalarPotential p;
  p.dim = k.dim;
  p.name = "log K[" + k.name + "]";
  p.provenance = Provenance::log_kernel;
  p.value = [k](const CVec& z) {
    const double v = k.diagonal(z);
    if (!(v > 0)) throw Error(ErrorCode::numerical_degeneracy, "kernel is not positive at z");
    return std::log(v);
  };
  p.gradient = [k](const CVec& z) {
    CVec g(k.dim);
    const CVec zero = CVec::Zero(k.dim);
    for (int j = 0; j < k.dim; ++j) {
      CVec e = CVec::Zero(k.dim);
      e[j] = 1.0;
      g[j] = log(kernel_line_jet(k, z, e, zero))(1, 0);
    }
    return g;
  };
  p.levi = [k](const CVec& z) { return HermitianForm(log_kernel_hessian(k, z)); };
  return p;
}

// t * lambda with exact derivative bookkeeping.
inline ScalarPotential scaled(const ScalarPotential& p, double t) {
  ScalarPotential q = p;
  q.name = std::to_string(t) + "*" + p.name;
  q.value = [p, t](const CVec& z) { return t * p.value(z); };
  q.gradient = [p, t](const CVec& z) { return CVec(t * complex_gradient(p, z)); };
  q.levi = [p, t](const CVec& z) { return HermitianForm(t * levi_form(p, z).matrix()); };
  if (q.provenance == Provenance::finite_difference) q.provenance = Provenance::analytic;
  return q;
}

// ||d lambda||_{L(lambda)} = sqrt(p^H H^{-1} p): the dual norm of
// X -> sum p_j X_j under L(X, X) = X^T H conj(X). +inf when H is not
// positive definite.
inline double sbg_norm(const HermitianForm& h, const CVec& p) {
  const double scale = std::max(1e-300, std::abs(h.max_eigenvalue()));
  if (!(h.min_eigenvalue() > 1e-14 * scale)) return kInf;
  Eigen::LLT<CMat> llt(h.matrix());
  if (llt.info() != Eigen::Success) return kInf;
  const CVec x = llt.solve(p);
  return std::sqrt(std::max(0.0, p.dot(x).real()));
}

inline double sbg_norm(const ScalarPotential& pot, const CVec& z) {
  return sbg_norm(levi_form(pot, z), complex_gradient(pot, z));
}

// ---------------------------------------------------------------------------
// u = -exp(-eta lambda)

struct BdPshReport {
  ScalarPotential u;
  double eta = 0.0;
  int attempts = 0;
  double min_margin = kInf;  // min eigenvalue of L(u) - (eta/2C) e^{-eta lambda} g
  std::size_t grid_points = 0;
  // Measured preconditions over the grid.
  double max_gradient_norm = 0.0;  // ||d lambda||_g
  double bilipschitz = 1.0;        // smallest C' with (1/C')g <= L(lambda) <= C' g
};

namespace detail {

// Generalized eigenvalue range of L against g: [min, max] of L(v,v)/g(v,v).
inline std::pair<double, double> relative_spectrum(const HermitianForm& l, const HermitianForm& g) {
  Eigen::GeneralizedSelfAdjointEigenSolver<CMat> es(l.matrix(), g.matrix());
  return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

inline CMat outer(const CVec& p) { return p * p.adjoint(); }

}  // namespace detail

inline ScalarPotential exp_potential(const ScalarPotential& lambda, double eta) {
  ScalarPotential u;
  u.dim = lambda.dim;
  u.name = "-exp(-" + std::to_string(eta) + "*" + lambda.name + ")";
  u.provenance = Provenance::analytic;
  u.inside = lambda.inside;
  u.value = [lambda, eta](const CVec& z) { return -std::exp(-eta * lambda.value(z)); };
  u.gradient = [lambda, eta](const CVec& z) {
    return CVec(eta * std::exp(-eta * lambda.value(z)) * complex_gradient(lambda, z));
  };
  u.levi = [lambda, eta](const CVec& z) {
    const CVec p = complex_gradient(lambda, z);
    const CMat h = levi_form(lambda, z).matrix();
    return HermitianForm(eta * std::exp(-eta * lambda.value(z)) * (h - eta * detail::outer(p)));
  };
  return u;
}

// Starts at eta and halves up to 10 times until the Levi inequality
// L(u) >= (eta/2C) e^{-eta lambda} g holds at every grid point.
inline BdPshReport bd_psh_construct(const ScalarPotential& lambda, double eta, double c, const MetricSource& g,
                                    const std::vector<CVec>& grid) {
  if (!(eta > 0) || !(c > 0)) throw Error(ErrorCode::invalid_argument, "bd_psh_construct: eta and C must be positive");
  if (grid.empty()) throw Error(ErrorCode::empty_sample, "bd_psh_construct: empty grid");
  struct PointData {
    double lam;
    CVec p;
    CMat h;
    HermitianForm g;
  };
  std::vector<PointData> data;
  data.reserve(grid.size());
  BdPshReport rep;
  rep.grid_points = grid.size();
  for (const CVec& z : grid) {
    PointData pd{lambda.value(z), complex_gradient(lambda, z), levi_form(lambda, z).matrix(), g(z)};
    rep.max_gradient_norm = std::max(rep.max_gradient_norm, sbg_norm(pd.g, pd.p));
    const auto [lo, hi] = detail::relative_spectrum(HermitianForm(pd.h), pd.g);
    rep.bilipschitz = std::max({rep.bilipschitz, hi, lo > 0 ? 1.0 / lo : kInf});
    data.push_back(std::move(pd));
  }
  for (int attempt = 0; attempt <= 10; ++attempt, eta *= 0.5) {
    rep.attempts = attempt + 1;
    rep.eta = eta;
    double margin = kInf;
    for (const auto& pd : data) {
      const double e = std::exp(-eta * pd.lam);
      const CMat lu = eta * e * (pd.h - eta * detail::outer(pd.p));
      const CMat diff = lu - (eta / (2 * c)) * e * pd.g.matrix();
      margin = std::min(margin, HermitianForm(diff).min_eigenvalue());
    }
    rep.min_margin = margin;
    if (margin >= -1e-8) {
      rep.u = exp_potential(lambda, eta);
      return rep;
    }
  }
  throw Error(ErrorCode::construction_failure,
              "bd_psh_construct: no eta down to " + std::to_string(rep.eta) + " satisfies the Levi inequality (margin " +
                  std::to_string(rep.min_margin) + ")");
}

// ---------------------------------------------------------------------------
// Chart psh functions phi = -chi(0) + chi(psi), psi = -M exp(eta(lambda(zeta) - lambda)).

// C^2 convex spline: 0 up to t0, then the quartic 1.5 s^3 - 0.75 s^4
// (s = t - t0, so chi' rises from 0 to 1.5 with chi'' vanishing at both
// ends), then affine with slope 1.5 from t1 = t0 + 1.
struct ChiSpline {
  double t0 = -2.0;
  double t1() const { return t0 + 1.0; }
  double operator()(double t) const {
    const double s = t - t0;
    if (s <= 0) return 0.0;
    if (s <= 1) return s * s * s * (1.5 - 0.75 * s);
    return 0.75 + 1.5 * (s - 1.0);
  }
  double d1(double t) const {
    const double s = t - t0;
    if (s <= 0) return 0.0;
    if (s <= 1) return s * s * (4.5 - 3.0 * s);
    return 1.5;
  }
  double d2(double t) const {
    const double s = t - t0;
    if (s <= 0 || s >= 1) return 0.0;
    return 9.0 * s * (1.0 - s);
  }
};

struct ChartPshOptions {
  int ball_samples = 500;
  int global_samples = 500;
  std::uint64_t seed = 1;
  int max_doublings = 40;
};

struct ChartPshReport {
  ScalarPotential phi;
  CVec center;
  double radius = 0.0;
  double M = 0.0;
  double A2 = 0.0;  // chi(0), so that -A2 <= phi <= 0
  double t0 = 0.0, t1 = 0.0;
  std::size_t ball_points = 0, global_points = 0;
  double ball_margin = kInf;  // min eigenvalue of L(phi) - g on the ball samples
  double max_value = -kInf, min_value = kInf;
  bool range_ok = false, levi_ok = false;
  bool ok() const { return range_ok && levi_ok; }
};

namespace detail {

// Points certified inside the metric ball B_g(zeta; r): the straight segment
// from zeta has g-length below r (an upper bound for the distance).
inline std::vector<CVec> metric_ball_samples(const Domain& spec, const MetricSource& g, const CVec& zeta, double r,
                                             int n, std::uint64_t seed) {
  const int d = spec.dim();
  // Candidates are drawn from the g(zeta)-ball of radius 1.5 r, so that the
  // proposal adapts to anisotropic metrics near the boundary.
  const HermitianForm g0 = g(zeta);
  CMat frame = g0.eigenvectors().conjugate();
  for (int k = 0; k < d; ++k) frame.col(k) /= std::sqrt(std::max(1e-300, g0.singular_values()[k]));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud;
  std::vector<CVec> out;
  const long budget = 40L * n;
  for (long t = 0; t < budget && static_cast<int>(out.size()) < n; ++t) {
    CVec u(d);
    for (int j = 0; j < d; ++j) u[j] = cplx(nd(rng), nd(rng));
    u /= u.norm();
    const double rad = 1.5 * r * std::pow(ud(rng), 1.0 / (2.0 * d));
    const CVec x = zeta + rad * (frame * u);
    if (!contains(spec, x)) continue;
    std::vector<CVec> seg(17);
    for (int k = 0; k <= 16; ++k) seg[static_cast<std::size_t>(k)] = zeta + (k / 16.0) * (x - zeta);
    if (polyline_length(g, seg) < r) out.push_back(x);
  }
  return out;
}

}  // namespace detail

inline ChartPshReport chart_psh(const Domain& spec, const ScalarPotential& lambda, const CVec& zeta, double r, double c,
                                double eta, const MetricSource& g, const ChartPshOptions& opts = {}) {
  if (!(r > 0)) throw Error(ErrorCode::invalid_radius, "chart_psh: radius must be positive");
  if (!contains(spec, zeta)) throw Error(ErrorCode::invalid_argument, "chart_psh: center outside the domain");
  const auto ball = detail::metric_ball_samples(spec, g, zeta, r, opts.ball_samples, opts.seed);
  if (ball.empty()) throw Error(ErrorCode::invalid_radius, "chart_psh: metric-ball sampling is empty");

  ChartPshReport rep;
  rep.center = zeta;
  rep.radius = r;
  rep.ball_points = ball.size();
  const double lz = lambda.value(zeta);

  // Per-point pieces of L(psi) = M e^{eta(lz - lambda)} eta (H - eta p p^H).
  struct Piece {
    double w;  // e^{eta(lz - lambda)}
    CVec p;
    CMat base;  // eta (H - eta p p^H)
    CMat g;
  };
  std::vector<Piece> pieces;
  for (const CVec& z : ball) {
    const CVec p = complex_gradient(lambda, z);
    pieces.push_back({std::exp(eta * (lz - lambda.value(z))), p,
                      eta * (levi_form(lambda, z).matrix() - eta * detail::outer(p)), g(z).matrix()});
  }
  double m = 1.0;
  bool found = false;
  for (int k = 0; k < opts.max_doublings && !found; ++k, m *= 2.0) {
    found = std::all_of(pieces.begin(), pieces.end(), [&](const Piece& pc) {
      return HermitianForm(CMat(m * pc.w * pc.base - pc.g)).min_eigenvalue() >= -1e-8;
    });
    if (found) break;
  }
  if (!found) throw Error(ErrorCode::construction_failure, "chart_psh: no M makes L(psi) >= g on the ball samples");
  rep.M = m;
  ChiSpline chi;
  rep.t1 = -m * std::exp(2.0 * c * eta * r);
  rep.t0 = rep.t1 - 1.0;
  chi.t0 = rep.t0;
  rep.A2 = chi(0.0);

  ScalarPotential phi;
  phi.dim = lambda.dim;
  phi.name = "chart-psh";
  phi.provenance = Provenance::analytic;
  phi.inside = lambda.inside;
  const double a2 = rep.A2;
  auto psi = [lambda, lz, eta, m](const CVec& z) { return -m * std::exp(eta * (lz - lambda.value(z))); };
  phi.value = [psi, chi, a2](const CVec& z) { return -a2 + chi(psi(z)); };
  phi.gradient = [lambda, psi, chi, eta](const CVec& z) {
    const double s = psi(z);
    return CVec(chi.d1(s) * (-eta * s) * complex_gradient(lambda, z));
  };
  phi.levi = [lambda, psi, chi, eta](const CVec& z) {
    const double s = psi(z);
    const CVec p = complex_gradient(lambda, z);
    const CMat lpsi = (-s) * eta * (levi_form(lambda, z).matrix() - eta * detail::outer(p));
    const CVec dpsi = -eta * s * p;
    return HermitianForm(CMat(chi.d1(s) * lpsi + chi.d2(s) * detail::outer(dpsi)));
  };
  rep.phi = phi;

  for (std::size_t i = 0; i < ball.size(); ++i) {
    const double s = -m * pieces[i].w;
    const CVec dpsi = -eta * s * pieces[i].p;
    const CMat lphi = chi.d1(s) * (m * pieces[i].w * pieces[i].base) + chi.d2(s) * detail::outer(dpsi);
    rep.ball_margin = std::min(rep.ball_margin, HermitianForm(CMat(lphi - pieces[i].g)).min_eigenvalue());
  }
  rep.levi_ok = rep.ball_margin >= -1e-8;

  auto global = sample_interior(spec, static_cast<std::size_t>(opts.global_samples), opts.seed + 1);
  global.push_back(zeta);
  for (const CVec& z : ball) global.push_back(z);
  rep.global_points = global.size();
  for (const CVec& z : global) {
    const double v = phi.value(z);
    rep.max_value = std::max(rep.max_value, v);
    rep.min_value = std::min(rep.min_value, v);
  }
  rep.range_ok = rep.max_value <= 1e-12 && rep.min_value >= -rep.A2 - 1e-12;
  return rep;
}

// ---------------------------------------------------------------------------
// Condition (P~_q) on a grid.

enum class PqVerdict { pass, fail, inconclusive };

inline const char* to_string(PqVerdict v) {
  switch (v) {
    case PqVerdict::pass: return "pass";
    case PqVerdict::fail: return "fail";
    case PqVerdict::inconclusive: return "inconclusive";
  }
  return "?";
}

struct PqEntry {
  double M = 0.0;
  double epsilon = 0.0;  // compact = {boundary distance >= epsilon}
  std::size_t exterior_points = 0;
  double sigma_min = kInf, sigma_max = -kInf;  // sigma_{d-q+1} outside the compact
  double max_norm = 0.0;                       // ||d lambda_M||_{L(lambda_M)} outside the compact
  PqVerdict verdict = PqVerdict::inconclusive;
};

struct PqCertificate {
  int q = 0;
  std::vector<double> epsilons;
  std::vector<PqEntry> entries;
  PqVerdict overall = PqVerdict::inconclusive;
};

using PotentialFamily = std::function<ScalarPotential(double M)>;

// For each M, tries the compacts {delta >= eps} from the largest exterior
// down and keeps the first that certifies; otherwise reports the last tried.
inline PqCertificate pq_certify(const Domain& spec, const PotentialFamily& family, const std::vector<double>& ms, int q,
                                std::vector<double> epsilons, const std::vector<CVec>& grid, double tol = 1e-8) {
  const int d = spec.dim();
  if (q < 1 || q > d) throw Error(ErrorCode::invalid_argument, "pq_certify: q out of range");
  std::sort(epsilons.begin(), epsilons.end(), std::greater<>());
  PqCertificate cert;
  cert.q = q;
  cert.epsilons = epsilons;
  std::vector<double> delta(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) delta[i] = boundary_distance(spec, grid[i]);

  bool any_fail = false, all_pass = !ms.empty();
  for (double mval : ms) {
    const ScalarPotential lam = family(mval);
    std::vector<double> sig(grid.size()), nrm(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const HermitianForm h = levi_form(lam, grid[i]);
      sig[i] = h.sigma(d - q + 1);
      nrm[i] = sbg_norm(h, complex_gradient(lam, grid[i]));
    }
    PqEntry best;
    best.M = mval;
    for (double eps : epsilons) {
      PqEntry e;
      e.M = mval;
      e.epsilon = eps;
      for (std::size_t i = 0; i < grid.size(); ++i) {
        if (delta[i] >= eps) continue;
        ++e.exterior_points;
        e.sigma_min = std::min(e.sigma_min, sig[i]);
        e.sigma_max = std::max(e.sigma_max, sig[i]);
        e.max_norm = std::max(e.max_norm, nrm[i]);
      }
      if (e.exterior_points == 0) e.verdict = PqVerdict::inconclusive;
      else if (e.max_norm <= 1 + tol && e.sigma_min >= mval - tol) e.verdict = PqVerdict::pass;
      else e.verdict = PqVerdict::fail;
      if (e.exterior_points > 0 || best.exterior_points == 0) best = e;
      if (e.verdict == PqVerdict::pass) break;
    }
    cert.entries.push_back(best);
    any_fail = any_fail || best.verdict == PqVerdict::fail;
    all_pass = all_pass && best.verdict == PqVerdict::pass;
  }
  cert.overall = any_fail ? PqVerdict::fail : all_pass ? PqVerdict::pass : PqVerdict::inconclusive;
  return cert;
}

}  // namespace invmetric
