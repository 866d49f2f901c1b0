#pragma once

// Two-sided numerical bounds for the Kobayashi metric k(z; v).
//
// Upper: polynomial analytic disks phi(zeta) = z + s (zeta v + sum_{k>=2}
// zeta^k c_k) kept inside the domain on a polar grid; k <= |v| / (shrink * s).
// Lower: polynomials f with f(z) = 0 and |f| <= 1 on samples (a Caratheodory
// competitor); k >= c >= |f'(z) v| / sup|f|.

#include "invmetric/domain.hpp"
#include "invmetric/optimize.hpp"

#include <iostream>

namespace invmetric {

struct KobayashiOptions {
  int disk_degree = 8;
  int radial = 32;           // certification grid
  int angular = 64;
  int coarse_radial = 12;    // optimization grid
  int coarse_angular = 24;
  double shrink = 0.999;
  int restarts = 8;
  int evals_per_restart = 1200;
  int poly_degree = 8;       // lower bound
  int interior_samples = 400;
  int boundary_samples = 2000;
  int lawson_iterations = 200;
  std::uint64_t seed = 1;
};

struct KobayashiEstimate {
  double lower = 0.0;
  double upper = kInf;
  double slack = 0.0;       // sampling slack applied to the lower bound
  bool clamped = false;     // lower was above upper and got clamped
  std::string method = "polynomial-disk/polynomial-caratheodory";
  int disk_degree = 0;
  int poly_degree = 0;
  double midpoint() const { return 0.5 * (lower + upper); }
};

namespace detail {

inline std::vector<cplx> polar_grid(int nr, int na, double radius) {
  std::vector<cplx> g;
  for (int i = 1; i <= nr; ++i) {
    const double r = radius * i / nr;
    for (int k = 0; k < na; ++k) g.push_back(std::polar(r, 2.0 * kPi * k / na));
  }
  return g;
}

// Largest s with z + s w(zeta) inside for every grid zeta, where
// w(zeta) = zeta u + sum_{k>=2} zeta^k c_k.
inline double disk_scale(const Domain& spec, const CVec& z, const CVec& u, const std::vector<CVec>& c,
                         const std::vector<cplx>& grid) {
  double s = kInf;
  for (cplx zeta : grid) {
    CVec w = zeta * u;
    cplx p = zeta;
    for (const CVec& ck : c) {
      p *= zeta;
      w += p * ck;
    }
    if (w.norm() == 0.0) continue;
    s = std::min(s, exit_time(spec, z, w));
  }
  return s;
}

// Smooth lower envelope -(1/beta) log sum exp(-beta t_j) of the exit times.
inline double disk_scale_soft(const Domain& spec, const CVec& z, const CVec& u, const std::vector<CVec>& c,
                              const std::vector<cplx>& grid, double beta) {
  std::vector<double> ts;
  ts.reserve(grid.size());
  double tmin = kInf;
  for (cplx zeta : grid) {
    CVec w = zeta * u;
    cplx p = zeta;
    for (const CVec& ck : c) {
      p *= zeta;
      w += p * ck;
    }
    if (w.norm() == 0.0) continue;
    const double t = exit_time(spec, z, w);
    ts.push_back(t);
    tmin = std::min(tmin, t);
  }
  if (!std::isfinite(tmin)) return tmin;
  double acc = 0.0;
  for (double t : ts) acc += std::exp(-beta * (t - tmin));
  return tmin - std::log(acc) / beta;
}

inline std::vector<CVec> unpack(const RVec& x, int d) {
  std::vector<CVec> c(static_cast<std::size_t>(x.size() / (2 * d)), CVec(d));
  for (std::size_t k = 0; k < c.size(); ++k)
    for (int j = 0; j < d; ++j) {
      const auto o = static_cast<Eigen::Index>(2 * (k * d + j));
      c[k][j] = cplx(x[o], x[o + 1]);
    }
  return c;
}

}  // namespace detail

// Certified (on the grid, for the disk shrunk by opts.shrink) upper bound.
inline double kobayashi_upper(const Domain& spec, const CVec& z, const CVec& v, const KobayashiOptions& opts = {}) {
  if (!contains(spec, z)) throw Error(ErrorCode::invalid_argument, "kobayashi_upper: point outside domain");
  const double nv = v.norm();
  if (nv == 0.0) return 0.0;
  const int d = spec.dim();
  const CVec u = detail::canonical_direction(v);
  const auto coarse = detail::polar_grid(opts.coarse_radial, opts.coarse_angular, 1.0);
  const auto fine = detail::polar_grid(opts.radial, opts.angular, opts.shrink);
  const int m = std::max(1, opts.disk_degree);
  const auto nparam = static_cast<Eigen::Index>(2 * d * (m - 1));

  // Natural length scale: the linear disk.
  const double s0 = detail::disk_scale(spec, z, u, {}, coarse);
  if (!(s0 > 0) || !std::isfinite(s0)) throw Error(ErrorCode::infeasible, "kobayashi_upper: no feasible disk");

  double best_s = 0.0;
  std::vector<CVec> best_c;
  if (nparam == 0) {
    best_s = detail::disk_scale(spec, z, u, {}, fine);
  } else {
    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> nd;
    // Soft minimum over the grid smooths the max-min landscape for the
    // simplex search; the final certificate uses the hard minimum.
    const double beta = 200.0 / s0;
    auto objective = [&](const RVec& x) {
      return -detail::disk_scale_soft(spec, z, u, detail::unpack(x, d), coarse, beta);
    };
    RVec xbest = RVec::Zero(nparam);
    double fbest = -detail::disk_scale(spec, z, u, {}, coarse);
    for (int r = 0; r < opts.restarts; ++r) {
      RVec x0 = xbest;
      if (r > 0)
        for (Eigen::Index i = 0; i < nparam; ++i) x0[i] += 0.1 * nd(rng) / (1.0 + static_cast<double>(i / (2 * d)));
      const auto res = nelder_mead(objective, x0, 0.1 * s0 / std::max(s0, 1.0), opts.evals_per_restart);
      const double hard = -detail::disk_scale(spec, z, u, detail::unpack(res.x, d), coarse);
      if (hard < fbest) {
        fbest = hard;
        xbest = res.x;
      }
    }
    best_c = detail::unpack(xbest, d);
    best_s = detail::disk_scale(spec, z, u, best_c, fine);
    best_s = std::max(best_s, detail::disk_scale(spec, z, u, {}, fine));
  }
  if (!(best_s > 0)) throw Error(ErrorCode::infeasible, "kobayashi_upper: no feasible disk");
  // phi(shrink * zeta) has derivative shrink * s * u at 0.
  return nv / (opts.shrink * best_s);
}

namespace detail {

// Scaled monomials ((x - z) / rho)^alpha, 1 <= |alpha| <= p.
inline CVec centered_monomials(const CVec& x, const CVec& z, double rho, const std::vector<std::vector<int>>& idx) {
  const CVec y = (x - z) / rho;
  CVec m(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    cplx acc = 1.0;
    for (Eigen::Index j = 0; j < y.size(); ++j)
      for (int e = 0; e < idx[i][static_cast<std::size_t>(j)]; ++e) acc *= y[j];
    m[static_cast<Eigen::Index>(i)] = acc;
  }
  return m;
}

// Points just inside the boundary: exits along random rays from z and from
// random interior base points, pulled back by the factor frac.
inline std::vector<CVec> boundary_shell(const Domain& spec, const CVec& z, int n, std::uint64_t seed, double frac) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  const int d = spec.dim();
  const auto bases = sample_interior(spec, static_cast<std::size_t>(n / 2), seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<CVec> out;
  for (int i = 0; i < n; ++i) {
    const CVec& x = (i % 2 == 0 || bases.empty()) ? z : bases[static_cast<std::size_t>(i / 2) % bases.size()];
    CVec u(d);
    for (int j = 0; j < d; ++j) u[j] = cplx(nd(rng), nd(rng));
    u /= u.norm();
    const double t = exit_time(spec, x, u);
    if (std::isfinite(t)) out.push_back(x + frac * t * u);
  }
  return out;
}

}  // namespace detail

struct CaratheodoryResult {
  double value = 0.0;      // lower bound after slack
  double raw = 0.0;        // 1 / max over optimization samples
  double slack = 0.0;
  CVec coefficients;
};

// Lawson iteratively reweighted least squares for min_a max_k |A a|_k subject
// to c^T a = 1, over degrees 1, 2, 4, ..., p. Each polynomial is normalized by
// its maximum on a denser verification set times 1.01; the best bound wins.
inline CaratheodoryResult caratheodory_lower(const Domain& spec, const CVec& z, const CVec& v,
                                             const KobayashiOptions& opts = {}) {
  CaratheodoryResult out;
  if (!contains(spec, z)) throw Error(ErrorCode::invalid_argument, "caratheodory_lower: point outside domain");
  const double nv = v.norm();
  if (nv == 0.0) return out;
  const int d = spec.dim();
  const CVec u = detail::canonical_direction(v);
  auto idx = total_degree_indices(d, opts.poly_degree);
  idx.erase(idx.begin());  // f(z) = 0
  const Box box = bounding_box(spec);
  const double rho = 0.5 * box.diameter();

  std::vector<CVec> pts = detail::boundary_shell(spec, z, opts.boundary_samples, opts.seed, 0.9999);
  const auto interior = sample_interior(spec, static_cast<std::size_t>(opts.interior_samples), opts.seed + 1);
  pts.insert(pts.end(), interior.begin(), interior.end());
  const auto n = static_cast<Eigen::Index>(pts.size());
  const auto p = static_cast<Eigen::Index>(idx.size());
  CMat a(n, p);
  for (Eigen::Index k = 0; k < n; ++k) a.row(k) = detail::centered_monomials(pts[static_cast<std::size_t>(k)], z, rho, idx).transpose();
  // Constraint: f'(z) u = sum over linear monomials of coeff * u_j / rho = 1.
  CVec c = CVec::Zero(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    int deg = 0, which = -1;
    for (int j = 0; j < d; ++j) {
      deg += idx[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (idx[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] == 1) which = j;
    }
    if (deg == 1) c[i] = u[which] / rho;
  }
  // Verification set: denser and independent.
  std::vector<CVec> ver = detail::boundary_shell(spec, z, 4 * opts.boundary_samples, opts.seed + 7, 0.99999);
  const auto inner = sample_interior(spec, static_cast<std::size_t>(2 * opts.interior_samples), opts.seed + 8);
  ver.insert(ver.end(), inner.begin(), inner.end());
  CMat av(static_cast<Eigen::Index>(ver.size()), p);
  for (std::size_t k = 0; k < ver.size(); ++k)
    av.row(static_cast<Eigen::Index>(k)) = detail::centered_monomials(ver[k], z, rho, idx).transpose();

  // Degrees 1, 2, 4, ... up to poly_degree; index sets are nested prefixes.
  double best_bound = 0.0, best_sup = kInf, best_ver = kInf;
  CVec best_coef;
  for (int deg = 1;; deg = std::min(2 * deg, opts.poly_degree)) {
    Eigen::Index cols = 0;
    for (const auto& al : idx) {
      int t = 0;
      for (int e : al) t += e;
      if (t <= deg) ++cols;
    }
    const CMat ad = a.leftCols(cols);
    const CVec cd = c.head(cols);
    RVec w = RVec::Constant(n, 1.0 / static_cast<double>(n));
    double sup = kInf;
    CVec coef_best;
    for (int it = 0; it < opts.lawson_iterations; ++it) {
      const CMat b = ad.adjoint() * w.asDiagonal() * ad + 1e-14 * CMat::Identity(cols, cols);
      const CVec y = b.ldlt().solve(CVec(cd.conjugate()));
      const cplx denom = (cd.transpose() * y)(0, 0);
      if (std::abs(denom) == 0.0) break;
      const CVec coef = y / denom;
      const RVec r = (ad * coef).cwiseAbs();
      const double mx = r.maxCoeff();
      if (mx < sup) {
        sup = mx;
        coef_best = coef;
      }
      const RVec nw = w.cwiseProduct(r);
      const double s = nw.sum();
      if (!(s > 0)) break;
      w = nw / s;
    }
    if (std::isfinite(sup) && sup > 0) {
      const double vmax = std::max(sup, (av.leftCols(cols) * coef_best).cwiseAbs().maxCoeff());
      const double bound = 1.0 / (vmax * 1.01);
      if (bound > best_bound) {
        best_bound = bound;
        best_sup = sup;
        best_ver = vmax;
        best_coef = CVec::Zero(p);
        best_coef.head(cols) = coef_best;
      }
    }
    if (deg >= opts.poly_degree) break;
  }
  if (!(best_bound > 0)) {
    std::cerr << "warning: caratheodory_lower: degenerate direction, returning 0\n";
    return out;
  }
  const double best = best_sup;
  const double vmax = best_ver;
  out.raw = nv / best;
  out.slack = 1.01 * vmax / best - 1.0;
  out.value = nv / (best * (1.0 + out.slack));
  out.coefficients = best_coef;
  return out;
}

// Sandwich: lower from caratheodory_lower, upper from kobayashi_upper, with
// lower <= upper enforced by clamping (and a warning).
inline KobayashiEstimate kobayashi_sandwich(const Domain& spec, const CVec& z, const CVec& v,
                                            const KobayashiOptions& opts = {}) {
  KobayashiEstimate e;
  e.disk_degree = opts.disk_degree;
  e.poly_degree = opts.poly_degree;
  if (v.norm() == 0.0) {
    e.upper = 0.0;
    return e;
  }
  e.upper = kobayashi_upper(spec, z, v, opts);
  const auto lo = caratheodory_lower(spec, z, v, opts);
  e.lower = lo.value;
  e.slack = lo.slack;
  if (e.lower > e.upper) {
    std::cerr << "warning: kobayashi lower bound " << e.lower << " above upper " << e.upper << "; clamped\n";
    e.lower = e.upper;
    e.clamped = true;
  }
  return e;
}

}  // namespace invmetric
