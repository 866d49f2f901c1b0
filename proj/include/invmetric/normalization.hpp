#pragma once

// Affine recentering of convex domains, squeezing checks, and affine charts
// of the unit ball with measured bi-Lipschitz constants.

#include "invmetric/green.hpp"
#include "invmetric/optimize.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

namespace invmetric {

// T(z) = b + L z
class AffineMap {
 public:
  AffineMap() = default;
  AffineMap(CVec b, CMat l) : b_(std::move(b)), l_(std::move(l)) {
    if (l_.rows() != l_.cols() || l_.rows() != b_.size())
      throw Error(ErrorCode::invalid_argument, "AffineMap: shape mismatch");
    sv_ = Eigen::JacobiSVD<CMat>(l_).singularValues();
    if (!(sv_[sv_.size() - 1] > 1e-12)) throw Error(ErrorCode::degenerate_map, "AffineMap: singular linear part");
    inv_ = l_.inverse();
  }
  static AffineMap identity(int d) { return AffineMap(CVec::Zero(d), CMat::Identity(d, d)); }

  int dim() const { return static_cast<int>(b_.size()); }
  const CVec& translation() const { return b_; }
  const CMat& linear() const { return l_; }
  const RVec& singular_values() const { return sv_; }

  CVec operator()(const CVec& z) const { return b_ + l_ * z; }
  CVec apply_inverse(const CVec& y) const { return inv_ * (y - b_); }
  AffineMap inverse() const { return AffineMap(CVec(-inv_ * b_), inv_); }
  // (this o other)(z) = this(other(z))
  AffineMap compose(const AffineMap& other) const { return AffineMap(CVec(b_ + l_ * other.b_), CMat(l_ * other.l_)); }
  HoloMap to_holo() const { return affine_map(b_, l_); }

 private:
  CVec b_;
  CMat l_;
  RVec sv_;
  CMat inv_;
};

struct Frankel {
  AffineMap map;           // T with T(zeta) = 0
  std::vector<double> deltas;  // delta(zeta; v_j) in selection order
  CMat frame;              // columns v_j (orthonormal)
  CMat normals;            // columns n_j (unit outward normals at the boundary points)
};

namespace detail {

// Outward unit normal at the boundary point zeta + t u, from the gradient of
// the gauge mu(x) = 1 / exit_time(zeta, x - zeta).
inline CVec supporting_normal(const Domain& spec, const CVec& zeta, const CVec& q) {
  const auto d = zeta.size();
  const double h = 1e-5 * (q - zeta).norm();
  auto mu = [&](const CVec& x) { return 1.0 / exit_time(spec, zeta, CVec(x - zeta)); };
  CVec n(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    CVec a = q, b = q;
    a[j] += h;
    b[j] -= h;
    const double gx = (mu(a) - mu(b)) / (2 * h);
    a = q;
    b = q;
    a[j] += cplx(0, h);
    b[j] -= cplx(0, h);
    const double gy = (mu(a) - mu(b)) / (2 * h);
    n[j] = cplx(gx, gy);
  }
  return n / n.norm();
}

// Unit u in span(basis) minimizing the exit distance from zeta: a coarse
// random search, Nelder-Mead, then the fixed point u <- P n(u), which is the
// stationarity condition of the constrained minimum.
inline std::pair<CVec, double> nearest_direction(const Domain& spec, const CVec& zeta, const CMat& basis,
                                                 std::uint64_t seed) {
  const auto m = basis.cols();
  auto dir = [&](const RVec& x) {
    CVec c(m);
    for (Eigen::Index k = 0; k < m; ++k) c[k] = cplx(x[2 * k], x[2 * k + 1]);
    CVec u = basis * c;
    return CVec(u / u.norm());
  };
  auto f = [&](const RVec& x) {
    if (x.norm() < 1e-12) return kInf;
    return exit_time(spec, zeta, dir(x));
  };
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  RVec best = RVec::Zero(2 * m);
  best[0] = 1.0;
  double fb = f(best);
  for (int k = 0; k < 64 + 2 * static_cast<int>(m); ++k) {
    RVec x(2 * m);
    if (k < 2 * m) {
      x.setZero();
      x[k] = 1.0;
    } else {
      for (Eigen::Index i = 0; i < 2 * m; ++i) x[i] = nd(rng);
    }
    const double v = f(x);
    if (v < fb) { fb = v; best = x / x.norm(); }
  }
  const auto r = nelder_mead(f, best, 0.2, 600, 1e-14);
  if (r.value < fb) best = r.x / r.x.norm();
  CVec u = dir(best);
  double t = exit_time(spec, zeta, u);
  const CMat proj = basis * basis.adjoint();
  for (int it = 0; it < 60; ++it) {
    const CVec n = supporting_normal(spec, zeta, CVec(zeta + t * u));
    CVec w = proj * n;
    if (w.norm() < 1e-12) break;
    w /= w.norm();
    const double tw = exit_time(spec, zeta, w);
    if (!(tw <= t + 1e-14)) break;
    const double change = (w - u).norm();
    u = w;
    t = tw;
    if (change < 1e-13) break;
  }
  return {u, t};
}

}  // namespace detail

// Greedy normalization: v_1 points to a nearest boundary point, v_k to the
// nearest one within the complex orthogonal complement of v_1..v_{k-1}. Row k
// of L is -i n_k^H / h_k with n_k the supporting normal at that point and
// h_k = Re<q_k - zeta, n_k>, so T(Omega) lies in {Im z_k > -1} for all k.
inline Frankel frankel_recenter(const Domain& spec, const CVec& zeta, std::uint64_t seed = 7) {
  if (!is_convex(spec)) throw Error(ErrorCode::unsupported_operation, "frankel_recenter: domain is not convex");
  if (!contains(spec, zeta)) throw Error(ErrorCode::invalid_argument, "frankel_recenter: center outside the domain");
  const int d = spec.dim();
  Frankel fr;
  fr.frame = CMat(d, d);
  fr.normals = CMat(d, d);
  CMat rows(d, d);
  CMat basis = CMat::Identity(d, d);
  for (int k = 0; k < d; ++k) {
    auto [u, t] = detail::nearest_direction(spec, zeta, basis, seed + static_cast<std::uint64_t>(k));
    const CVec q = zeta + t * u;
    const CVec n = detail::supporting_normal(spec, zeta, q);
    const double h = n.dot(CVec(q - zeta)).real();
    fr.frame.col(k) = u;
    fr.normals.col(k) = n;
    fr.deltas.push_back(t);
    rows.row(k) = cplx(0, -1) * n.adjoint() / h;
    // Complement of u inside the current subspace.
    if (k + 1 < d) {
      const CMat pool = basis - u * (u.adjoint() * basis);
      CMat next(d, basis.cols() - 1);
      Eigen::Index c = 0;
      for (Eigen::Index j = 0; j < pool.cols() && c < next.cols(); ++j) {
        CVec col = pool.col(j);
        for (Eigen::Index i = 0; i < c; ++i) col -= next.col(i) * (next.col(i).adjoint() * col);
        if (col.norm() > 1e-8) next.col(c++) = col / col.norm();
      }
      basis = next;
    }
  }
  fr.map = AffineMap(CVec(-rows * zeta), rows);
  return fr;
}

enum class OuterBody { unit_ball, half_spaces };

struct SqueezingReport {
  double inner_radius = 0.0;
  bool outer_ok = false;
  std::size_t inner_samples = 0, outer_samples = 0;
  std::size_t outer_violations = 0;
};

struct SqueezingOptions {
  std::vector<double> radii;  // ascending; default k/50, k = 1..50
  int sphere_samples = 400;
  int interior_samples = 400;
  std::uint64_t seed = 3;
  OuterBody outer = OuterBody::half_spaces;
};

namespace detail {

inline bool in_outer(const CVec& y, OuterBody b) {
  if (b == OuterBody::unit_ball) return y.squaredNorm() < 1.0;
  for (Eigen::Index j = 0; j < y.size(); ++j)
    if (!(y[j].imag() > -1.0)) return false;
  return true;
}

inline std::vector<CVec> sphere_points(int d, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::vector<CVec> out;
  for (int k = 0; k < n; ++k) {
    CVec u(d);
    for (int j = 0; j < d; ++j) u[j] = cplx(nd(rng), nd(rng));
    out.push_back(u / u.norm());
  }
  // Coordinate directions and their rotations catch axis-aligned faces.
  for (int j = 0; j < d; ++j)
    for (int a = 0; a < 8; ++a) {
      CVec u = CVec::Zero(d);
      u[j] = std::polar(1.0, a * kPi / 4);
      out.push_back(u);
    }
  return out;
}

}  // namespace detail

// forward: Omega -> C^d; pullback: its inverse on the image.
inline SqueezingReport verify_squeezing(const Domain& spec, const std::function<CVec(const CVec&)>& forward,
                                        const std::function<CVec(const CVec&)>& pullback,
                                        SqueezingOptions opts = {}) {
  if (opts.radii.empty())
    for (int k = 1; k <= 50; ++k) opts.radii.push_back(k / 50.0);
  std::sort(opts.radii.begin(), opts.radii.end());
  const int d = spec.dim();
  SqueezingReport rep;
  const auto sphere = detail::sphere_points(d, opts.sphere_samples, opts.seed);
  for (double r : opts.radii) {
    bool ok = true;
    for (const CVec& u : sphere) {
      ++rep.inner_samples;
      if (!contains(spec, pullback(CVec(r * u)))) { ok = false; break; }
    }
    if (!ok) break;
    rep.inner_radius = r;
  }
  const auto inner = sample_interior(spec, static_cast<std::size_t>(opts.interior_samples), opts.seed + 1);
  rep.outer_samples = inner.size();
  for (const CVec& z : inner)
    if (!detail::in_outer(forward(z), opts.outer)) ++rep.outer_violations;
  rep.outer_ok = rep.outer_violations == 0;
  return rep;
}

inline SqueezingReport verify_squeezing(const Domain& spec, const AffineMap& t, SqueezingOptions opts = {}) {
  return verify_squeezing(spec, [&](const CVec& z) { return t(z); }, [&](const CVec& y) { return t.apply_inverse(y); },
                          std::move(opts));
}

inline SqueezingReport verify_squeezing(const Domain& spec, const HoloMap& f, SqueezingOptions opts = {}) {
  if (!f.has_inverse()) throw Error(ErrorCode::unsupported_operation, "verify_squeezing: map has no inverse");
  return verify_squeezing(spec, f.forward, f.inverse, std::move(opts));
}

// ---------------------------------------------------------------------------

struct ChartOptions {
  // The bi-Lipschitz constant is measured on sample_radius * B and distances
  // on pairs inside pair_radius * B, so that paths leaving the measured region
  // are long enough for the lower bound.
  double sample_radius = 0.5;
  double pair_radius = 0.25;
  int samples = 200;
  int pairs = 10;
  std::uint64_t seed = 11;
  CMat rotation;  // optional unitary U; the chart becomes Phi o U
  PathOptions path;
  SqueezingOptions squeezing;
};

struct ChartReport {
  CVec center;
  HoloMap map;  // Phi: B -> Omega, Phi(0) = center
  AffineMap recentering;
  double inner_radius = 0.0;
  bool outer_ok = false;
  double A = 1.0;
  double A_center = 1.0;  // same quantity at w = 0 only
  double pullback_min = kInf, pullback_max = 0.0;
  std::size_t samples = 0, pairs = 0;
  double ratio_min = kInf, ratio_max = 0.0;  // dist_g(Phi w, Phi u) / |w - u|
  bool distance_ok = false;
};

inline ChartReport chart_embedding(const Domain& spec, const CVec& zeta, const MetricSource& g,
                                   const ChartOptions& opts = {}) {
  if (!is_convex(spec)) throw Error(ErrorCode::unsupported_operation, "chart_embedding: domain is not convex");
  const int d = spec.dim();
  ChartReport rep;
  rep.center = zeta;
  const Frankel fr = frankel_recenter(spec, zeta);
  rep.recentering = fr.map;
  const SqueezingReport sq = verify_squeezing(spec, fr.map, opts.squeezing);
  rep.inner_radius = sq.inner_radius;
  rep.outer_ok = sq.outer_ok;
  if (sq.inner_radius < 1e-3) throw Error(ErrorCode::chart_failure, "chart_embedding: inner radius below 1e-3");

  const CMat u = opts.rotation.size() ? opts.rotation : CMat(CMat::Identity(d, d));
  if ((u.adjoint() * u - CMat::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-10)
    throw Error(ErrorCode::invalid_argument, "chart_embedding: rotation is not unitary");
  // Phi(w) = T^{-1}(s U w)
  const AffineMap tinv = fr.map.inverse();
  const AffineMap phi(tinv.translation(), CMat(sq.inner_radius * tinv.linear() * u));
  rep.map = phi.to_holo();
  const CMat& jac = phi.linear();

  auto metric_bounds = [&](const CVec& w) {
    const CMat p = jac.transpose() * g(phi(w)).matrix() * jac.conjugate();
    const HermitianForm h(p);
    return std::pair{h.min_eigenvalue(), h.max_eigenvalue()};
  };
  // Sample points are fixed in the unrotated chart so rotated charts see the
  // same points of Omega.
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud;
  auto draw = [&](double radius) {
    CVec x(d);
    for (int j = 0; j < d; ++j) x[j] = cplx(nd(rng), nd(rng));
    x /= x.norm();
    return CVec(u.adjoint() * (radius * std::pow(ud(rng), 1.0 / (2.0 * d)) * x));
  };
  {
    const auto [lo, hi] = metric_bounds(CVec::Zero(d));
    rep.A_center = std::max(hi, 1.0 / lo);
  }
  std::vector<CVec> pts{CVec::Zero(d)};
  for (int k = 0; k < opts.samples; ++k) pts.push_back(draw(opts.sample_radius));
  for (const CVec& w : pts) {
    const auto [lo, hi] = metric_bounds(w);
    rep.pullback_min = std::min(rep.pullback_min, lo);
    rep.pullback_max = std::max(rep.pullback_max, hi);
  }
  rep.samples = pts.size();
  rep.A = std::max({1.0, rep.pullback_max, 1.0 / rep.pullback_min});

  for (int k = 0; k < opts.pairs; ++k) {
    const CVec a = draw(opts.pair_radius), b = draw(opts.pair_radius);
    const double e = (a - b).norm();
    if (e < 1e-9) continue;
    const double dist = bergman_distance(spec, phi(a), phi(b), opts.path, g).value;
    rep.ratio_min = std::min(rep.ratio_min, dist / e);
    rep.ratio_max = std::max(rep.ratio_max, dist / e);
    ++rep.pairs;
  }
  const double sa = std::sqrt(rep.A);
  rep.distance_ok = rep.pairs == 0 || (rep.ratio_min >= 1.0 / sa - 1e-9 && rep.ratio_max <= sa + 1e-9);
  return rep;
}

}  // namespace invmetric
