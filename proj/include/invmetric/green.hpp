#pragma once

// Pluricomplex Green functions on model domains, Bergman distance (closed
// forms and discrete path optimization), and the comparison of G with
// log dist near the diagonal.

#include "invmetric/metrics.hpp"

namespace invmetric {

namespace detail {

// Moebius pseudo-distance of the unit ball:
// rho^2 = 1 - (1 - |z|^2)(1 - |w|^2) / |1 - <z, w>|^2.
inline double ball_rho(const CVec& z, const CVec& w) {
  const cplx inner = (w.adjoint() * z)(0, 0);  // sum z_i conj(w_i)
  const double c = std::norm(1.0 - inner);
  // 1 - ab/c = (c - ab)/c; c - ab = |z - w|^2 + |<z,w>|^2 - |z|^2|w|^2 is
  // evaluated in this form to keep relative accuracy for nearby points.
  const double num = (z - w).squaredNorm() + std::norm(inner) - z.squaredNorm() * w.squaredNorm();
  return std::sqrt(std::max(0.0, num / c));
}

// Moebius pseudo-distances on each irreducible ball-like factor, after pulling
// back through images and planar Riemann maps. false when unavailable.
struct FactorPair {
  double rho;     // Moebius pseudo-distance in the factor (ball model)
  int dim;        // complex dimension of the ball model
};

inline bool factor_pairs(const DomainNode& node, const CVec& z, const CVec& w, std::vector<FactorPair>& out) {
  return std::visit(
      [&](const auto& v) -> bool {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, Ball>) {
          out.push_back({ball_rho(CVec((z - v.center) / v.radius), CVec((w - v.center) / v.radius)), v.dim});
          return true;
        } else if constexpr (std::is_same_v<V, Ellipsoid>) {
          CVec a = z, b = w;
          for (std::size_t j = 0; j < v.weights.size(); ++j) {
            const double s = std::sqrt(v.weights[j]);
            a[static_cast<Eigen::Index>(j)] *= s;
            b[static_cast<Eigen::Index>(j)] *= s;
          }
          out.push_back({ball_rho(a, b), static_cast<int>(v.weights.size())});
          return true;
        } else if constexpr (std::is_same_v<V, Polydisk>) {
          for (std::size_t j = 0; j < v.radii.size(); ++j) {
            const auto i = static_cast<Eigen::Index>(j);
            out.push_back({ball_rho(make_point({z[i] / v.radii[j]}), make_point({w[i] / v.radii[j]})), 1});
          }
          return true;
        } else if constexpr (std::is_same_v<V, PlanarRiemann>) {
          const auto p = planar_preimage(v, z[0]), q = planar_preimage(v, w[0]);
          if (!p || !q) throw Error(ErrorCode::invalid_argument, "point outside planar domain");
          out.push_back({ball_rho(make_point({*p}), make_point({*q})), 1});
          return true;
        } else if constexpr (std::is_same_v<V, Product>) {
          const int dl = v.left.dim(), dr = v.right.dim();
          return factor_pairs(v.left.node(), z.head(dl), w.head(dl), out) &&
                 factor_pairs(v.right.node(), z.tail(dr), w.tail(dr), out);
        } else if constexpr (std::is_same_v<V, Image>) {
          if (!v.map.has_inverse()) return false;
          return factor_pairs(v.base.node(), v.map.inverse(z), v.map.inverse(w), out);
        } else {
          return false;
        }
      },
      node);
}

}  // namespace detail

// G(z, w) <= 0, -inf at z = w. Balls: log of the Moebius distance; products:
// max over factors; images and planar domains: biholomorphic invariance.
inline double green_function(const Domain& spec, const CVec& z, const CVec& w) {
  if (!contains(spec, z) || !contains(spec, w)) throw Error(ErrorCode::invalid_argument, "green_function: point outside domain");
  std::vector<detail::FactorPair> fp;
  if (!detail::factor_pairs(spec.node(), z, w, fp))
    throw Error(ErrorCode::unsupported_operation, "no Green function oracle for " + spec.variant_name());
  double g = -kInf;
  for (const auto& f : fp) g = std::max(g, f.rho > 0 ? std::log(f.rho) : -kInf);
  return std::min(g, 0.0);
}

struct DistanceResult {
  double value = 0.0;
  std::string method;     // closed-form | path-optimized
  int nodes = 0;          // path discretization
  int sweeps = 0;
  double last_change = 0.0;
};

struct PathOptions {
  int nodes = 64;
  int max_doublings = 3;
  double rel_tol = 1e-3;
  int max_sweeps = 400;
};

// Closed form: sqrt(d+1) artanh(rho) on (images of) balls, combined
// Euclidean-wise over product factors. nullopt when unavailable.
inline std::optional<double> bergman_distance_closed(const Domain& spec, const CVec& z, const CVec& w) {
  std::vector<detail::FactorPair> fp;
  if (!detail::factor_pairs(spec.node(), z, w, fp)) return std::nullopt;
  double s = 0.0;
  for (const auto& f : fp) {
    const double d = std::sqrt(f.dim + 1.0) * std::atanh(std::min(f.rho, 1.0 - 1e-16));
    s += d * d;
  }
  return std::sqrt(s);
}

// Length of the polyline under the metric evaluated at segment midpoints.
inline double polyline_length(const MetricSource& g, const std::vector<CVec>& p) {
  double len = 0.0;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    const CVec d = p[i + 1] - p[i];
    len += std::sqrt(std::max(0.0, g(CVec(0.5 * (p[i] + p[i + 1]))).norm2(d)));
  }
  return len;
}

namespace detail {

inline std::vector<CVec> initial_path(const Domain& spec, const CVec& z, const CVec& w, int nodes) {
  auto segment = [&](const CVec& a, const CVec& b, int n, std::vector<CVec>& out) {
    for (int i = 0; i < n; ++i) out.push_back(a + (b - a) * (static_cast<double>(i) / n));
  };
  auto inside = [&](const std::vector<CVec>& p) {
    for (const auto& x : p)
      if (!contains(spec, x)) return false;
    for (std::size_t i = 0; i + 1 < p.size(); ++i)
      if (!contains(spec, CVec(0.5 * (p[i] + p[i + 1])))) return false;
    return true;
  };
  std::vector<CVec> p;
  segment(z, w, nodes, p);
  p.push_back(w);
  if (inside(p)) return p;
  // Detour through the interior reference point.
  const CVec c = interior_point(spec);
  p.clear();
  segment(z, c, nodes / 2, p);
  segment(c, w, nodes - nodes / 2, p);
  p.push_back(w);
  if (inside(p)) return p;
  throw Error(ErrorCode::path_initialization, "straight segment and detour both leave the domain");
}

// Coordinate descent on interior nodes. Each real coordinate of a node takes a
// safeguarded parabolic step on the local discrete energy L_{i-1}^2 + L_i^2,
// whose minimizers are constant-speed discretizations of geodesics.
inline DistanceResult optimize_path(const Domain& spec, const MetricSource& g, std::vector<CVec>& p, int max_sweeps) {
  DistanceResult r;
  r.method = "path-optimized";
  r.nodes = static_cast<int>(p.size()) - 1;
  const int d = spec.dim();
  auto seg = [&](const CVec& a, const CVec& b) {
    const CVec dv = b - a;
    return std::sqrt(std::max(0.0, g(CVec(0.5 * (a + b))).norm2(dv)));
  };
  auto local = [&](std::size_t i, const CVec& x) {
    if (!contains(spec, x)) return kInf;
    const double a = seg(p[i - 1], x), b = seg(x, p[i + 1]);
    return a * a + b * b;
  };
  double h = 0.25 * (p.back() - p.front()).norm() / r.nodes;
  if (h == 0.0) return r;
  const double hmin = 1e-10 * (p.back() - p.front()).norm();
  for (int sweep = 0; sweep < max_sweeps && h > hmin; ++sweep) {
    double moved = 0.0;
    for (std::size_t i = 1; i + 1 < p.size(); ++i) {
      for (int c = 0; c < 2 * d; ++c) {
        const cplx e = (c % 2 == 0) ? cplx(1, 0) : cplx(0, 1);
        CVec xm = p[i], xp = p[i];
        xm[c / 2] -= h * e;
        xp[c / 2] += h * e;
        const double f0 = local(i, p[i]), fm = local(i, xm), fp = local(i, xp);
        const double curv = fp + fm - 2.0 * f0;
        double t = 0.0;
        if (std::isfinite(fm) && std::isfinite(fp) && curv > 0) t = std::clamp(0.5 * (fm - fp) / curv, -2.0, 2.0);
        else if (fm < f0 && fm <= fp) t = -1.0;
        else if (fp < f0) t = 1.0;
        if (t == 0.0) continue;
        CVec xt = p[i];
        xt[c / 2] += t * h * e;
        if (local(i, xt) < f0) {
          p[i] = xt;
          moved = std::max(moved, std::abs(t) * h);
        }
      }
    }
    r.sweeps = sweep + 1;
    // Track the typical move; shrink the probe when moves become small.
    if (moved < 0.5 * h) h *= 0.5;
  }
  r.value = polyline_length(g, p);
  return r;
}

// Inserts segment midpoints (projected back to the chord if they fall outside).
inline std::vector<CVec> refine_path(const Domain& spec, const std::vector<CVec>& p) {
  std::vector<CVec> q;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    q.push_back(p[i]);
    CVec m = 0.5 * (p[i] + p[i + 1]);
    if (!contains(spec, m)) m = p[i];
    q.push_back(m);
  }
  q.push_back(p.back());
  return q;
}

}  // namespace detail

// Path-optimized distance. Coarse-to-fine: optimize on 8 segments, then
// double by midpoint insertion up to opts.nodes, and keep doubling until the
// relative change in length drops below rel_tol.
inline DistanceResult path_distance(const Domain& spec, const MetricSource& g, const CVec& z, const CVec& w,
                                    const PathOptions& opts = {}) {
  if ((z - w).norm() == 0.0) return {0.0, "path-optimized", 0, 0, 0.0};
  const int start = std::min(8, opts.nodes);
  std::vector<CVec> p = detail::initial_path(spec, z, w, start);
  DistanceResult cur = detail::optimize_path(spec, g, p, opts.max_sweeps);
  while (static_cast<int>(p.size()) - 1 < opts.nodes) {
    p = detail::refine_path(spec, p);
    cur = detail::optimize_path(spec, g, p, opts.max_sweeps);
  }
  for (int k = 0; k < opts.max_doublings; ++k) {
    p = detail::refine_path(spec, p);
    DistanceResult next = detail::optimize_path(spec, g, p, opts.max_sweeps);
    next.last_change = std::abs(next.value - cur.value) / std::max(1e-300, cur.value);
    cur = next;
    if (cur.last_change < opts.rel_tol) break;
  }
  return cur;
}

// dist_g(z, w): closed form where available, otherwise path optimization
// under the given metric (or the closed-form kernel metric when none given).
inline DistanceResult bergman_distance(const Domain& spec, const CVec& z, const CVec& w, const PathOptions& opts = {},
                                       const MetricSource& metric = nullptr) {
  if (!contains(spec, z) || !contains(spec, w)) throw Error(ErrorCode::invalid_argument, "bergman_distance: point outside domain");
  if (auto c = bergman_distance_closed(spec, z, w)) return {*c, "closed-form", 0, 0, 0.0};
  const MetricSource g = metric ? metric : bergman_metric_source(closed_form_kernel(spec));
  return path_distance(spec, g, z, w, opts);
}

struct GreenGapRow {
  CVec z, w;
  double dist = 0.0, green = 0.0, gap = 0.0;
};

struct GreenGapReport {
  std::vector<GreenGapRow> rows;
  double max_gap = 0.0;
  double tau = 0.0;
  std::size_t excluded = 0;  // pairs beyond the cutoff or at the pole
};

// |G(z, w) - log dist(z, w)| over pairs with 0 < dist <= tau.
inline GreenGapReport green_vs_distance_report(const Domain& spec, const std::vector<std::pair<CVec, CVec>>& pairs,
                                               double tau) {
  GreenGapReport rep;
  rep.tau = tau;
  for (const auto& [z, w] : pairs) {
    const double dist = bergman_distance(spec, z, w).value;
    if (!(dist > 0) || dist > tau) {
      ++rep.excluded;
      continue;
    }
    GreenGapRow row{z, w, dist, green_function(spec, z, w), 0.0};
    row.gap = std::abs(row.green - std::log(dist));
    if (!std::isfinite(row.gap)) throw Error(ErrorCode::numerical_degeneracy, "non-finite Green/distance gap");
    rep.max_gap = std::max(rep.max_gap, row.gap);
    rep.rows.push_back(std::move(row));
  }
  if (rep.rows.empty()) throw Error(ErrorCode::empty_sample, "no pairs within the distance cutoff");
  return rep;
}

}  // namespace invmetric
