#pragma once

// Bergman metric as a Hermitian form, holomorphic sectional curvature, the
// convex-domain proxy |v| / delta(z; v), and the eigenvalue test for boundary
// blow-up together with boundary analytic-variety probes.

#include "invmetric/bergman.hpp"
#include "invmetric/hermitian.hpp"

#include <Eigen/SVD>

namespace invmetric {

using MetricSource = std::function<HermitianForm(const CVec&)>;

// H_ij = d_i dbar_j log K(z, z), read off the (1,1) coefficient of the log of
// the kernel line jet.
inline CMat log_kernel_hessian(const Kernel& k, const CVec& z) {
  const int d = k.dim;
  CMat h(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      CVec u = CVec::Zero(d), w = CVec::Zero(d);
      u[i] = 1.0;
      w[j] = 1.0;
      const Jet kj = kernel_line_jet(k, z, u, w);
      if (!(kj.value().real() > 0))
        throw Error(ErrorCode::numerical_degeneracy, "kernel is not positive at z");
      h(i, j) = log(kj)(1, 1);
    }
  return h;
}

inline HermitianForm bergman_metric(const Kernel& k, const CVec& z) {
  if (z.size() != k.dim) throw Error(ErrorCode::invalid_argument, "bergman_metric: dimension mismatch");
  const CMat h = log_kernel_hessian(k, z);
  HermitianForm g(h);
  const double scale = std::max(1.0, g.max_eigenvalue());
  if (g.min_eigenvalue() < -1e-8 * scale) {
    throw Error(ErrorCode::numerical_degeneracy,
                "metric not positive definite: eigenvalues [" + std::to_string(g.min_eigenvalue()) + ", " +
                    std::to_string(g.max_eigenvalue()) + "]");
  }
  return g;
}

inline MetricSource bergman_metric_source(const Kernel& k) {
  return [k](const CVec& z) { return bergman_metric(k, z); };
}

namespace detail {

struct CurvatureJets {
  HermitianForm g;
  cplx d4;  // d_v dbar_v g_{v vbar}
  CVec a;   // d_v g_{v qbar}
  CVec b;   // dbar_v g_{q vbar}
};

inline CurvatureJets curvature_jets(const Kernel& k, const CVec& z, const CVec& v) {
  const int d = k.dim;
  if (!(v.norm() > 0)) throw Error(ErrorCode::invalid_argument, "curvature: zero direction");
  CurvatureJets c{bergman_metric(k, z), 0.0, CVec(d), CVec(d)};
  if (c.g.min_eigenvalue() <= 1e-12 * std::max(1.0, c.g.max_eigenvalue()))
    throw Error(ErrorCode::numerical_degeneracy, "curvature: near-singular metric");
  c.d4 = 4.0 * log(kernel_line_jet(k, z, v, v))(2, 2);
  for (int q = 0; q < d; ++q) {
    CVec e = CVec::Zero(d);
    e[q] = 1.0;
    c.a[q] = 2.0 * log(kernel_line_jet(k, z, v, e))(2, 1);
    c.b[q] = 2.0 * log(kernel_line_jet(k, z, e, v))(1, 2);
  }
  return c;
}

}  // namespace detail

// Holomorphic sectional curvature R(v, vbar, v, vbar) / g(v, v)^2 with
// R_{i jbar k lbar} = -d_k dbar_l g_{i jbar} + g^{p qbar} d_k g_{i qbar} dbar_l g_{p jbar}.
// The disk has -1 and the d-ball -2/(d+1); bounded above by 2 for Bergman metrics.
inline double hol_sectional_curvature(const Kernel& k, const CVec& z, const CVec& v) {
  const auto c = detail::curvature_jets(k, z, v);
  const CMat hinv = c.g.matrix().inverse();
  const cplx r = -c.d4 + (c.a.transpose() * hinv * c.b)(0, 0);
  const double gv = c.g.norm2(v);
  return r.real() / (gv * gv);
}

// Gaussian curvature of lambda(zeta) |dzeta|^2, lambda(zeta) = g(z + zeta v; v):
// -(2 / lambda) d dbar log lambda at zeta = 0. The disk has -2.
inline double line_gaussian_curvature(const Kernel& k, const CVec& z, const CVec& v) {
  const auto c = detail::curvature_jets(k, z, v);
  const double lam = c.g.norm2(v);
  // d lambda = d_v g_{v vbar} = sum_q a_q conj(v_q)
  const cplx dl = (c.a.transpose() * v.conjugate())(0, 0);
  const double ddbar_log = (c.d4.real() * lam - std::norm(dl)) / (lam * lam);
  return -2.0 * ddbar_log / lam;
}

// Finite-difference version of line_gaussian_curvature (cross-check).
inline double line_gaussian_curvature_fd(const Kernel& k, const CVec& z, const CVec& v, double h = 1e-3) {
  auto lg = [&](cplx t) { return std::log(bergman_metric(k, CVec(z + t * v)).norm2(v)); };
  const double lap = (lg(h) + lg(-h) + lg(cplx(0, h)) + lg(cplx(0, -h)) - 4.0 * lg(0.0)) / (h * h);
  return -2.0 * (lap / 4.0) / bergman_metric(k, z).norm2(v);
}

// |v| / delta(z; v) on convex domains.
inline double convex_metric_proxy(const Domain& spec, const CVec& z, const CVec& v) {
  if (!is_convex(spec)) throw Error(ErrorCode::unsupported_operation, "convex_metric_proxy: nonconvex domain");
  const double nv = v.norm();
  if (!(nv > 0)) return 0.0;
  return nv / line_boundary_distance(spec, z, v);
}

// ---------------------------------------------------------------------------
// Blow-up classification

enum class Verdict { blows_up, bounded_witness, inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::blows_up: return "blows-up";
    case Verdict::bounded_witness: return "bounded-witness";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "unknown";
}

struct CompactnessVerdict {
  int q = 1;
  std::vector<CVec> path;
  std::vector<double> sigma;  // sigma_{d-q+1} along the path
  double cap = 0.0;
  Verdict verdict = Verdict::inconclusive;
  CMat witness;               // minimizing q-plane at the last point, when bounded
};

// Evaluates sigma_{d-q+1} along a boundary-approaching path. blows-up when the
// last half is nondecreasing and the final value exceeds 100x the first and
// the cap; bounded-witness when every value stays below the cap.
inline CompactnessVerdict compactness_classify(const Domain& spec, const MetricSource& metric, int q,
                                               const std::vector<CVec>& path, double cap) {
  const int d = spec.dim();
  if (q < 1 || q > d) throw Error(ErrorCode::invalid_argument, "compactness_classify: q out of range");
  if (path.size() < 2) throw Error(ErrorCode::invalid_path, "compactness_classify: path needs >= 2 points");
  CompactnessVerdict out;
  out.q = q;
  out.cap = cap;
  out.path = path;
  HermitianForm last;
  for (const CVec& z : path) {
    if (!contains(spec, z)) throw Error(ErrorCode::invalid_path, "path point outside the domain");
    last = metric(z);
    out.sigma.push_back(last.sigma(d - q + 1));
  }
  const std::size_t n = out.sigma.size();
  bool monotone = true;
  for (std::size_t i = n / 2; i + 1 < n; ++i)
    if (out.sigma[i + 1] < out.sigma[i]) monotone = false;
  const double first = out.sigma.front(), final = out.sigma.back();
  const double mx = *std::max_element(out.sigma.begin(), out.sigma.end());
  if (monotone && final > 100.0 * first && final > cap) {
    out.verdict = Verdict::blows_up;
  } else if (mx <= cap) {
    out.verdict = Verdict::bounded_witness;
    out.witness = last.minimizing_subspace(q);
  } else {
    out.verdict = Verdict::inconclusive;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Analytic varieties in the boundary

enum class ProbeStatus { found, none, unknown };

inline const char* to_string(ProbeStatus s) {
  switch (s) {
    case ProbeStatus::found: return "found";
    case ProbeStatus::none: return "none";
    case ProbeStatus::unknown: return "unknown";
  }
  return "unknown";
}

struct BoundaryVariety {
  ProbeStatus status = ProbeStatus::unknown;
  int q = 1;
  std::function<CVec(const CVec&)> phi;  // D^q -> boundary
  int rank = 0;
  bool verified = false;
  std::string description;
};

// x is in the closure but not the interior: x itself is excluded while the
// point moved 1e-10 towards the interior point c is included.
inline bool on_boundary(const Domain& spec, const CVec& x, const CVec& c, double tol = 1e-10) {
  if (contains(spec, x)) return false;
  const CVec dir = c - x;
  return contains(spec, CVec(x + tol * dir / dir.norm()));
}

namespace detail {

// phi: D^q -> boundary of a one-variable-fixed product; found recursively.
inline std::optional<std::function<CVec(const CVec&)>> boundary_disk_map(const Domain& spec, int q, std::string& desc) {
  const int d = spec.dim();
  if (q >= d) return std::nullopt;
  if (const auto* pd = spec.as<Polydisk>()) {
    const std::vector<double> r = pd->radii;
    desc = "zeta -> (r_1, r_2 zeta_1, ..., r_{q+1} zeta_q, 0, ...)";
    return [r, q, d](const CVec& zeta) {
      CVec x = CVec::Zero(d);
      x[0] = r[0];
      for (int j = 0; j < q; ++j) x[j + 1] = r[static_cast<std::size_t>(j) + 1] * zeta[j];
      return x;
    };
  }
  if (const auto* p = spec.as<Product>()) {
    const int dl = p->left.dim(), dr = p->right.dim();
    // A boundary point of a one-dimensional factor times a polydisk in the other.
    auto embed = [](const Domain& f, int qq) -> std::function<CVec(const CVec&)> {
      const CVec c = interior_point(f);
      double rho = kInf;
      for (int j = 0; j < f.dim(); ++j) {
        CVec e = CVec::Zero(f.dim());
        e[j] = 1.0;
        rho = std::min(rho, line_boundary_distance(f, c, e));
      }
      rho *= 0.5 / std::sqrt(static_cast<double>(f.dim()));
      return [c, rho, qq](const CVec& zeta) {
        CVec x = c;
        for (int j = 0; j < qq; ++j) x[j] += rho * zeta[j];
        return x;
      };
    };
    auto bpoint = [](const Domain& f) {
      const CVec c = interior_point(f);
      CVec e = CVec::Zero(f.dim());
      e[0] = 1.0;
      return CVec(c + exit_time(f, c, e) * e);
    };
    if (dl == 1 && dr >= q) {
      const CVec b = bpoint(p->left);
      auto g = embed(p->right, q);
      desc = "boundary point of the left factor x polydisk in the right factor";
      return [b, g, dl, dr](const CVec& zeta) {
        CVec x(dl + dr);
        x << b, g(zeta);
        return x;
      };
    }
    if (dr == 1 && dl >= q) {
      const CVec b = bpoint(p->right);
      auto g = embed(p->left, q);
      desc = "polydisk in the left factor x boundary point of the right factor";
      return [b, g, dl, dr](const CVec& zeta) {
        CVec x(dl + dr);
        x << g(zeta), b;
        return x;
      };
    }
  }
  return std::nullopt;
}

}  // namespace detail

// Searches the recognized product family for a holomorphic rank-q map of the
// q-disk into the boundary. Strictly convex models return none; anything else
// returns unknown (absence of a witness proves nothing).
inline BoundaryVariety boundary_variety_probe(const Domain& spec, int q) {
  BoundaryVariety out;
  out.q = q;
  const int d = spec.dim();
  if (q < 1 || q > d) throw Error(ErrorCode::invalid_argument, "boundary_variety_probe: q out of range");
  if (spec.as<Ball>() || spec.as<Ellipsoid>() || (spec.as<PlanarRiemann>())) {
    out.status = ProbeStatus::none;
    out.description = spec.as<PlanarRiemann>() ? "boundary is a curve" : "strictly convex boundary";
    return out;
  }
  if (q == d && (spec.as<Polydisk>() || spec.as<Product>())) {
    out.status = ProbeStatus::none;
    out.description = "boundary has real dimension 2d-1 < 2q";
    return out;
  }
  std::string desc;
  auto phi = detail::boundary_disk_map(spec, q, desc);
  if (!phi) {
    out.status = ProbeStatus::unknown;
    out.description = "outside the recognized family";
    return out;
  }
  out.phi = *phi;
  out.description = desc;
  // Rank of phi'(0) by central differences.
  const double h = 1e-6;
  CMat jac(d, q);
  for (int j = 0; j < q; ++j) {
    CVec e = CVec::Zero(q);
    e[j] = h;
    jac.col(j) = (out.phi(e) - out.phi(CVec(-e))) / (2.0 * h);
  }
  Eigen::JacobiSVD<CMat> svd(jac);
  out.rank = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()[i] > 1e-8) ++out.rank;
  // Boundary membership on sample points of the closed-up q-disk of radius 0.9.
  const CVec c = interior_point(spec);
  bool ok = true;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int s = 0; s < 64; ++s) {
    CVec zeta(q);
    for (int j = 0; j < q; ++j) {
      cplx t(u(rng), u(rng));
      if (std::abs(t) > 0.9) t *= 0.9 / std::abs(t);
      zeta[j] = t;
    }
    if (s == 0) zeta.setZero();
    const CVec x = out.phi(zeta);
    if (!on_boundary(spec, x, c)) ok = false;
  }
  out.verified = ok && out.rank == q;
  out.status = out.verified ? ProbeStatus::found : ProbeStatus::unknown;
  return out;
}

}  // namespace invmetric
