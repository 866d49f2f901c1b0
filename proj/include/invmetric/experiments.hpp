#pragma once

// Experiment runners behind the CLI and the acceptance checks. Each runner
// takes a typed parameter struct (parsed strictly from JSON) and returns an
// ExperimentReport whose rows are deterministic given the parameters.

#include "invmetric/green.hpp"
#include "invmetric/io.hpp"
#include "invmetric/kobayashi.hpp"
#include "invmetric/metrics.hpp"
#include "invmetric/normalization.hpp"
#include "invmetric/psh.hpp"

#include <chrono>
#include <map>

namespace invmetric {

struct ModelSpec {
  int degree = 12;
  std::size_t nodes = 100000;
  std::uint64_t seed = 1;
};

inline Kernel kernel_for(const Domain& spec, const std::optional<ModelSpec>& model,
                         KernelNormalization norm = KernelNormalization::lebesgue) {
  if (model) return model_kernel(fit_kernel_numeric(spec, model->degree, model->nodes, model->seed), norm);
  return closed_form_kernel(spec, norm);
}

namespace detail {

inline CVec random_unit(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  CVec u(d);
  for (int j = 0; j < d; ++j) u[j] = cplx(nd(rng), nd(rng));
  return u / u.norm();
}

// Interior samples with |z| <= radius (Euclidean), drawn reproducibly.
inline std::vector<CVec> samples_within(const Domain& spec, std::size_t n, double radius, std::uint64_t seed) {
  std::vector<CVec> out;
  for (std::uint64_t round = 0; out.size() < n && round < 64; ++round)
    for (const CVec& z : sample_interior(spec, 4 * n, seed + 7919 * round)) {
      if (z.norm() <= radius) out.push_back(z);
      if (out.size() == n) break;
    }
  if (out.size() < n) throw Error(ErrorCode::sampling_failure, "too few samples within the requested radius");
  return out;
}

inline std::optional<ModelSpec> model_from_json(const json& j, const std::string& where) {
  if (j.is_null()) return std::nullopt;
  check_keys(j, {"degree", "nodes", "seed"}, where);
  ModelSpec m;
  m.degree = read<int>(j, "degree", where);
  m.nodes = read<std::size_t>(j, "nodes", where);
  m.seed = read<std::uint64_t>(j, "seed", where);
  return m;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// kernel: numerical kernel against the closed form

struct KernelParams {
  Domain domain;
  int degree = 30;
  std::size_t nodes = 200000;
  std::uint64_t seed = 1;
  int pairs = 200;
  double radius = 0.7;
  double tolerance = 1e-3;
  double time_limit = 120.0;
};

inline ExperimentReport run_kernel(const KernelParams& p, KernelModel* model_out = nullptr) {
  ExperimentReport rep;
  rep.experiment = "kernel";
  rep.columns = {"z", "w", "model_re", "model_im", "closed_re", "closed_im", "rel_err"};
  const auto t0 = std::chrono::steady_clock::now();
  const KernelModel km = fit_kernel_numeric(p.domain, p.degree, p.nodes, p.seed);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const Kernel k = model_kernel(km);
  const bool closed = detail::has_closed_form(p.domain.node());
  const auto pts = detail::samples_within(p.domain, 2 * static_cast<std::size_t>(p.pairs), p.radius, p.seed + 1);
  double worst = 0.0, herm = 0.0;
  for (int i = 0; i < p.pairs; ++i) {
    const CVec& z = pts[2 * static_cast<std::size_t>(i)];
    const CVec& w = pts[2 * static_cast<std::size_t>(i) + 1];
    const cplx m = k(z, w);
    herm = std::max(herm, std::abs(m - std::conj(k(w, z))) / std::abs(m));
    cplx c(std::nan(""), 0);
    double err = 0.0;
    if (closed) {
      c = kernel_closed_form(p.domain, z, w);
      err = std::abs(m - c) / std::abs(c);
      worst = std::max(worst, err);
    }
    rep.add_row({fmt_point(z), fmt_point(w), m.real(), m.imag(), closed ? Cell(c.real()) : Cell(std::string()),
                 closed ? Cell(c.imag()) : Cell(std::string()), closed ? Cell(err) : Cell(std::string())});
  }
  if (closed) rep.check("max_relative_error", worst, "<=", p.tolerance);
  rep.check("hermitian_symmetry", herm, "<=", 1e-10);
  rep.check("fit_seconds", secs, "<=", p.time_limit);
  rep.extra["basis_size"] = km.size();
  rep.extra["condition"] = km.condition;
  rep.extra["quadrature"] = km.quadrature;
  if (model_out) *model_out = km;
  return rep;
}

// ---------------------------------------------------------------------------
// metric: singular values and curvature at sample points

struct MetricParams {
  Domain domain;
  std::vector<CVec> points;
  int samples = 0;
  std::uint64_t seed = 1;
  int directions = 4;
  std::optional<ModelSpec> model;
};

inline ExperimentReport run_metric(const MetricParams& p) {
  ExperimentReport rep;
  rep.experiment = "metric";
  const int d = p.domain.dim();
  rep.columns = {"z"};
  for (int j = 1; j <= d; ++j) rep.columns.push_back("sigma_" + std::to_string(j));
  rep.columns.push_back("hsc_max");
  const Kernel k = kernel_for(p.domain, p.model);
  std::vector<CVec> pts = p.points;
  for (const CVec& z : sample_interior(p.domain, static_cast<std::size_t>(p.samples), p.seed)) pts.push_back(z);
  std::mt19937_64 rng(p.seed + 1);
  double smin = kInf, hmax = -kInf;
  for (const CVec& z : pts) {
    const HermitianForm g = bergman_metric(k, z);
    std::vector<Cell> row{fmt_point(z)};
    for (int j = 1; j <= d; ++j) row.push_back(g.sigma(j));
    double h = -kInf;
    for (int t = 0; t < p.directions; ++t) h = std::max(h, hol_sectional_curvature(k, z, detail::random_unit(d, rng)));
    row.push_back(h);
    rep.add_row(std::move(row));
    smin = std::min(smin, g.min_eigenvalue());
    hmax = std::max(hmax, h);
  }
  rep.check("min_eigenvalue_positive", smin, ">=", 0.0);
  rep.check("hsc_upper_bound", hmax, "<=", 2.0, 1e-3);
  return rep;
}

// ---------------------------------------------------------------------------
// kobayashi: comparability of sqrt(g) and the Kobayashi sandwich

struct ComparabilityParams {
  Domain domain;
  int samples = 50;
  std::uint64_t seed = 1;
  double radius = 0.6;
  KobayashiOptions kobayashi;
  double ball_tolerance = 0.05;
  double envelope_cap = 3.0;
  double gap_flag = 0.5;
};

inline ExperimentReport run_comparability(const ComparabilityParams& p) {
  ExperimentReport rep;
  rep.experiment = "kobayashi";
  rep.columns = {"z", "v", "sqrt_g", "lower", "upper", "midpoint", "ratio", "gap", "flagged"};
  const int d = p.domain.dim();
  const Kernel k = closed_form_kernel(p.domain);
  const auto pts = detail::samples_within(p.domain, static_cast<std::size_t>(p.samples), p.radius, p.seed);
  std::mt19937_64 rng(p.seed + 1);
  std::vector<CVec> dirs;
  for (int i = 0; i < p.samples; ++i) dirs.push_back(detail::random_unit(d, rng));
  std::vector<KobayashiEstimate> est(pts.size());
  std::vector<double> sg(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) {
    KobayashiOptions o = p.kobayashi;
    o.seed = p.kobayashi.seed + i;
    if (dirs[i].norm() == 0.0) throw Error(ErrorCode::invalid_argument, "zero tangent vector");
    sg[i] = std::sqrt(bergman_metric(k, pts[i]).norm2(dirs[i]));
    est[i] = kobayashi_sandwich(p.domain, pts[i], dirs[i], o);
  });
  double rmin = kInf, rmax = 0.0, dev = 0.0;
  int flagged = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double mid = est[i].midpoint();
    const double ratio = sg[i] / mid;
    const double gap = (est[i].upper - est[i].lower) / est[i].upper;
    const bool flag = gap > p.gap_flag;
    flagged += flag;
    rmin = std::min(rmin, ratio);
    rmax = std::max(rmax, ratio);
    dev = std::max(dev, std::abs(ratio / std::sqrt(d + 1.0) - 1.0));
    rep.add_row({fmt_point(pts[i]), fmt_point(dirs[i]), sg[i], est[i].lower, est[i].upper, mid, ratio, gap,
                 std::string(flag ? "yes" : "no")});
  }
  rep.check_true("envelope_finite", std::isfinite(rmin) && std::isfinite(rmax) && rmin > 0);
  if (p.domain.as<Ball>()) rep.check("ball_ratio_deviation", dev, "<=", p.ball_tolerance);
  else rep.check("envelope_max_over_min", rmax / rmin, "<=", p.envelope_cap);
  rep.extra["ratio_min"] = rmin;
  rep.extra["ratio_max"] = rmax;
  rep.extra["flagged"] = flagged;
  return rep;
}

// ---------------------------------------------------------------------------
// green: |G - log dist| at small distances

struct GreenParams {
  Domain domain;
  int pairs = 500;
  double tau = 0.1;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  double bound = 1.0;
  double stability = 0.1;
};

namespace detail {

// Pairs (z, w) with w displaced from z by g-length at most tau (first order),
// kept only when the exact distance is in (0, tau].
inline std::vector<std::pair<CVec, CVec>> green_pairs(const Domain& spec, const MetricSource& g, int n, double tau,
                                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ud(0.05, 0.9);
  std::vector<std::pair<CVec, CVec>> out;
  const auto zs = sample_interior(spec, static_cast<std::size_t>(4 * n), seed);
  for (const CVec& z : zs) {
    if (static_cast<int>(out.size()) == n) break;
    const CVec u = random_unit(spec.dim(), rng);
    const double len = tau * ud(rng);
    const CVec w = z + (len / std::sqrt(g(z).norm2(u))) * u;
    if (contains(spec, w)) out.emplace_back(z, w);
  }
  return out;
}

}  // namespace detail

inline ExperimentReport run_green(const GreenParams& p) {
  ExperimentReport rep;
  rep.experiment = "green";
  rep.columns = {"seed", "z", "w", "dist", "green", "gap"};
  const MetricSource g = bergman_metric_source(closed_form_kernel(p.domain));
  std::vector<double> constants;
  for (std::uint64_t s : p.seeds) {
    const auto pairs = detail::green_pairs(p.domain, g, p.pairs, p.tau, s);
    const auto gr = green_vs_distance_report(p.domain, pairs, p.tau);
    for (const auto& r : gr.rows)
      rep.add_row({static_cast<double>(s), fmt_point(r.z), fmt_point(r.w), r.dist, r.green, r.gap});
    constants.push_back(gr.max_gap);
  }
  const double cmax = *std::max_element(constants.begin(), constants.end());
  const double cmin = *std::min_element(constants.begin(), constants.end());
  rep.check("max_gap", cmax, "<=", p.bound);
  rep.check("seed_stability", cmax / cmin - 1.0, "<=", p.stability);
  rep.extra["constants"] = constants;
  return rep;
}

// ---------------------------------------------------------------------------
// psh-certify: scaling law, gradient bound, exponential construction, chart
// psh functions and the (P~_q) certificate on a polydisk-like model

struct PshParams {
  Domain domain;
  std::uint64_t seed = 1;
  int scaling_points = 20;
  std::vector<double> scales{0.5, 2.0, 7.0};
  int grid_radial = 10;
  int grid_angular = 5;
  double grid_max_radius = 0.99;
  double eta = 0.5;
  double C = 2.0;
  int chart_centers = 20;
  double chart_radius = 1.0;
  int chart_ball_samples = 500;
  std::vector<double> ms{10.0, 100.0};
  std::vector<int> qs{1, 2};
  std::vector<int> expect_pass{2};  // q values expected to certify
};

namespace detail {

// radial^d * angular points: per coordinate the radii rmax * i/(radial-1),
// phases shifted per coordinate. With extras, points at radius 0.999 and
// 0.9999 (one coordinate or all) are appended.
inline std::vector<CVec> polydisk_grid(int d, int radial, int angular, double rmax, bool extras) {
  std::vector<CVec> out;
  const long total = static_cast<long>(std::pow(radial, d)) * angular;
  for (long t = 0; t < total; ++t) {
    long rem = t;
    const int a = static_cast<int>(rem % angular);
    rem /= angular;
    CVec z(d);
    for (int j = 0; j < d; ++j) {
      const int i = static_cast<int>(rem % radial);
      rem /= radial;
      const double r = rmax * i / std::max(1, radial - 1);
      z[j] = std::polar(r, 1.3 * a + 0.7 * j + 0.1);
    }
    out.push_back(z);
  }
  if (extras)
    for (double r : {0.999, 0.9999})
      for (int a = 0; a < 8; ++a) {
        CVec z = CVec::Zero(d), y(d);
        z[0] = std::polar(r, 0.8 * a);
        for (int j = 0; j < d; ++j) y[j] = std::polar(r, 0.8 * a + 0.3 * j);
        out.push_back(z);
        out.push_back(y);
      }
  return out;
}

}  // namespace detail

inline ExperimentReport run_psh(const PshParams& p) {
  ExperimentReport rep;
  rep.experiment = "psh-certify";
  rep.columns = {"check", "index", "point", "value", "reference", "verdict"};
  const int d = p.domain.dim();
  const Kernel k = closed_form_kernel(p.domain);
  const ScalarPotential lam = log_kernel_potential(k);
  const MetricSource g = bergman_metric_source(k);

  // Scaling law of the self-bounded-gradient norm: ||d(t lambda)|| / ||d lambda||.
  double worst_plus = 0.0, worst_minus = 0.0;
  const auto spts = sample_interior(p.domain, static_cast<std::size_t>(p.scaling_points), p.seed);
  for (std::size_t i = 0; i < spts.size(); ++i) {
    const double base = sbg_norm(lam, spts[i]);
    for (double t : p.scales) {
      const double r = sbg_norm(scaled(lam, t), spts[i]) / base;
      worst_plus = std::max(worst_plus, std::abs(r - std::sqrt(t)) / std::sqrt(t));
      worst_minus = std::max(worst_minus, std::abs(r - 1.0 / std::sqrt(t)) * std::sqrt(t));
      rep.add_row({std::string("sbg_scaling"), static_cast<double>(i), fmt_point(spts[i]), r, std::sqrt(t),
                   std::string("t=" + fmt_double(t))});
    }
  }
  rep.check("sbg_scaling_sqrt_t", worst_plus, "<=", 1e-12);
  rep.extra["sbg_scaling_inverse_sqrt_t_error"] = worst_minus;

  // Gradient bound on the grid against the closed form for polydisks.
  const auto grid = detail::polydisk_grid(d, p.grid_radial, p.grid_angular, p.grid_max_radius, false);
  double sup = 0.0, cf_err = 0.0;
  const bool poly = p.domain.as<Polydisk>() != nullptr;
  for (const CVec& z : grid) {
    const double s = sbg_norm(lam, z);
    sup = std::max(sup, s);
    if (poly) {
      double ref = 0.0;
      for (int j = 0; j < d; ++j) ref += 2.0 * std::norm(z[j] / p.domain.as<Polydisk>()->radii[static_cast<std::size_t>(j)]);
      cf_err = std::max(cf_err, std::abs(s - std::sqrt(ref)));
    }
  }
  rep.add_row({std::string("sbg_sup"), 0.0, std::string(), sup, 2.0, std::string()});
  rep.check("sbg_sup", sup, "<=", 2.0, 1e-6);
  if (poly) rep.check("sbg_closed_form", cf_err, "<=", 1e-8);

  // -exp(-eta lambda)
  try {
    const auto bd = bd_psh_construct(lam, p.eta, p.C, g, grid);
    rep.add_row({std::string("bd_psh"), static_cast<double>(bd.attempts), std::string(), bd.eta, bd.min_margin,
                 std::string("ok")});
    rep.check("bd_psh_eta", bd.eta, ">=", std::ldexp(1.0, -10));
    rep.check("bd_psh_margin", bd.min_margin, ">=", -1e-8);
    rep.check("bd_psh_grid_points", static_cast<double>(bd.grid_points), ">=", 500);
    rep.extra["bd_psh"] = {{"eta", bd.eta}, {"gradient_norm", bd.max_gradient_norm}, {"bilipschitz", bd.bilipschitz}};

    // Chart psh functions along a boundary-approaching sequence.
    double a2max = 0.0;
    bool all_ok = true;
    const double mth = 2.0 * p.C * std::exp(2.0 * p.C * bd.eta * p.chart_radius) / bd.eta;
    const double cap = 0.75 + 1.5 * 2.0 * mth * std::exp(2.0 * p.C * bd.eta * p.chart_radius);
    for (int c = 0; c < p.chart_centers; ++c) {
      CVec zeta = CVec::Zero(d);
      zeta[0] = std::polar(1.0 - std::pow(0.7, c), 0.37 * c);
      ChartPshOptions co;
      co.ball_samples = p.chart_ball_samples;
      co.seed = p.seed + static_cast<std::uint64_t>(c);
      const auto cr = chart_psh(p.domain, lam, zeta, p.chart_radius, p.C, bd.eta, g, co);
      a2max = std::max(a2max, cr.A2);
      all_ok = all_ok && cr.ok();
      rep.add_row({std::string("chart_psh"), static_cast<double>(c), fmt_point(zeta), cr.A2, cr.ball_margin,
                   std::string(cr.ok() ? "ok" : "fail")});
    }
    rep.check_true("chart_psh_all_centers", all_ok);
    rep.check("chart_psh_A2_cap", a2max, "<=", cap);
  } catch (const Error& e) {
    rep.check_true("bd_psh_construct", false, e.what());
  }

  // (P~_q): lambda_M = t log K with t = 1 / sup ||d log K||^2 over the grid,
  // a single potential that works for every M once the compact is chosen.
  const auto pgrid = detail::polydisk_grid(d, p.grid_radial, p.grid_angular, p.grid_max_radius, true);
  double psup = 0.0;
  for (const CVec& z : pgrid) psup = std::max(psup, sbg_norm(lam, z));
  const double t = 1.0 / (psup * psup);
  const PotentialFamily family = [&](double) { return scaled(lam, t); };
  std::vector<double> eps;
  for (int j = 1; j <= 12; ++j) eps.push_back(std::ldexp(1.0, -j));
  for (int q : p.qs) {
    const auto cert = pq_certify(p.domain, family, p.ms, q, eps, pgrid);
    for (const auto& e : cert.entries)
      rep.add_row({std::string("pq_q") + std::to_string(q), e.M, std::string("eps=" + fmt_double(e.epsilon)), e.sigma_min,
                   e.max_norm, std::string(to_string(e.verdict))});
    const bool expect = std::find(p.expect_pass.begin(), p.expect_pass.end(), q) != p.expect_pass.end();
    rep.check_true("pq_q" + std::to_string(q) + (expect ? "_pass" : "_fail"),
                   cert.overall == (expect ? PqVerdict::pass : PqVerdict::fail), to_string(cert.overall));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// recenter: Frankel-type normalization along boundary-approaching centers

struct RecenterParams {
  std::vector<Domain> domains;
  int centers = 20;
  double ratio = 0.7;  // 1 - |zeta_k| / |b| = ratio^k
  std::uint64_t seed = 1;
  SqueezingOptions squeezing;
  bool chart = true;
};

inline ExperimentReport run_recenter(const RecenterParams& p) {
  ExperimentReport rep;
  rep.experiment = "recenter";
  rep.columns = {"domain", "k", "center", "s", "A", "outer"};
  for (std::size_t di = 0; di < p.domains.size(); ++di) {
    const Domain& dom = p.domains[di];
    const int d = dom.dim();
    std::mt19937_64 rng(p.seed + di);
    const CVec u = detail::random_unit(d, rng);
    const CVec c0 = interior_point(dom);
    const CVec b = c0 + exit_time(dom, c0, u) * u;
    std::optional<MetricSource> g;
    if (p.chart && detail::has_closed_form(dom.node())) g = bergman_metric_source(closed_form_kernel(dom));
    std::vector<double> s(static_cast<std::size_t>(p.centers)), a(s.size(), std::nan(""));
    std::vector<char> outer(s.size());
    std::vector<CVec> zs(s.size());
    parallel_for(s.size(), [&](std::size_t k) {
      zs[k] = c0 + (1.0 - std::pow(p.ratio, static_cast<double>(k + 1))) * (b - c0);
      const Frankel fr = frankel_recenter(dom, zs[k]);
      const auto sq = verify_squeezing(dom, fr.map, p.squeezing);
      s[k] = sq.inner_radius;
      outer[k] = sq.outer_ok;
      if (g) {
        ChartOptions co;
        co.pairs = 0;
        co.squeezing = p.squeezing;
        a[k] = chart_embedding(dom, zs[k], *g, co).A;
      }
    });
    for (std::size_t k = 0; k < s.size(); ++k)
      rep.add_row({dom.variant_name() + "#" + std::to_string(di), static_cast<double>(k + 1), fmt_point(zs[k]), s[k],
                   g ? Cell(a[k]) : Cell(std::string()), std::string(outer[k] ? "yes" : "no")});
    std::vector<double> sorted = s;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[sorted.size() / 2];
    const std::string tag = dom.variant_name() + "#" + std::to_string(di);
    rep.check(tag + "_min_over_half_median", sorted.front() / (0.5 * median), ">=", 1.0);
    rep.check_true(tag + "_outer_containment", std::all_of(outer.begin(), outer.end(), [](char c) { return c != 0; }));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// compactness: sigma_{d-q+1} along boundary paths plus the variety probe

struct CompactnessCase {
  Domain domain;
  int q = 1;
  CVec direction;  // path z_k = (1 - 2^-k) b, b the boundary point along direction
  int k_max = 12;
  double cap = 1000.0;
  std::string expect;           // blows-up | bounded-witness
  std::string expect_variety;   // found | none | unknown | "" (unchecked)
  std::optional<double> constant;  // expected constant sigma
  double constant_tolerance = 0.1;
  // Growth check: cumulative factor and per-halving ratios against the
  // closed form; the first model_levels points come from a kernel model.
  std::optional<double> min_growth;
  double rate_tolerance = 0.1;
  int model_levels = 0;
  std::optional<ModelSpec> model;
};

struct CompactnessParams {
  std::vector<CompactnessCase> cases;
};

inline ExperimentReport run_compactness(const CompactnessParams& p) {
  ExperimentReport rep;
  rep.experiment = "compactness";
  rep.columns = {"case", "q", "k", "point", "sigma", "source", "verdict"};
  for (std::size_t ci = 0; ci < p.cases.size(); ++ci) {
    const auto& c = p.cases[ci];
    const int d = c.domain.dim();
    const Kernel closed = closed_form_kernel(c.domain);
    std::optional<Kernel> model;
    if (c.model_levels > 0) model = kernel_for(c.domain, c.model ? c.model : ModelSpec{});
    const CVec u = c.direction / c.direction.norm();
    const CVec b = exit_time(c.domain, CVec(CVec::Zero(d)), u) * u;
    std::vector<CVec> path;
    for (int k = 1; k <= c.k_max; ++k) path.push_back((1.0 - std::ldexp(1.0, -k)) * b);
    const MetricSource mixed = [&](const CVec& z) {
      for (int k = 0; k < c.model_levels && k < static_cast<int>(path.size()); ++k)
        if ((z - path[static_cast<std::size_t>(k)]).norm() == 0.0) return bergman_metric(*model, z);
      return bergman_metric(closed, z);
    };
    const auto v = compactness_classify(c.domain, mixed, c.q, path, c.cap);
    const std::string tag = "case" + std::to_string(ci) + "_" + c.domain.variant_name() + "_q" + std::to_string(c.q);
    for (std::size_t k = 0; k < path.size(); ++k)
      rep.add_row({tag, static_cast<double>(c.q), static_cast<double>(k + 1), fmt_point(path[k]), v.sigma[k],
                   std::string(static_cast<int>(k) < c.model_levels ? "model" : "closed"), std::string(to_string(v.verdict))});
    rep.check_true(tag + "_verdict", c.expect.empty() || c.expect == to_string(v.verdict), to_string(v.verdict));
    if (!c.expect_variety.empty()) {
      const auto probe = boundary_variety_probe(c.domain, c.q);
      const bool ok = c.expect_variety == to_string(probe.status) && (probe.status != ProbeStatus::found || probe.verified);
      rep.check_true(tag + "_variety_" + c.expect_variety, ok, probe.description);
    }
    if (c.constant) {
      double dev = 0.0;
      for (double s : v.sigma) dev = std::max(dev, std::abs(s / *c.constant - 1.0));
      rep.check(tag + "_constant_deviation", dev, "<=", c.constant_tolerance);
    }
    if (c.min_growth) {
      rep.check(tag + "_cumulative_growth", v.sigma.back() / v.sigma.front(), ">=", *c.min_growth);
      double worst = 0.0;
      for (std::size_t k = 0; k + 1 < path.size(); ++k) {
        const double ref = bergman_metric(closed, path[k + 1]).sigma(d - c.q + 1) / bergman_metric(closed, path[k]).sigma(d - c.q + 1);
        worst = std::max(worst, std::abs((v.sigma[k + 1] / v.sigma[k]) / ref - 1.0));
      }
      rep.check(tag + "_rate_vs_closed_form", worst, "<=", c.rate_tolerance);
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// counterexample: the image of the bidisk under (z1, z2) -> (psi(z2) z1, z2)

struct CounterexampleParams {
  int grid_points = 100;
  double w_max = 0.99;
  int k_max = 10;
  double z1 = 0.3;
  bool direct = true;
};

namespace detail {

// Q(w) = |psi'(w) / psi(w)| (1 - |w|^2), with d log psi from a jet.
inline double q_value(cplx w) {
  const Jet x = Jet::var_a(w);
  return std::abs(log_covering_map(x)(1, 0)) * (1.0 - std::norm(w));
}

// R(w) = 2 log(1 / |psi(w)|)
inline double r_value(cplx w) { return -2.0 * log_covering_map(w).real(); }

// |d_{z2} log|det F'|^2| / sqrt(g_22 / 2) computed from kernels alone:
// d log|det F'|^2 = d log B_bidisk(z) - F'(z)^T (d log B_Omega)(F(z)).
inline double q_direct(const Kernel& bidisk, const Kernel& omega, const HoloMap& f, const CVec& z) {
  const ScalarPotential lb = log_kernel_potential(bidisk), lo = log_kernel_potential(omega);
  const CVec x = f(z);
  const CVec pb = complex_gradient(lb, z);
  const CVec po = complex_gradient(lo, x);
  const CMat jac = f.jacobian(z);
  const cplx dz2 = pb[1] - (jac.transpose() * po)[1];
  const double g22 = bergman_metric(bidisk, z).matrix()(1, 1).real();
  return std::abs(dz2) / std::sqrt(g22 / 2.0);
}

}  // namespace detail

inline ExperimentReport run_counterexample(const CounterexampleParams& p) {
  if (!(p.w_max < 1.0) || !(p.w_max > 0.0) || p.grid_points < 2)
    throw Error(ErrorCode::invalid_grid, "counterexample grid must lie in [0, 1)");
  if (p.k_max >= 30) throw Error(ErrorCode::invalid_grid, "k_max too close to the boundary");
  ExperimentReport rep;
  rep.experiment = "counterexample";
  rep.columns = {"series", "w", "Q", "R", "abs_diff", "direct", "direct_diff"};
  const Domain bidisk = make_polydisk({1.0, 1.0});
  const Kernel kb = closed_form_kernel(bidisk);
  const Domain omega = make_omega_psi();
  const Kernel ko = closed_form_kernel(omega);
  const HoloMap f = omega_psi_map();
  double worst = 0.0, worst_direct = 0.0;
  for (int i = 0; i < p.grid_points; ++i) {
    const double w = p.w_max * i / (p.grid_points - 1);
    const double q = detail::q_value(w), r = detail::r_value(w);
    worst = std::max(worst, std::abs(q - r));
    Cell direct = std::string(), ddiff = std::string();
    if (p.direct) {
      const double qd = detail::q_direct(kb, ko, f, make_point({p.z1, w}));
      worst_direct = std::max(worst_direct, std::abs(qd - q));
      direct = qd;
      ddiff = std::abs(qd - q);
    }
    rep.add_row({std::string("grid"), w, q, r, std::abs(q - r), direct, ddiff});
  }
  bool increasing = true;
  double prev = -kInf, last = 0.0;
  for (int k = 1; k <= p.k_max; ++k) {
    const double w = 1.0 - std::ldexp(1.0, -k);
    const double q = detail::q_value(w), r = detail::r_value(w);
    increasing = increasing && q > prev;
    prev = last = q;
    rep.add_row({std::string("divergence"), w, q, r, std::abs(q - r), std::string(), std::string()});
  }
  rep.check("identity_Q_equals_R", worst, "<=", 1e-10);
  rep.check("Q_at_0.99", detail::q_value(0.99), "==", 398.0, 1e-9);
  if (p.direct) rep.check("direct_vs_Q", worst_direct, "<=", 1e-6);
  rep.check_true("monotone_divergence", increasing && last > 4.0 * detail::q_value(0.5));
  return rep;
}

// ---------------------------------------------------------------------------
// koebe: B(z, z) delta(z)^2 in [1/16, 1] on planar domains

struct KoebeParams {
  std::vector<Domain> domains;
  int points = 200;
  std::uint64_t seed = 1;
};

inline ExperimentReport run_koebe(const KoebeParams& p) {
  ExperimentReport rep;
  rep.experiment = "koebe";
  rep.columns = {"domain", "z", "kernel", "delta", "product"};
  double lo = kInf, hi = -kInf;
  for (std::size_t di = 0; di < p.domains.size(); ++di) {
    const Domain& dom = p.domains[di];
    if (!dom.as<PlanarRiemann>() && !(dom.dim() == 1 && dom.as<Ball>()))
      throw Error(ErrorCode::config, "koebe: domains must be planar");
    const Kernel k = closed_form_kernel(dom, KernelNormalization::normalized);
    const auto pts = sample_interior(dom, static_cast<std::size_t>(p.points), p.seed + di);
    for (const CVec& z : pts) {
      const double b = k.diagonal(z), delta = boundary_distance(dom, z);
      const double prod = b * delta * delta;
      lo = std::min(lo, prod);
      hi = std::max(hi, prod);
      rep.add_row({"planar#" + std::to_string(di), fmt_point(z), b, delta, prod});
    }
  }
  rep.check("min_product", lo, ">=", 1.0 / 16.0, 1e-6);
  rep.check("max_product", hi, "<=", 1.0, 1e-6);
  return rep;
}

// ---------------------------------------------------------------------------
// Config parsing. Top-level key "experiment" selects the runner; all other keys
// are validated strictly per experiment.

inline KobayashiOptions kobayashi_options_from_json(const json& j, const std::string& w) {
  KobayashiOptions o;
  if (j.is_null()) return o;
  check_keys(j, {"disk_degree", "radial", "angular", "coarse_radial", "coarse_angular", "shrink", "restarts",
                 "evals_per_restart", "poly_degree", "interior_samples", "boundary_samples", "lawson_iterations", "seed"},
             w);
  o.disk_degree = read_or(j, "disk_degree", o.disk_degree, w);
  o.radial = read_or(j, "radial", o.radial, w);
  o.angular = read_or(j, "angular", o.angular, w);
  o.coarse_radial = read_or(j, "coarse_radial", o.coarse_radial, w);
  o.coarse_angular = read_or(j, "coarse_angular", o.coarse_angular, w);
  o.shrink = read_or(j, "shrink", o.shrink, w);
  o.restarts = read_or(j, "restarts", o.restarts, w);
  o.evals_per_restart = read_or(j, "evals_per_restart", o.evals_per_restart, w);
  o.poly_degree = read_or(j, "poly_degree", o.poly_degree, w);
  o.interior_samples = read_or(j, "interior_samples", o.interior_samples, w);
  o.boundary_samples = read_or(j, "boundary_samples", o.boundary_samples, w);
  o.lawson_iterations = read_or(j, "lawson_iterations", o.lawson_iterations, w);
  o.seed = read_or(j, "seed", o.seed, w);
  return o;
}

inline std::vector<Domain> domains_from_json(const json& j, const std::string& w) {
  if (!j.is_array() || j.empty()) throw Error(ErrorCode::config, w + ": expected a non-empty array of domains");
  std::vector<Domain> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(domain_from_json(j[i], w + "[" + std::to_string(i) + "]"));
  return out;
}

inline ExperimentReport run_experiment(const json& cfg, KernelModel* model_out = nullptr) {
  const std::string w = "config";
  const auto name = read<std::string>(cfg, "experiment", w);
  auto null_or = [&](const char* key) { return cfg.contains(key) ? cfg.at(key) : json(); };
  if (name == "kernel") {
    check_keys(cfg, {"experiment", "domain", "degree", "nodes", "seed", "pairs", "radius", "tolerance", "time_limit", "model_out"}, w);
    KernelParams p;
    p.domain = domain_from_json(require(cfg, "domain", w));
    p.degree = read_or(cfg, "degree", p.degree, w);
    p.nodes = read_or(cfg, "nodes", p.nodes, w);
    p.seed = read<std::uint64_t>(cfg, "seed", w);
    p.pairs = read_or(cfg, "pairs", p.pairs, w);
    p.radius = read_or(cfg, "radius", p.radius, w);
    p.tolerance = read_or(cfg, "tolerance", p.tolerance, w);
    p.time_limit = read_or(cfg, "time_limit", p.time_limit, w);
    return run_kernel(p, model_out);
  }
  if (name == "metric") {
    check_keys(cfg, {"experiment", "domain", "points", "samples", "seed", "directions", "model"}, w);
    MetricParams p;
    p.domain = domain_from_json(require(cfg, "domain", w));
    if (cfg.contains("points"))
      for (const auto& x : cfg.at("points")) p.points.push_back(point_from_json(x, w + ".points"));
    p.samples = read_or(cfg, "samples", p.samples, w);
    p.seed = read<std::uint64_t>(cfg, "seed", w);
    p.directions = read_or(cfg, "directions", p.directions, w);
    p.model = detail::model_from_json(null_or("model"), w + ".model");
    return run_metric(p);
  }
  if (name == "kobayashi") {
    check_keys(cfg, {"experiment", "domain", "samples", "seed", "radius", "options", "ball_tolerance", "envelope_cap", "gap_flag"}, w);
    ComparabilityParams p;
    p.domain = domain_from_json(require(cfg, "domain", w));
    p.samples = read_or(cfg, "samples", p.samples, w);
    p.seed = read<std::uint64_t>(cfg, "seed", w);
    p.radius = read_or(cfg, "radius", p.radius, w);
    p.kobayashi = kobayashi_options_from_json(null_or("options"), w + ".options");
    p.ball_tolerance = read_or(cfg, "ball_tolerance", p.ball_tolerance, w);
    p.envelope_cap = read_or(cfg, "envelope_cap", p.envelope_cap, w);
    p.gap_flag = read_or(cfg, "gap_flag", p.gap_flag, w);
    return run_comparability(p);
  }
  if (name == "green") {
    check_keys(cfg, {"experiment", "domain", "pairs", "tau", "seeds", "bound", "stability"}, w);
    GreenParams p;
    p.domain = domain_from_json(require(cfg, "domain", w));
    p.pairs = read_or(cfg, "pairs", p.pairs, w);
    p.tau = read_or(cfg, "tau", p.tau, w);
    p.seeds = read<std::vector<std::uint64_t>>(cfg, "seeds", w);
    if (p.seeds.empty()) throw Error(ErrorCode::config, "config.seeds: at least one seed");
    p.bound = read_or(cfg, "bound", p.bound, w);
    p.stability = read_or(cfg, "stability", p.stability, w);
    return run_green(p);
  }
  if (name == "psh-certify") {
    check_keys(cfg, {"experiment", "domain", "seed", "scaling_points", "scales", "grid", "eta", "C", "chart", "M", "q", "expect_pass"}, w);
    PshParams p;
    p.domain = domain_from_json(require(cfg, "domain", w));
    p.seed = read<std::uint64_t>(cfg, "seed", w);
    p.scaling_points = read_or(cfg, "scaling_points", p.scaling_points, w);
    p.scales = read_or(cfg, "scales", p.scales, w);
    if (cfg.contains("grid")) {
      const auto& g = cfg.at("grid");
      check_keys(g, {"radial", "angular", "max_radius"}, w + ".grid");
      p.grid_radial = read_or(g, "radial", p.grid_radial, w + ".grid");
      p.grid_angular = read_or(g, "angular", p.grid_angular, w + ".grid");
      p.grid_max_radius = read_or(g, "max_radius", p.grid_max_radius, w + ".grid");
    }
    p.eta = read_or(cfg, "eta", p.eta, w);
    p.C = read_or(cfg, "C", p.C, w);
    if (cfg.contains("chart")) {
      const auto& c = cfg.at("chart");
      check_keys(c, {"centers", "radius", "ball_samples"}, w + ".chart");
      p.chart_centers = read_or(c, "centers", p.chart_centers, w + ".chart");
      p.chart_radius = read_or(c, "radius", p.chart_radius, w + ".chart");
      p.chart_ball_samples = read_or(c, "ball_samples", p.chart_ball_samples, w + ".chart");
    }
    p.ms = read_or(cfg, "M", p.ms, w);
    p.qs = read_or(cfg, "q", p.qs, w);
    p.expect_pass = read_or(cfg, "expect_pass", p.expect_pass, w);
    return run_psh(p);
  }
  if (name == "recenter") {
    check_keys(cfg, {"experiment", "domains", "centers", "ratio", "seed", "sphere_samples", "interior_samples", "chart"}, w);
    RecenterParams p;
    p.domains = domains_from_json(require(cfg, "domains", w), w + ".domains");
    p.centers = read_or(cfg, "centers", p.centers, w);
    p.ratio = read_or(cfg, "ratio", p.ratio, w);
    p.seed = read<std::uint64_t>(cfg, "seed", w);
    p.squeezing.sphere_samples = read_or(cfg, "sphere_samples", p.squeezing.sphere_samples, w);
    p.squeezing.interior_samples = read_or(cfg, "interior_samples", p.squeezing.interior_samples, w);
    p.chart = read_or(cfg, "chart", p.chart, w);
    return run_recenter(p);
  }
  if (name == "compactness") {
    check_keys(cfg, {"experiment", "cases"}, w);
    CompactnessParams p;
    const auto& cs = require(cfg, "cases", w);
    if (!cs.is_array() || cs.empty()) throw Error(ErrorCode::config, "config.cases: expected a non-empty array");
    for (std::size_t i = 0; i < cs.size(); ++i) {
      const std::string cw = w + ".cases[" + std::to_string(i) + "]";
      const auto& j = cs[i];
      check_keys(j, {"domain", "q", "direction", "k_max", "cap", "expect", "expect_variety", "constant", "constant_tolerance",
                     "min_growth", "rate_tolerance", "model_levels", "model"},
                 cw);
      CompactnessCase c;
      c.domain = domain_from_json(require(j, "domain", cw), cw + ".domain");
      c.q = read<int>(j, "q", cw);
      c.direction = point_from_json(require(j, "direction", cw), cw + ".direction");
      if (c.direction.size() != c.domain.dim() || c.direction.norm() == 0.0)
        throw Error(ErrorCode::config, cw + ".direction: wrong dimension or zero");
      c.k_max = read_or(j, "k_max", c.k_max, cw);
      c.cap = read_or(j, "cap", c.cap, cw);
      c.expect = read_or<std::string>(j, "expect", "", cw);
      c.expect_variety = read_or<std::string>(j, "expect_variety", "", cw);
      if (j.contains("constant")) c.constant = read<double>(j, "constant", cw);
      c.constant_tolerance = read_or(j, "constant_tolerance", c.constant_tolerance, cw);
      if (j.contains("min_growth")) c.min_growth = read<double>(j, "min_growth", cw);
      c.rate_tolerance = read_or(j, "rate_tolerance", c.rate_tolerance, cw);
      c.model_levels = read_or(j, "model_levels", c.model_levels, cw);
      c.model = detail::model_from_json(j.contains("model") ? j.at("model") : json(), cw + ".model");
      p.cases.push_back(std::move(c));
    }
    return run_compactness(p);
  }
  if (name == "counterexample") {
    check_keys(cfg, {"experiment", "grid_points", "w_max", "k_max", "z1", "direct"}, w);
    CounterexampleParams p;
    p.grid_points = read_or(cfg, "grid_points", p.grid_points, w);
    p.w_max = read_or(cfg, "w_max", p.w_max, w);
    p.k_max = read_or(cfg, "k_max", p.k_max, w);
    p.z1 = read_or(cfg, "z1", p.z1, w);
    p.direct = read_or(cfg, "direct", p.direct, w);
    return run_counterexample(p);
  }
  if (name == "koebe") {
    check_keys(cfg, {"experiment", "domains", "points", "seed"}, w);
    KoebeParams p;
    p.domains = domains_from_json(require(cfg, "domains", w), w + ".domains");
    p.points = read_or(cfg, "points", p.points, w);
    p.seed = read<std::uint64_t>(cfg, "seed", w);
    return run_koebe(p);
  }
  throw Error(ErrorCode::config, "config: unknown experiment '" + name + "'");
}

}  // namespace invmetric
