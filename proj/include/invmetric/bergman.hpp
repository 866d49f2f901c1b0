#pragma once

// Bergman kernels: closed forms on model domains, orthonormal polynomial
// expansions fitted by quadrature, and the transformation rule under
// biholomorphisms. Every kernel is also evaluable on Jets, which yields exact
// mixed derivatives of order <= (2, 2).
//
// Convention: the second slot is written holomorphically as omega = conj(w),
// so K(z, w) = k(z, omega) with k holomorphic in both arguments.

#include "invmetric/domain.hpp"
#include "invmetric/quadrature.hpp"

#include <Eigen/Cholesky>

#include <memory>

namespace invmetric {

// normalized: kernel of Lebesgue measure divided by pi^d, so B_disk(0, 0) = 1.
enum class KernelNormalization { lebesgue, normalized };

inline double normalization_factor(KernelNormalization n, int dim) {
  return n == KernelNormalization::normalized ? std::pow(kPi, dim) : 1.0;
}

// Type-erased kernel source.
struct Kernel {
  int dim = 0;
  std::string name;
  std::function<cplx(const CVec&, const CVec&)> value;                  // K(z, w)
  std::function<Jet(const PointT<Jet>&, const PointT<Jet>&)> jet;       // k(z(a), omega(b))

  cplx operator()(const CVec& z, const CVec& w) const { return value(z, w); }
  double diagonal(const CVec& z) const { return value(z, z).real(); }
};

// ---------------------------------------------------------------------------
// Jacobian determinants of maps evaluated on jets

namespace detail {

// det F'(x(a)) as a jet in a, for x depending on a only; b serves as the
// infinitesimal for the partial derivatives.
template <class F>
Jet jacobian_det_a(const F& f, const PointT<Jet>& x) {
  const std::size_t d = x.size();
  std::vector<std::vector<Jet>> jac(d, std::vector<Jet>(d));
  for (std::size_t j = 0; j < d; ++j) {
    PointT<Jet> y = x;
    y[j](0, 1) += 1.0;
    const PointT<Jet> fy = f(y);
    for (std::size_t i = 0; i < d; ++i) {
      Jet e;
      for (int m = 0; m < Jet::kSize; ++m) e(m, 0) = fy[i](m, 1);
      jac[i][j] = e;
    }
  }
  return small_det(std::move(jac));
}

// Same for x depending on b only, with a as the infinitesimal.
template <class F>
Jet jacobian_det_b(const F& f, const PointT<Jet>& x) {
  const std::size_t d = x.size();
  std::vector<std::vector<Jet>> jac(d, std::vector<Jet>(d));
  for (std::size_t j = 0; j < d; ++j) {
    PointT<Jet> y = x;
    y[j](1, 0) += 1.0;
    const PointT<Jet> fy = f(y);
    for (std::size_t i = 0; i < d; ++i) {
      Jet e;
      for (int n = 0; n < Jet::kSize; ++n) e(0, n) = fy[i](1, n);
      jac[i][j] = e;
    }
  }
  return small_det(std::move(jac));
}

// Conjugate-side version of a holomorphic map: G*(W) = conj(G(conj W)).
template <class F>
auto conj_side(const F& f) {
  return [f](const PointT<Jet>& w) { return conj_coeffs(f(conj_coeffs(w))); };
}

// Preimage under a polynomial Riemann map, on jets, by Newton's method from
// the exact preimage of the constant term.
inline Jet planar_inverse_jet(const std::vector<cplx>& a, const PlanarRiemann& pr, const Jet& x) {
  const auto z0 = planar_preimage(pr, x.value());
  if (!z0) throw Error(ErrorCode::invalid_argument, "planar kernel: point outside domain");
  const std::vector<cplx> da = poly_derivative(a);
  Jet z(*z0);
  for (int it = 0; it < 5; ++it) z = z - (poly_eval(a, z) - x) / poly_eval(da, z);
  return z;
}

inline std::vector<cplx> conj_poly(const std::vector<cplx>& a) {
  std::vector<cplx> r(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) r[k] = std::conj(a[k]);
  return r;
}

template <class T>
PointT<T> slice(const PointT<T>& z, std::size_t off, std::size_t n) {
  return PointT<T>(z.begin() + static_cast<std::ptrdiff_t>(off), z.begin() + static_cast<std::ptrdiff_t>(off + n));
}

// Lebesgue-normalized closed form k(z, omega) on a model node.
template <class T>
T closed_form_eval(const DomainNode& node, const PointT<T>& z, const PointT<T>& om) {
  return std::visit(
      [&](const auto& v) -> T {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, Ball>) {
          const int d = v.dim;
          const double r2 = v.radius * v.radius;
          T s(0.0);
          for (int i = 0; i < d; ++i) s = s + (z[i] - v.center[i]) * (om[i] - std::conj(v.center[i]));
          double fact = 1.0;
          for (int k = 2; k <= d; ++k) fact *= k;
          const double c = fact / (std::pow(kPi, d) * std::pow(r2, d));
          using std::pow;
          return c * pow(1.0 - s / r2, -(d + 1.0));
        } else if constexpr (std::is_same_v<V, Polydisk>) {
          T prod(1.0);
          for (std::size_t j = 0; j < v.radii.size(); ++j) {
            const double r2 = v.radii[j] * v.radii[j];
            const T t = 1.0 - z[j] * om[j] / r2;
            prod = prod * (1.0 / (kPi * r2)) / (t * t);
          }
          return prod;
        } else if constexpr (std::is_same_v<V, Ellipsoid>) {
          // Linear image of the unit ball: x_j = sqrt(w_j) z_j.
          const int d = static_cast<int>(v.weights.size());
          T s(0.0);
          double det = 1.0, fact = 1.0;
          for (int i = 0; i < d; ++i) {
            s = s + v.weights[i] * z[i] * om[i];
            det *= v.weights[i];
          }
          for (int k = 2; k <= d; ++k) fact *= k;
          using std::pow;
          return (det * fact / std::pow(kPi, d)) * pow(1.0 - s, -(d + 1.0));
        } else if constexpr (std::is_same_v<V, PlanarRiemann>) {
          const std::vector<cplx>& a = v.coeffs;
          const std::vector<cplx> ac = conj_poly(a);
          const std::vector<cplx> da = poly_derivative(a), dac = poly_derivative(ac);
          T zeta, zetac;
          if constexpr (std::is_same_v<T, cplx>) {
            const auto p = planar_preimage(v, z[0]);
            const auto q = planar_preimage(v, std::conj(om[0]));
            if (!p || !q) throw Error(ErrorCode::invalid_argument, "planar kernel: point outside domain");
            zeta = *p;
            zetac = std::conj(*q);
          } else {
            zeta = planar_inverse_jet(a, v, z[0]);
            // Preimage under f* of omega, seeded from the conjugate preimage.
            const auto q = planar_preimage(v, std::conj(om[0].value()));
            if (!q) throw Error(ErrorCode::invalid_argument, "planar kernel: point outside domain");
            Jet zc(std::conj(*q));
            for (int it = 0; it < 5; ++it) zc = zc - (poly_eval(ac, zc) - om[0]) / poly_eval(dac, zc);
            zetac = zc;
          }
          const T t = 1.0 - zeta * zetac;
          return (1.0 / kPi) / (t * t * poly_eval(da, zeta) * poly_eval(dac, zetac));
        } else if constexpr (std::is_same_v<V, Product>) {
          const auto dl = static_cast<std::size_t>(v.left.dim()), dr = static_cast<std::size_t>(v.right.dim());
          return closed_form_eval<T>(v.left.node(), slice(z, 0, dl), slice(om, 0, dl)) *
                 closed_form_eval<T>(v.right.node(), slice(z, dl, dr), slice(om, dl, dr));
        } else if constexpr (std::is_same_v<V, Image>) {
          const HoloMap& m = v.map;
          if (!m.has_inverse())
            throw Error(ErrorCode::unsupported_operation, "image kernel needs an inverse map");
          if constexpr (std::is_same_v<T, cplx>) {
            const CVec zeta = m.inverse(from_std(z));
            const CVec eta = m.inverse(from_std(conj_coeffs(om)));
            const cplx dz = m.jacobian(zeta).determinant();
            const cplx dw = m.jacobian(eta).determinant();
            if (std::abs(dz) == 0.0 || std::abs(dw) == 0.0)
              throw Error(ErrorCode::degenerate_map, "singular Jacobian");
            return closed_form_eval<T>(v.base.node(), to_std(zeta), conj_coeffs(to_std(eta))) /
                   (dz * std::conj(dw));
          } else {
            if (!m.inverse_jet || !m.forward_jet)
              throw Error(ErrorCode::unsupported_operation, "image kernel derivatives need jet maps");
            const PointT<Jet> zeta = m.inverse_jet(z);
            const PointT<Jet> zetac = conj_side(m.inverse_jet)(om);
            const Jet dz = jacobian_det_a(m.forward_jet, zeta);
            const Jet dw = jacobian_det_b(conj_side(m.forward_jet), zetac);
            return closed_form_eval<T>(v.base.node(), zeta, zetac) / (dz * dw);
          }
        } else {
          throw Error(ErrorCode::unsupported_operation, "no closed-form kernel for convex bodies");
        }
      },
      node);
}

inline bool has_closed_form(const DomainNode& node) {
  return std::visit(
      [](const auto& v) -> bool {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, ConvexBody>) return false;
        else if constexpr (std::is_same_v<V, Product>) return has_closed_form(v.left.node()) && has_closed_form(v.right.node());
        else if constexpr (std::is_same_v<V, Image>) return v.map.has_inverse() && has_closed_form(v.base.node());
        else return true;
      },
      node);
}

}  // namespace detail

// Closed-form Bergman kernel of a model domain as a kernel source.
inline Kernel closed_form_kernel(const Domain& spec, KernelNormalization norm = KernelNormalization::lebesgue) {
  if (!detail::has_closed_form(spec.node()))
    throw Error(ErrorCode::unsupported_operation, "no closed-form kernel for " + spec.variant_name());
  const double s = normalization_factor(norm, spec.dim());
  Kernel k;
  k.dim = spec.dim();
  k.name = "closed_form:" + spec.variant_name();
  k.value = [spec, s](const CVec& z, const CVec& w) {
    return s * detail::closed_form_eval<cplx>(spec.node(), to_std(z), to_std(CVec(w.conjugate())));
  };
  k.jet = [spec, s](const PointT<Jet>& z, const PointT<Jet>& om) {
    return s * detail::closed_form_eval<Jet>(spec.node(), z, om);
  };
  return k;
}

// K(z, w) for a model domain.
inline cplx kernel_closed_form(const Domain& spec, const CVec& z, const CVec& w,
                               KernelNormalization norm = KernelNormalization::lebesgue) {
  return closed_form_kernel(spec, norm)(z, w);
}

// Kernel of F(base) from the kernel of base:
// K_image(F z, F w) = K_base(z, w) / (det F'(z) conj det F'(w)).
inline Kernel kernel_transform(const Kernel& base, const HoloMap& map) {
  if (!map.has_inverse()) throw Error(ErrorCode::unsupported_operation, "kernel_transform needs an inverse map");
  Kernel k;
  k.dim = base.dim;
  k.name = "image:" + map.name + "(" + base.name + ")";
  k.value = [base, map](const CVec& x, const CVec& y) {
    const CVec z = map.inverse(x), w = map.inverse(y);
    const cplx dz = map.jacobian(z).determinant(), dw = map.jacobian(w).determinant();
    if (std::abs(dz) < 1e-300 || std::abs(dw) < 1e-300)
      throw Error(ErrorCode::degenerate_map, "singular Jacobian in kernel_transform");
    return base(z, w) / (dz * std::conj(dw));
  };
  k.jet = [base, map](const PointT<Jet>& x, const PointT<Jet>& om) {
    if (!map.inverse_jet || !map.forward_jet)
      throw Error(ErrorCode::unsupported_operation, "kernel_transform derivatives need jet maps");
    const PointT<Jet> z = map.inverse_jet(x);
    const PointT<Jet> zc = detail::conj_side(map.inverse_jet)(om);
    const Jet dz = detail::jacobian_det_a(map.forward_jet, z);
    const Jet dw = detail::jacobian_det_b(detail::conj_side(map.forward_jet), zc);
    if (std::abs(dz.value()) < 1e-300 || std::abs(dw.value()) < 1e-300)
      throw Error(ErrorCode::degenerate_map, "singular Jacobian in kernel_transform");
    return base.jet(z, zc) / (dz * dw);
  };
  return k;
}

// Scalar convenience: B_image(F z, F w) from a base kernel evaluated at (z, w).
inline cplx kernel_transform(const Kernel& base, const HoloMap& map, const CVec& z, const CVec& w) {
  const cplx dz = map.jacobian(z).determinant(), dw = map.jacobian(w).determinant();
  if (std::abs(dz) < 1e-300 || std::abs(dw) < 1e-300)
    throw Error(ErrorCode::degenerate_map, "singular Jacobian in kernel_transform");
  return base(z, w) / (dz * std::conj(dw));
}

// ---------------------------------------------------------------------------
// Numerical kernels from orthonormalized monomials

struct KernelModel {
  int dim = 0;
  int degree = 0;
  bool tensor = false;                     // per-coordinate degree (product rules)
  std::vector<std::vector<int>> indices;   // multi-indices alpha
  CMat coeffs;                             // C: phi = C m
  CMat pairing;                            // P = C^T conj(C), K = m(z)^T P m(conj w)
  std::size_t nodes = 0;
  std::uint64_t seed = 0;
  double condition = 1.0;                  // of the Jacobi-scaled Gram matrix
  double jitter = 0.0;
  std::string quadrature;

  std::size_t size() const { return indices.size(); }

  template <class T>
  std::vector<T> monomials(const PointT<T>& z) const {
    std::vector<std::vector<T>> pw(static_cast<std::size_t>(dim));
    int maxdeg = 0;
    for (const auto& a : indices)
      for (int e : a) maxdeg = std::max(maxdeg, e);
    for (int j = 0; j < dim; ++j) {
      pw[j].resize(static_cast<std::size_t>(maxdeg + 1));
      pw[j][0] = T(1.0);
      for (int e = 1; e <= maxdeg; ++e) pw[j][e] = pw[j][e - 1] * z[j];
    }
    std::vector<T> m(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
      T acc(1.0);
      for (int j = 0; j < dim; ++j)
        if (indices[i][j] > 0) acc = acc * pw[j][indices[i][j]];
      m[i] = acc;
    }
    return m;
  }

  CVec monomial_vector(const CVec& z) const {
    const auto m = monomials(to_std(z));
    return from_std(m);
  }

  cplx operator()(const CVec& z, const CVec& w) const {
    const CVec mz = monomial_vector(z), mw = monomial_vector(CVec(w.conjugate()));
    return (mz.transpose() * pairing * mw)(0, 0);
  }

  Jet jet(const PointT<Jet>& z, const PointT<Jet>& om) const {
    const auto mz = monomials(z), mo = monomials(om);
    const auto n = static_cast<Eigen::Index>(indices.size());
    Jet total;
    for (Eigen::Index i = 0; i < n; ++i) {
      Jet row;
      for (Eigen::Index j = 0; j < n; ++j) {
        const cplx p = pairing(i, j);
        if (p != cplx(0.0)) row += mo[j] * p;
      }
      total += mz[i] * row;
    }
    return total;
  }

  void set_coeffs(CMat c) {
    coeffs = std::move(c);
    pairing = coeffs.transpose() * coeffs.conjugate();
  }
};

namespace detail {

inline CMat gram_from_rule(const QuadRule& q, const KernelModel& km) {
  const auto n = static_cast<Eigen::Index>(km.size());
  CMat g = CMat::Zero(n, n);
  constexpr Eigen::Index kBatch = 512;
  CMat block(n, kBatch);
  Eigen::Index fill = 0;
  auto flush = [&]() {
    if (fill == 0) return;
    g.noalias() += block.leftCols(fill) * block.leftCols(fill).adjoint();
    fill = 0;
  };
  for (std::size_t k = 0; k < q.nodes.size(); ++k) {
    block.col(fill++) = km.monomial_vector(q.nodes[k]) * std::sqrt(q.weights[k]);
    if (fill == kBatch) flush();
  }
  flush();
  return g;
}

// Gram matrix of one factor domain with its own degree-N monomials, plus the
// node count used.
inline std::pair<CMat, std::size_t> factor_gram(const Domain& spec, int degree, std::size_t nodes,
                                                std::uint64_t seed, std::string& rule_name) {
  KernelModel km;
  km.dim = spec.dim();
  QuadRule q;
  if (const auto* pd = spec.as<Polydisk>(); pd && pd->radii.size() == 1) {
    q = polar_disk_rule(degree, pd->radii[0]);
    rule_name += "polar;";
  } else if (const auto* b = spec.as<Ball>(); b && b->dim == 1) {
    q = polar_disk_rule(degree, b->radius, b->center[0]);
    rule_name += "polar;";
  } else if (const auto* pr = spec.as<PlanarRiemann>()) {
    q = planar_rule(*pr, degree);
    rule_name += "planar-polar;";
  } else {
    q = qmc_rule(spec, nodes, seed);
    rule_name += "halton;";
  }
  km.indices = total_degree_indices(km.dim, degree);
  return {gram_from_rule(q, km), q.nodes.size()};
}

// Factors of nested products and polydisks, flattened left to right.
inline void product_factors(const Domain& spec, std::vector<Domain>& out) {
  if (const auto* p = spec.as<Product>()) {
    product_factors(p->left, out);
    product_factors(p->right, out);
  } else if (const auto* pd = spec.as<Polydisk>(); pd && pd->radii.size() > 1) {
    for (double r : pd->radii) out.push_back(make_polydisk({r}));
  } else {
    out.push_back(spec);
  }
}

}  // namespace detail

// Fits the orthonormal expansion of the Bergman kernel with monomials of
// degree <= N (total degree; per factor on products). Gram matrices are
// assembled by Halton quadrature, or exactly by polar rules on disk factors.
inline KernelModel fit_kernel_numeric(const Domain& spec, int degree, std::size_t nodes, std::uint64_t seed) {
  if (degree < 0) throw Error(ErrorCode::invalid_argument, "fit_kernel_numeric: negative degree");
  KernelModel km;
  km.dim = spec.dim();
  km.degree = degree;
  km.seed = seed;

  std::vector<Domain> factors;
  detail::product_factors(spec, factors);
  CMat gram;
  if (factors.size() > 1) {
    // Tensor index set; the Gram matrix of a product rule is a Kronecker product.
    km.tensor = true;
    std::vector<std::vector<int>> idx{{}};
    gram = CMat::Ones(1, 1);
    std::uint64_t s = seed;
    for (const Domain& f : factors) {
      const auto fidx = total_degree_indices(f.dim(), degree);
      if (nodes < 10 * fidx.size() && !(f.as<Polydisk>() || f.as<PlanarRiemann>() || (f.as<Ball>() && f.dim() == 1)))
        throw Error(ErrorCode::invalid_argument, "fit_kernel_numeric: need nodes >= 10 x basis size");
      auto [g, used] = detail::factor_gram(f, degree, nodes, s++, km.quadrature);
      km.nodes += used;
      CMat kron(gram.rows() * g.rows(), gram.cols() * g.cols());
      for (Eigen::Index i = 0; i < gram.rows(); ++i)
        for (Eigen::Index j = 0; j < gram.cols(); ++j) kron.block(i * g.rows(), j * g.cols(), g.rows(), g.cols()) = gram(i, j) * g;
      gram = std::move(kron);
      std::vector<std::vector<int>> next;
      for (const auto& a : idx)
        for (const auto& b : fidx) {
          auto c = a;
          c.insert(c.end(), b.begin(), b.end());
          next.push_back(std::move(c));
        }
      idx = std::move(next);
    }
    km.indices = std::move(idx);
    km.quadrature = "tensor:" + km.quadrature;
  } else {
    km.indices = total_degree_indices(km.dim, degree);
    if (nodes < 10 * km.indices.size())
      throw Error(ErrorCode::invalid_argument, "fit_kernel_numeric: need nodes >= 10 x basis size");
    const QuadRule q = qmc_rule(spec, nodes, seed);
    km.nodes = q.nodes.size();
    km.quadrature = "halton";
    gram = detail::gram_from_rule(q, km);
  }

  // Jacobi scaling, then Cholesky with a jitter ladder.
  const auto n = gram.rows();
  RVec dscale(n);
  for (Eigen::Index i = 0; i < n; ++i) dscale[i] = 1.0 / std::sqrt(gram(i, i).real());
  CMat scaled = dscale.asDiagonal() * gram * dscale.asDiagonal();
  scaled = 0.5 * (scaled + scaled.adjoint()).eval();
  {
    Eigen::SelfAdjointEigenSolver<CMat> es(scaled, Eigen::EigenvaluesOnly);
    const RVec ev = es.eigenvalues();
    km.condition = ev[0] > 0 ? ev[n - 1] / ev[0] : kInf;
  }
  const double ladder[] = {0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6};
  for (double jit : ladder) {
    Eigen::LLT<CMat> llt(scaled + jit * CMat::Identity(n, n));
    if (llt.info() != Eigen::Success) continue;
    const CMat lower = llt.matrixL();
    bool ok = true;
    for (Eigen::Index i = 0; i < n; ++i)
      if (!(lower(i, i).real() > 1e-8)) ok = false;
    if (!ok) continue;
    const CMat linv = lower.triangularView<Eigen::Lower>().solve(CMat::Identity(n, n));
    km.jitter = jit;
    km.set_coeffs(linv * dscale.asDiagonal());
    return km;
  }
  throw Error(ErrorCode::ill_conditioned_basis,
              "Cholesky failed after jitter 1e-6 (condition " + std::to_string(km.condition) +
                  "); lower the degree");
}

inline Kernel model_kernel(std::shared_ptr<const KernelModel> km, KernelNormalization norm = KernelNormalization::lebesgue) {
  const double s = normalization_factor(norm, km->dim);
  Kernel k;
  k.dim = km->dim;
  k.name = "model:N=" + std::to_string(km->degree);
  k.value = [km, s](const CVec& z, const CVec& w) { return s * (*km)(z, w); };
  k.jet = [km, s](const PointT<Jet>& z, const PointT<Jet>& om) { return km->jet(z, om) * s; };
  return k;
}

inline Kernel model_kernel(KernelModel km, KernelNormalization norm = KernelNormalization::lebesgue) {
  return model_kernel(std::make_shared<const KernelModel>(std::move(km)), norm);
}

// ---------------------------------------------------------------------------
// Derivatives

// Jet of k(z + a u, conj(z) + b conj(w)).
inline Jet kernel_line_jet(const Kernel& k, const CVec& z, const CVec& u, const CVec& w) {
  return k.jet(line_a(z, u), line_b(z, w));
}

// d^alpha/dz^alpha d^beta/dzbar^beta K(z, z), where alpha and beta list
// coordinate indices (length <= 2 each). Computed by polarizing line jets.
inline cplx kernel_derivatives(const Kernel& k, const CVec& z, const std::vector<int>& alpha,
                               const std::vector<int>& beta) {
  if (alpha.size() > 2 || beta.size() > 2)
    throw Error(ErrorCode::unsupported_operation, "kernel_derivatives: order above 2 in a slot");
  const int d = k.dim;
  for (int i : alpha)
    if (i < 0 || i >= d) throw Error(ErrorCode::invalid_argument, "kernel_derivatives: bad index");
  for (int i : beta)
    if (i < 0 || i >= d) throw Error(ErrorCode::invalid_argument, "kernel_derivatives: bad index");
  auto unit = [d](int i) { CVec e = CVec::Zero(d); e[i] = 1.0; return e; };
  // Polarization terms (direction, weight) for one slot.
  auto terms = [&](const std::vector<int>& idx) {
    std::vector<std::pair<CVec, double>> t;
    if (idx.size() < 2) {
      t.push_back({idx.empty() ? CVec(CVec::Zero(d)) : unit(idx[0]), 1.0});
    } else if (idx[0] == idx[1]) {
      t.push_back({unit(idx[0]), 2.0});
    } else {
      // d_i d_j = [D^2_{e_i+e_j} - D^2_{e_i} - D^2_{e_j}] / 2 and D^2_u = 2 c_2(u).
      t.push_back({unit(idx[0]) + unit(idx[1]), 1.0});
      t.push_back({unit(idx[0]), -1.0});
      t.push_back({unit(idx[1]), -1.0});
    }
    return t;
  };
  const auto ta = terms(alpha), tb = terms(beta);
  const int ma = static_cast<int>(alpha.size()), nb = static_cast<int>(beta.size());
  cplx acc = 0.0;
  for (const auto& [u, wu] : ta)
    for (const auto& [w, ww] : tb) acc += wu * ww * kernel_line_jet(k, z, u, w)(ma, nb);
  return acc;
}

// Centered finite-difference derivative of K(z, z) with Richardson
// extrapolation, for cross-checks. Only first-order-per-slot derivatives.
inline cplx kernel_derivative_fd(const Kernel& k, const CVec& z, int i, int j, double h = 1e-4) {
  auto f = [&](double step) {
    // d_i dbar_j of K(z, z) = d/dz_i d/dw_j^* K(z, w)|_{w=z}.
    auto kv = [&](cplx a, cplx b) {
      CVec zz = z, ww = z;
      zz[i] += a;
      ww[j] += b;
      return k(zz, ww);
    };
    // Wirtinger derivatives from real central differences.
    auto dz = [&](cplx b) { return ((kv(step, b) - kv(-step, b)) - cplx(0, 1) * (kv(cplx(0, step), b) - kv(cplx(0, -step), b))) / (4.0 * step); };
    return std::conj(((std::conj(dz(step)) - std::conj(dz(-step))) - cplx(0, 1) * (std::conj(dz(cplx(0, step))) - std::conj(dz(cplx(0, -step))))) / (4.0 * step));
  };
  return (4.0 * f(h / 2) - f(h)) / 3.0;
}

}  // namespace invmetric
