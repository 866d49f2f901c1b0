#pragma once

// Domains in C^d: composable specifications with membership, exit times along
// real rays, the complex-line boundary distance delta(z; v), and sampling.

#include "invmetric/core.hpp"
#include "invmetric/jet.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <variant>

namespace invmetric {

// ---------------------------------------------------------------------------
// Holomorphic maps

struct HoloMap {
  using PointMap = std::function<CVec(const CVec&)>;
  using JetMap = std::function<PointT<Jet>(const PointT<Jet>&)>;

  int dim = 0;
  std::string name;
  PointMap forward;
  std::function<CMat(const CVec&)> jacobian;
  PointMap inverse;       // empty when unavailable
  JetMap forward_jet;     // empty when unavailable
  JetMap inverse_jet;     // empty when unavailable
  bool affine = false;
  CVec translation;  // affine payload, for serialization
  CMat linear;

  bool has_inverse() const { return static_cast<bool>(inverse); }
  CVec operator()(const CVec& z) const { return forward(z); }
};

namespace detail {

template <class F>
CMat jacobian_from_jets(const F& f, const CVec& z) {
  const auto d = z.size();
  CMat jac(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    PointT<Jet> x(static_cast<std::size_t>(d));
    for (Eigen::Index i = 0; i < d; ++i) x[i] = Jet(z[i]);
    x[j](0, 1) = 1.0;
    const PointT<Jet> y = f(x);
    for (Eigen::Index i = 0; i < d; ++i) jac(i, j) = y[i](0, 1);
  }
  return jac;
}

}  // namespace detail

// Builds a map from generic callables taking PointT<T> -> PointT<T> for
// T in {cplx, Jet}. The Jacobian is obtained exactly from jets.
template <class Fwd, class Inv>
HoloMap make_holo_map(int dim, std::string name, Fwd fwd, Inv inv) {
  HoloMap m;
  m.dim = dim;
  m.name = std::move(name);
  m.forward = [fwd](const CVec& z) { return from_std(fwd(to_std(z))); };
  m.forward_jet = [fwd](const PointT<Jet>& z) { return fwd(z); };
  m.jacobian = [fwd](const CVec& z) {
    return detail::jacobian_from_jets([&](const PointT<Jet>& x) { return fwd(x); }, z);
  };
  m.inverse = [inv](const CVec& z) { return from_std(inv(to_std(z))); };
  m.inverse_jet = [inv](const PointT<Jet>& z) { return inv(z); };
  return m;
}

template <class Fwd>
HoloMap make_holo_map(int dim, std::string name, Fwd fwd) {
  HoloMap m;
  m.dim = dim;
  m.name = std::move(name);
  m.forward = [fwd](const CVec& z) { return from_std(fwd(to_std(z))); };
  m.forward_jet = [fwd](const PointT<Jet>& z) { return fwd(z); };
  m.jacobian = [fwd](const CVec& z) {
    return detail::jacobian_from_jets([&](const PointT<Jet>& x) { return fwd(x); }, z);
  };
  return m;
}

inline HoloMap identity_map(int dim) {
  auto id = [](const auto& z) { return z; };
  HoloMap m = make_holo_map(dim, "identity", id, id);
  m.affine = true;
  m.translation = CVec::Zero(dim);
  m.linear = CMat::Identity(dim, dim);
  return m;
}

// z -> translation + linear * z
inline HoloMap affine_map(const CVec& translation, const CMat& linear) {
  const Eigen::Index d = translation.size();
  if (linear.rows() != d || linear.cols() != d)
    throw Error(ErrorCode::invalid_argument, "affine map: shape mismatch");
  Eigen::FullPivLU<CMat> lu(linear);
  if (!lu.isInvertible()) throw Error(ErrorCode::degenerate_map, "affine map: singular linear part");
  const CMat inv = lu.inverse();
  auto apply = [](const CVec& b, const CMat& a) {
    return [b, a](const auto& z) {
      using T = std::decay_t<decltype(z[0])>;
      PointT<T> r(z.size());
      for (Eigen::Index i = 0; i < b.size(); ++i) {
        T acc(b[i]);
        for (Eigen::Index j = 0; j < b.size(); ++j) acc = acc + z[j] * a(i, j);
        r[i] = acc;
      }
      return r;
    };
  };
  HoloMap m = make_holo_map(static_cast<int>(d), "affine", apply(translation, linear),
                            apply(CVec(-inv * translation), inv));
  m.jacobian = [linear](const CVec&) { return linear; };
  m.affine = true;
  m.translation = translation;
  m.linear = linear;
  return m;
}

// Covering map of the punctured disk, psi(z) = exp(-(1+z)/(1-z)), in log form.
template <class T>
T log_covering_map(const T& z) {
  return -(1.0 + z) / (1.0 - z);
}

// F(z1, z2) = (psi(z2) z1, z2), a biholomorphism from the bidisk onto its image.
inline HoloMap omega_psi_map() {
  auto fwd = [](const auto& z) {
    using std::exp;
    auto r = z;
    r[0] = exp(log_covering_map(z[1])) * z[0];
    return r;
  };
  auto inv = [](const auto& x) {
    using std::exp;
    auto r = x;
    r[0] = x[0] * exp(-log_covering_map(x[1]));
    return r;
  };
  return make_holo_map(2, "omega_psi", fwd, inv);
}

// ---------------------------------------------------------------------------
// Domain specifications

class Domain;

struct Ball {
  int dim = 1;
  double radius = 1.0;
  CVec center;  // size dim
};

struct Polydisk {
  std::vector<double> radii;
};

// sum_j w_j |z_j|^2 < 1
struct Ellipsoid {
  std::vector<double> weights;
};

// Image of the unit disk under the polynomial f(zeta) = sum_k a_k zeta^k.
struct PlanarRiemann {
  std::vector<cplx> coeffs;
};

// Convex body containing the origin, given by its radial function: for a unit
// real direction u, boundary_param(u) = t with t*u on the boundary.
struct ConvexBody {
  int dim = 1;
  std::function<double(const CVec&)> boundary_param;
  std::string kind;            // serialization tag
  std::vector<double> params;  // serialization payload
};

struct Product;
struct Image;

using DomainNode = std::variant<Ball, Polydisk, Ellipsoid, PlanarRiemann, ConvexBody, Product, Image>;

class Domain {
 public:
  Domain() = default;
  explicit Domain(std::shared_ptr<const DomainNode> node);

  const DomainNode& node() const;
  int dim() const { return dim_; }
  std::string variant_name() const;

  template <class V>
  const V* as() const { return std::get_if<V>(node_.get()); }

 private:
  std::shared_ptr<const DomainNode> node_;
  int dim_ = 0;
};

struct Product {
  Domain left, right;
};

struct Image {
  Domain base;
  HoloMap map;
};

namespace detail {

inline int node_dim(const DomainNode& n) {
  return std::visit(
      [](const auto& v) -> int {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, Ball>) return v.dim;
        else if constexpr (std::is_same_v<V, Polydisk>) return static_cast<int>(v.radii.size());
        else if constexpr (std::is_same_v<V, Ellipsoid>) return static_cast<int>(v.weights.size());
        else if constexpr (std::is_same_v<V, PlanarRiemann>) return 1;
        else if constexpr (std::is_same_v<V, ConvexBody>) return v.dim;
        else if constexpr (std::is_same_v<V, Product>) return v.left.dim() + v.right.dim();
        else return v.base.dim();
      },
      n);
}

inline void validate(const DomainNode& n) {
  std::visit(
      [](const auto& v) {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, Ball>) {
          if (v.dim < 1 || !(v.radius > 0) || v.center.size() != v.dim)
            throw Error(ErrorCode::invalid_argument, "ball: bad dimension, radius or center");
        } else if constexpr (std::is_same_v<V, Polydisk>) {
          if (v.radii.empty()) throw Error(ErrorCode::invalid_argument, "polydisk: no factors");
          for (double r : v.radii)
            if (!(r > 0)) throw Error(ErrorCode::invalid_argument, "polydisk: radius must be positive");
        } else if constexpr (std::is_same_v<V, Ellipsoid>) {
          if (v.weights.empty()) throw Error(ErrorCode::invalid_argument, "ellipsoid: no weights");
          for (double w : v.weights)
            if (!(w > 0)) throw Error(ErrorCode::invalid_argument, "ellipsoid: weight must be positive");
        } else if constexpr (std::is_same_v<V, PlanarRiemann>) {
          if (v.coeffs.size() < 2 || std::abs(v.coeffs[1]) == 0.0)
            throw Error(ErrorCode::invalid_argument, "planar Riemann map: need a_1 != 0");
          // Noshiro-Warschawski: Re(f'/a_1) > 0 on the disk implies univalence.
          double tail = 0.0;
          for (std::size_t k = 2; k < v.coeffs.size(); ++k) tail += static_cast<double>(k) * std::abs(v.coeffs[k]);
          if (tail > std::abs(v.coeffs[1]) * (1.0 + 1e-14))
            throw Error(ErrorCode::invalid_argument,
                        "planar Riemann map: univalence certificate sum k|a_k| <= |a_1| fails");
        } else if constexpr (std::is_same_v<V, ConvexBody>) {
          if (v.dim < 1 || !v.boundary_param)
            throw Error(ErrorCode::invalid_argument, "convex body: missing boundary oracle");
        } else if constexpr (std::is_same_v<V, Product>) {
          if (v.left.dim() < 1 || v.right.dim() < 1)
            throw Error(ErrorCode::invalid_argument, "product: empty factor");
        } else {
          if (v.base.dim() < 1 || v.map.dim != v.base.dim() || !v.map.forward)
            throw Error(ErrorCode::invalid_argument, "image: map/base dimension mismatch");
        }
      },
      n);
}

}  // namespace detail

inline const DomainNode& Domain::node() const { return *node_; }

inline Domain::Domain(std::shared_ptr<const DomainNode> node) : node_(std::move(node)) {
  detail::validate(*node_);
  dim_ = detail::node_dim(*node_);
}

inline Domain make_domain(DomainNode node) { return Domain(std::make_shared<const DomainNode>(std::move(node))); }

inline std::string Domain::variant_name() const {
  static const char* names[] = {"ball", "polydisk", "ellipsoid", "planar_riemann",
                                "convex_body", "product", "image"};
  return names[node_->index()];
}

// Factories
inline Domain make_ball(int dim, double radius = 1.0, std::optional<CVec> center = std::nullopt) {
  return make_domain(Ball{dim, radius, center ? *center : CVec(CVec::Zero(dim))});
}
inline Domain make_disk(double radius = 1.0) { return make_ball(1, radius); }
inline Domain make_polydisk(std::vector<double> radii) { return make_domain(Polydisk{std::move(radii)}); }
inline Domain make_ellipsoid(std::vector<double> weights) { return make_domain(Ellipsoid{std::move(weights)}); }
inline Domain make_planar(std::vector<cplx> coeffs) { return make_domain(PlanarRiemann{std::move(coeffs)}); }
inline Domain make_product(Domain a, Domain b) { return make_domain(Product{std::move(a), std::move(b)}); }
inline Domain make_image(Domain base, HoloMap map) { return make_domain(Image{std::move(base), std::move(map)}); }

// {z : sum_j |z_j / a_j|^p < 1}, convex for p >= 1.
inline Domain make_complex_lp_body(double p, std::vector<double> scales) {
  if (!(p >= 1.0)) throw Error(ErrorCode::invalid_argument, "complex lp body needs p >= 1");
  ConvexBody b;
  b.dim = static_cast<int>(scales.size());
  b.kind = "complex_lp";
  b.params = {p};
  b.params.insert(b.params.end(), scales.begin(), scales.end());
  b.boundary_param = [p, scales](const CVec& u) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < u.size(); ++j) s += std::pow(std::abs(u[j]) / scales[j], p);
    return s > 0 ? std::pow(s, -1.0 / p) : kInf;
  };
  return make_domain(std::move(b));
}

// The image of the bidisk under F(z1, z2) = (psi(z2) z1, z2).
inline Domain make_omega_psi() { return make_image(make_polydisk({1.0, 1.0}), omega_psi_map()); }

// ---------------------------------------------------------------------------
// Planar polynomial maps

namespace detail {

template <class T>
T poly_eval(const std::vector<cplx>& a, const T& z) {
  T acc(a.back());
  for (std::size_t k = a.size() - 1; k-- > 0;) acc = acc * z + a[k];
  return acc;
}

inline std::vector<cplx> poly_derivative(const std::vector<cplx>& a) {
  std::vector<cplx> d;
  for (std::size_t k = 1; k < a.size(); ++k) d.push_back(static_cast<double>(k) * a[k]);
  if (d.empty()) d.push_back(0.0);
  return d;
}

// Preimage of x under the univalent polynomial f, if it lies in the open unit disk.
inline std::optional<cplx> planar_preimage(const PlanarRiemann& pr, cplx x) {
  std::vector<cplx> a = pr.coeffs;
  while (a.size() > 2 && std::abs(a.back()) == 0.0) a.pop_back();
  const std::vector<cplx> da = poly_derivative(a);
  std::vector<cplx> roots;
  const std::size_t n = a.size() - 1;
  if (n == 1) {
    roots.push_back((x - a[0]) / a[1]);
  } else {
    CMat comp = CMat::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 1; i < n; ++i) comp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const cplx ci = (i == 0 ? a[0] - x : a[i]);
      comp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(n - 1)) = -ci / a[n];
    }
    Eigen::ComplexEigenSolver<CMat> es(comp, false);
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) roots.push_back(es.eigenvalues()[i]);
  }
  std::optional<cplx> best;
  for (cplx r : roots) {
    for (int it = 0; it < 3; ++it) {
      const cplx dr = poly_eval(da, r);
      if (std::abs(dr) == 0.0) break;
      r -= (poly_eval(a, r) - x) / dr;
    }
    if (std::abs(r) < 1.0 && (!best || std::abs(r) < std::abs(*best))) best = r;
  }
  return best;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Membership and geometry

bool contains(const Domain& spec, const CVec& z);

namespace detail {

inline bool contains_node(const DomainNode& n, const CVec& z) {
  return std::visit(
      [&](const auto& v) -> bool {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, Ball>) {
          return (z - v.center).squaredNorm() < v.radius * v.radius;
        } else if constexpr (std::is_same_v<V, Polydisk>) {
          for (std::size_t j = 0; j < v.radii.size(); ++j)
            if (!(std::abs(z[static_cast<Eigen::Index>(j)]) < v.radii[j])) return false;
          return true;
        } else if constexpr (std::is_same_v<V, Ellipsoid>) {
          double s = 0.0;
          for (std::size_t j = 0; j < v.weights.size(); ++j) s += v.weights[j] * std::norm(z[static_cast<Eigen::Index>(j)]);
          return s < 1.0;
        } else if constexpr (std::is_same_v<V, PlanarRiemann>) {
          return planar_preimage(v, z[0]).has_value();
        } else if constexpr (std::is_same_v<V, ConvexBody>) {
          const double r = z.norm();
          if (r == 0.0) return true;
          return r < v.boundary_param(CVec(z / r));
        } else if constexpr (std::is_same_v<V, Product>) {
          const int dl = v.left.dim();
          return contains(v.left, z.head(dl)) && contains(v.right, z.tail(v.right.dim()));
        } else {
          if (!v.map.has_inverse())
            throw Error(ErrorCode::unsupported_operation, "image domain without inverse map");
          const CVec y = v.map.inverse(z);
          if (!all_finite(y)) return false;
          return contains(v.base, y);
        }
      },
      n);
}

}  // namespace detail

// true iff z lies in the open domain.
inline bool contains(const Domain& spec, const CVec& z) {
  if (z.size() != spec.dim()) throw Error(ErrorCode::invalid_argument, "contains: dimension mismatch");
  if (!all_finite(z)) throw Error(ErrorCode::invalid_argument, "contains: non-finite point");
  return detail::contains_node(spec.node(), z);
}

struct Box {
  RVec lo, hi;  // real coordinates (x_1, y_1, ..., x_d, y_d)
  double volume() const { return (hi - lo).prod(); }
  double diameter() const { return (hi - lo).norm(); }
};

Box bounding_box(const Domain& spec);
CVec interior_point(const Domain& spec);
double exit_time(const Domain& spec, const CVec& z, const CVec& u);

// A point known to lie in the domain (the centre for model domains).
inline CVec interior_point(const Domain& spec) {
  return std::visit(
      [&](const auto& v) -> CVec {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, Ball>) return v.center;
        else if constexpr (std::is_same_v<V, PlanarRiemann>) return make_point({v.coeffs[0]});
        else if constexpr (std::is_same_v<V, Product>) {
          CVec z(spec.dim());
          z << interior_point(v.left), interior_point(v.right);
          return z;
        } else if constexpr (std::is_same_v<V, Image>) return v.map.forward(interior_point(v.base));
        else return CVec::Zero(spec.dim());
      },
      spec.node());
}

namespace detail {

inline Box box_from_points(const std::vector<CVec>& pts, double inflate) {
  const auto n = 2 * pts.front().size();
  Box b{RVec::Constant(n, kInf), RVec::Constant(n, -kInf)};
  for (const auto& p : pts) {
    const RVec r = to_real(p);
    b.lo = b.lo.cwiseMin(r);
    b.hi = b.hi.cwiseMax(r);
  }
  const RVec mid = 0.5 * (b.lo + b.hi);
  const RVec half = 0.5 * (b.hi - b.lo) * (1.0 + inflate);
  b.lo = mid - half;
  b.hi = mid + half;
  return b;
}

// Boundary points of a bounded domain along deterministic directions from an interior point.
inline std::vector<CVec> boundary_sample(const Domain& spec, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  const CVec c = interior_point(spec);
  std::vector<CVec> out;
  const int d = spec.dim();
  auto push = [&](const CVec& u) {
    const double t = exit_time(spec, c, u);
    if (std::isfinite(t)) out.push_back(c + t * u);
  };
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < 8; ++k) {
      CVec u = CVec::Zero(d);
      u[j] = std::polar(1.0, 2.0 * kPi * k / 8.0);
      push(u);
    }
  for (int i = 0; i < count; ++i) {
    CVec u(d);
    for (int j = 0; j < d; ++j) u[j] = cplx(nd(rng), nd(rng));
    push(u / u.norm());
  }
  return out;
}

}  // namespace detail

// Axis-aligned box (in real coordinates) containing the domain.
inline Box bounding_box(const Domain& spec) {
  return std::visit(
      [&](const auto& v) -> Box {
        using V = std::decay_t<decltype(v)>;
        const int d = spec.dim();
        Box b{RVec(2 * d), RVec(2 * d)};
        if constexpr (std::is_same_v<V, Ball>) {
          for (int j = 0; j < d; ++j) {
            b.lo[2 * j] = v.center[j].real() - v.radius;
            b.hi[2 * j] = v.center[j].real() + v.radius;
            b.lo[2 * j + 1] = v.center[j].imag() - v.radius;
            b.hi[2 * j + 1] = v.center[j].imag() + v.radius;
          }
        } else if constexpr (std::is_same_v<V, Polydisk> || std::is_same_v<V, Ellipsoid>) {
          for (int j = 0; j < d; ++j) {
            double r;
            if constexpr (std::is_same_v<V, Polydisk>) r = v.radii[j];
            else r = 1.0 / std::sqrt(v.weights[j]);
            b.lo[2 * j] = b.lo[2 * j + 1] = -r;
            b.hi[2 * j] = b.hi[2 * j + 1] = r;
          }
        } else if constexpr (std::is_same_v<V, PlanarRiemann>) {
          double r = 0.0;
          for (std::size_t k = 1; k < v.coeffs.size(); ++k) r += std::abs(v.coeffs[k]);
          b.lo << v.coeffs[0].real() - r, v.coeffs[0].imag() - r;
          b.hi << v.coeffs[0].real() + r, v.coeffs[0].imag() + r;
        } else if constexpr (std::is_same_v<V, ConvexBody>) {
          // Radial function sampled on many directions, inflated by 10%.
          std::mt19937_64 rng(0x5eedULL);
          std::normal_distribution<double> nd;
          std::vector<CVec> pts;
          for (int i = 0; i < 4096 + 8 * d; ++i) {
            CVec u = CVec::Zero(d);
            if (i < 8 * d) {
              u[i / 8] = std::polar(1.0, 2.0 * kPi * (i % 8) / 8.0);
            } else {
              for (int j = 0; j < d; ++j) u[j] = cplx(nd(rng), nd(rng));
              u /= u.norm();
            }
            pts.push_back(v.boundary_param(u) * u);
          }
          return detail::box_from_points(pts, 0.1);
        } else if constexpr (std::is_same_v<V, Product>) {
          const Box l = bounding_box(v.left), r = bounding_box(v.right);
          b.lo << l.lo, r.lo;
          b.hi << l.hi, r.hi;
        } else {
          std::vector<CVec> pts = detail::boundary_sample(v.base, 4096, 0x5eedULL);
          for (auto& p : pts) p = v.map.forward(p);
          return detail::box_from_points(pts, 0.1);
        }
        return b;
      },
      spec.node());
}

namespace detail {

// Smallest t > 0 with |a + t u| = r, for |a| < r.
inline double circle_exit(cplx a, cplx u, double r) {
  const double uu = std::norm(u);
  if (uu == 0.0) return kInf;
  const double b = (std::conj(a) * u).real();
  const double c = std::norm(a) - r * r;
  const double disc = std::max(0.0, b * b - uu * c);
  return (-b + std::sqrt(disc)) / uu;
}

inline double bisect_exit(const Domain& spec, const CVec& z, const CVec& u) {
  const double un = u.norm();
  const Box box = bounding_box(spec);
  const double scale = box.diameter();
  const double h = scale / 256.0 / un;
  const double tmax = 4.0 * (scale + (to_real(z) - 0.5 * (box.lo + box.hi)).norm()) / un;
  double lo = 0.0, hi = h;
  while (contains(spec, CVec(z + hi * u))) {
    lo = hi;
    hi += h;
    if (hi > tmax) return kInf;
  }
  const double tol = 1e-10 / un;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (contains(spec, CVec(z + mid * u))) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

// First parameter t > 0 with z + t u outside the domain (u a nonzero vector,
// not necessarily unit). Returns +inf when the ray never leaves.
inline double exit_time(const Domain& spec, const CVec& z, const CVec& u) {
  return std::visit(
      [&](const auto& v) -> double {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, Ball>) {
          const CVec y = z - v.center;
          const double uu = u.squaredNorm();
          const double b = (y.adjoint() * u)(0).real();
          const double c = y.squaredNorm() - v.radius * v.radius;
          return (-b + std::sqrt(std::max(0.0, b * b - uu * c))) / uu;
        } else if constexpr (std::is_same_v<V, Polydisk>) {
          double t = kInf;
          for (std::size_t j = 0; j < v.radii.size(); ++j) {
            const auto i = static_cast<Eigen::Index>(j);
            t = std::min(t, detail::circle_exit(z[i], u[i], v.radii[j]));
          }
          return t;
        } else if constexpr (std::is_same_v<V, Ellipsoid>) {
          double a = 0, b = 0, c = -1.0;
          for (std::size_t j = 0; j < v.weights.size(); ++j) {
            const auto i = static_cast<Eigen::Index>(j);
            a += v.weights[j] * std::norm(u[i]);
            b += v.weights[j] * (std::conj(z[i]) * u[i]).real();
            c += v.weights[j] * std::norm(z[i]);
          }
          return (-b + std::sqrt(std::max(0.0, b * b - a * c))) / a;
        } else if constexpr (std::is_same_v<V, Product>) {
          const int dl = v.left.dim(), dr = v.right.dim();
          double t = kInf;
          if (u.head(dl).norm() > 0) t = std::min(t, exit_time(v.left, z.head(dl), u.head(dl)));
          if (u.tail(dr).norm() > 0) t = std::min(t, exit_time(v.right, z.tail(dr), u.tail(dr)));
          return t;
        } else if constexpr (std::is_same_v<V, Image>) {
          // Affine images map lines to lines with the same parameter.
          if (v.map.affine && v.map.has_inverse()) {
            const CVec x = v.map.inverse(z);
            return exit_time(v.base, x, CVec(v.map.inverse(CVec(z + u)) - x));
          }
          return detail::bisect_exit(spec, z, u);
        } else {
          return detail::bisect_exit(spec, z, u);
        }
      },
      spec.node());
}

namespace detail {

// Unit representative of the complex line C v, independent of the phase and
// length of v: the largest component is made real positive and components are
// rounded to a 2^-40 grid before renormalising.
inline CVec canonical_direction(const CVec& v) {
  CVec u = v / v.norm();
  Eigen::Index k = 0;
  for (Eigen::Index i = 1; i < u.size(); ++i)
    if (std::abs(u[i]) > std::abs(u[k]) * (1.0 + 1e-9)) k = i;
  u *= std::conj(u[k]) / std::abs(u[k]);
  const double q = std::ldexp(1.0, 40);
  for (Eigen::Index i = 0; i < u.size(); ++i)
    u[i] = cplx(std::round(u[i].real() * q) / q, std::round(u[i].imag() * q) / q);
  return u / u.norm();
}

}  // namespace detail

// delta(z; v): Euclidean distance from z to the boundary inside the complex
// line z + C v. Minimum over 64 phases of the exit time, refined by
// golden-section search around the best phase.
inline double line_boundary_distance(const Domain& spec, const CVec& z, const CVec& v) {
  if (!(v.norm() > 0)) throw Error(ErrorCode::invalid_argument, "line_boundary_distance: zero direction");
  if (!contains(spec, z)) throw Error(ErrorCode::invalid_argument, "line_boundary_distance: point outside domain");
  const CVec u = detail::canonical_direction(v);
  auto t_at = [&](double theta) { return exit_time(spec, z, CVec(std::polar(1.0, theta) * u)); };
  constexpr int kPhases = 64;
  const double step = 2.0 * kPi / kPhases;
  double best = kInf;
  int kbest = -1;
  for (int k = 0; k < kPhases; ++k) {
    const double t = t_at(k * step);
    if (t < best) { best = t; kbest = k; }
  }
  if (kbest < 0) return kInf;
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = (kbest - 1) * step, b = (kbest + 1) * step;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = t_at(c), fd = t_at(d);
  while (b - a > 1e-9) {
    if (fc < fd) { b = d; d = c; fd = fc; c = b - gr * (b - a); fc = t_at(c); }
    else { a = c; c = d; fc = fd; d = a + gr * (b - a); fd = t_at(d); }
  }
  return std::min({best, fc, fd});
}

// Euclidean distance to the boundary. Exact for balls, polydisks, planar
// domains and their products; otherwise the minimum of delta over the
// coordinate lines and 16 fixed directions (an upper estimate).
inline double boundary_distance(const Domain& spec, const CVec& z) {
  return std::visit(
      [&](const auto& v) -> double {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, Ball>) {
          return v.radius - (z - v.center).norm();
        } else if constexpr (std::is_same_v<V, Polydisk>) {
          double t = kInf;
          for (std::size_t j = 0; j < v.radii.size(); ++j) t = std::min(t, v.radii[j] - std::abs(z[static_cast<Eigen::Index>(j)]));
          return t;
        } else if constexpr (std::is_same_v<V, Product>) {
          const int dl = v.left.dim(), dr = v.right.dim();
          return std::min(boundary_distance(v.left, z.head(dl)), boundary_distance(v.right, z.tail(dr)));
        } else {
          const int d = spec.dim();
          if (d == 1) return line_boundary_distance(spec, z, make_point({1.0}));
          double t = kInf;
          for (int j = 0; j < d; ++j) {
            CVec e = CVec::Zero(d);
            e[j] = 1.0;
            t = std::min(t, line_boundary_distance(spec, z, e));
          }
          std::mt19937_64 rng(0xd15ULL);
          std::normal_distribution<double> nd;
          for (int k = 0; k < 16; ++k) {
            CVec e(d);
            for (int j = 0; j < d; ++j) e[j] = cplx(nd(rng), nd(rng));
            t = std::min(t, line_boundary_distance(spec, z, e));
          }
          return t;
        }
      },
      spec.node());
}

inline bool is_bounded(const Domain&) { return true; }

// Convex specs: balls, ellipsoids, polydisks, convex bodies, products of
// these, affine images, and planar domains with an affine Riemann map.
inline bool is_convex(const Domain& spec) {
  return std::visit(
      [&](const auto& v) -> bool {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, PlanarRiemann>) {
          for (std::size_t k = 2; k < v.coeffs.size(); ++k)
            if (std::abs(v.coeffs[k]) != 0.0) return false;
          return true;
        } else if constexpr (std::is_same_v<V, Product>) {
          return is_convex(v.left) && is_convex(v.right);
        } else if constexpr (std::is_same_v<V, Image>) {
          return v.map.affine && is_convex(v.base);
        } else {
          return true;
        }
      },
      spec.node());
}

// n interior points drawn by rejection from the bounding box.
inline std::vector<CVec> sample_interior(const Domain& spec, std::size_t n, std::uint64_t seed) {
  std::vector<CVec> out;
  if (n == 0) return out;
  const Box box = bounding_box(spec);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::size_t trials = 0;
  out.reserve(n);
  RVec r(box.lo.size());
  while (out.size() < n) {
    for (Eigen::Index i = 0; i < r.size(); ++i) r[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * unif(rng);
    ++trials;
    const CVec z = from_real(r);
    if (contains(spec, z)) out.push_back(z);
    if (trials >= 1000000 && static_cast<double>(out.size()) < 1e-6 * static_cast<double>(trials))
      throw Error(ErrorCode::sampling_failure,
                  "acceptance rate below 1e-6 after " + std::to_string(trials) + " trials (" +
                      std::to_string(out.size()) + " accepted, box volume " + std::to_string(box.volume()) + ")");
  }
  return out;
}

// Monte Carlo volume: box volume times the acceptance fraction.
inline double estimate_volume(const Domain& spec, std::size_t accepted, std::uint64_t seed) {
  const Box box = bounding_box(spec);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::size_t trials = 0, hits = 0;
  RVec r(box.lo.size());
  while (hits < accepted) {
    for (Eigen::Index i = 0; i < r.size(); ++i) r[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * unif(rng);
    ++trials;
    if (contains(spec, from_real(r))) ++hits;
    if (trials >= 1000000 && hits == 0) throw Error(ErrorCode::sampling_failure, "estimate_volume: no hits");
  }
  return box.volume() * static_cast<double>(hits) / static_cast<double>(trials);
}

// Numerical Jacobian check: max relative deviation of the Jacobian from
// central differences of the forward map at z.
inline double jacobian_fd_error(const HoloMap& map, const CVec& z, double h = 1e-6) {
  const CMat jac = map.jacobian(z);
  const auto d = z.size();
  CMat fd(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    CVec e = CVec::Zero(d);
    e[j] = h;
    fd.col(j) = (map.forward(z + e) - map.forward(z - e)) / (2.0 * h);
  }
  return (jac - fd).norm() / std::max(1e-300, jac.norm());
}

}  // namespace invmetric
