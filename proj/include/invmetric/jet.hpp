#pragma once

// Truncated bivariate Taylor series used for exact kernel derivatives.
//
// A Jet stores c[m][n], m,n <= 2, of a function holomorphic in two complex
// variables (a, b):  f(a, b) = sum c[m][n] a^m b^n + O(a^3, b^3).
// Closed-form kernels are written once as templates and evaluated on Jets to
// obtain every mixed derivative of order <= (2, 2) without finite differences.

#include "invmetric/core.hpp"

#include <array>

namespace invmetric {

class Jet {
 public:
  static constexpr int kOrder = 2;
  static constexpr int kSize = kOrder + 1;

  Jet() { c_.fill(cplx(0.0)); }
  Jet(cplx v) { c_.fill(cplx(0.0)); c_[0] = v; }  // NOLINT implicit lift
  Jet(double v) : Jet(cplx(v)) {}                 // NOLINT implicit lift

  static Jet var_a(cplx base = 0.0) { Jet j(base); j(1, 0) = 1.0; return j; }
  static Jet var_b(cplx base = 0.0) { Jet j(base); j(0, 1) = 1.0; return j; }

  cplx& operator()(int m, int n) { return c_[m * kSize + n]; }
  const cplx& operator()(int m, int n) const { return c_[m * kSize + n]; }
  cplx value() const { return c_[0]; }

  Jet& operator+=(const Jet& o) { for (int i = 0; i < kSize * kSize; ++i) c_[i] += o.c_[i]; return *this; }
  Jet& operator-=(const Jet& o) { for (int i = 0; i < kSize * kSize; ++i) c_[i] -= o.c_[i]; return *this; }
  Jet& operator*=(cplx s) { for (auto& x : c_) x *= s; return *this; }
  Jet& operator*=(const Jet& o) { *this = *this * o; return *this; }
  Jet& operator/=(const Jet& o) { *this = *this / o; return *this; }

  friend Jet operator+(Jet x, const Jet& y) { return x += y; }
  friend Jet operator-(Jet x, const Jet& y) { return x -= y; }
  friend Jet operator-(Jet x) { for (auto& v : x.c_) v = -v; return x; }
  friend Jet operator*(Jet x, cplx s) { return x *= s; }
  friend Jet operator*(cplx s, Jet x) { return x *= s; }
  friend Jet operator*(Jet x, double s) { return x *= cplx(s); }
  friend Jet operator*(double s, Jet x) { return x *= cplx(s); }
  friend Jet operator+(Jet x, cplx s) { x.c_[0] += s; return x; }
  friend Jet operator+(cplx s, Jet x) { x.c_[0] += s; return x; }
  friend Jet operator-(Jet x, cplx s) { x.c_[0] -= s; return x; }
  friend Jet operator-(cplx s, Jet x) { return Jet(s) - x; }
  friend Jet operator+(Jet x, double s) { return x + cplx(s); }
  friend Jet operator+(double s, Jet x) { return x + cplx(s); }
  friend Jet operator-(Jet x, double s) { return x - cplx(s); }
  friend Jet operator-(double s, Jet x) { return Jet(s) - x; }

  friend Jet operator*(const Jet& x, const Jet& y) {
    Jet r;
    for (int m1 = 0; m1 < kSize; ++m1)
      for (int n1 = 0; n1 < kSize; ++n1) {
        const cplx xv = x(m1, n1);
        if (xv == cplx(0.0)) continue;
        for (int m2 = 0; m1 + m2 < kSize; ++m2)
          for (int n2 = 0; n1 + n2 < kSize; ++n2) r(m1 + m2, n1 + n2) += xv * y(m2, n2);
      }
    return r;
  }

  friend Jet operator/(const Jet& x, const Jet& y) { return x * recip(y); }
  friend Jet operator/(const Jet& x, cplx s) { return x * (1.0 / s); }
  friend Jet operator/(const Jet& x, double s) { return x * (1.0 / s); }
  friend Jet operator/(cplx s, const Jet& y) { return recip(y) * s; }
  friend Jet operator/(double s, const Jet& y) { return recip(y) * s; }

  // f(x) for analytic f given f(c), f'(c), ..., f''''(c) at c = x.value().
  // The nilpotent part h satisfies h^5 = 0, so the Taylor sum is exact.
  static Jet compose(const Jet& x, const std::array<cplx, 5>& derivs) {
    Jet h = x;
    h(0, 0) = 0.0;
    Jet result(derivs[0]);
    Jet power(1.0);
    double fact = 1.0;
    for (int k = 1; k < 5; ++k) {
      power = power * h;
      fact *= k;
      result += power * (derivs[k] / fact);
    }
    return result;
  }

  friend Jet recip(const Jet& x) {
    const cplx c = x.value();
    const cplx i1 = 1.0 / c;
    return compose(x, {i1, -i1 * i1, 2.0 * i1 * i1 * i1, -6.0 * i1 * i1 * i1 * i1,
                       24.0 * i1 * i1 * i1 * i1 * i1});
  }

  friend Jet exp(const Jet& x) {
    const cplx e = std::exp(x.value());
    return compose(x, {e, e, e, e, e});
  }

  friend Jet log(const Jet& x) {
    const cplx c = x.value();
    const cplx i1 = 1.0 / c;
    return compose(x, {std::log(c), i1, -i1 * i1, 2.0 * i1 * i1 * i1, -6.0 * i1 * i1 * i1 * i1});
  }

  friend Jet pow(const Jet& x, double p) {
    const cplx c = x.value();
    std::array<cplx, 5> d;
    cplx coef = 1.0;
    for (int k = 0; k < 5; ++k) {
      d[k] = coef * std::pow(c, p - k);
      coef *= (p - k);
    }
    return compose(x, d);
  }

  // Coefficient-wise conjugate: if x(b) is the jet of f then conj_coeffs(x)
  // is the jet of b -> conj(f(conj b)).
  friend Jet conj_coeffs(Jet x) {
    for (auto& v : x.c_) v = std::conj(v);
    return x;
  }

  // Swap the roles of a and b.
  friend Jet transpose(const Jet& x) {
    Jet r;
    for (int m = 0; m < kSize; ++m)
      for (int n = 0; n < kSize; ++n) r(n, m) = x(m, n);
    return r;
  }

 private:
  std::array<cplx, kSize * kSize> c_;
};

// Scalar helpers shared by templated closed forms.
inline cplx conj_coeffs(cplx x) { return std::conj(x); }

template <class T>
using PointT = std::vector<T>;

inline PointT<cplx> to_std(const CVec& z) { return PointT<cplx>(z.data(), z.data() + z.size()); }

inline CVec from_std(const PointT<cplx>& z) {
  CVec r(static_cast<Eigen::Index>(z.size()));
  for (std::size_t i = 0; i < z.size(); ++i) r[static_cast<Eigen::Index>(i)] = z[i];
  return r;
}

// Jet point x + a u (holomorphic slot) for base point x and direction u.
inline PointT<Jet> line_a(const CVec& x, const CVec& u) {
  PointT<Jet> p(static_cast<std::size_t>(x.size()));
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    p[i] = Jet(x[i]);
    p[i](1, 0) = u[i];
  }
  return p;
}

// Jet point conj(x) + b conj(u): the antiholomorphic slot written holomorphically.
inline PointT<Jet> line_b(const CVec& x, const CVec& u) {
  PointT<Jet> p(static_cast<std::size_t>(x.size()));
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    p[i] = Jet(std::conj(x[i]));
    p[i](0, 1) = std::conj(u[i]);
  }
  return p;
}

template <class T>
PointT<T> conj_coeffs(const PointT<T>& p) {
  PointT<T> r(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) r[i] = conj_coeffs(p[i]);
  return r;
}

inline cplx value_of(cplx x) { return x; }
inline cplx value_of(const Jet& x) { return x.value(); }

// Determinant of a small square matrix over T; Gaussian elimination with
// partial pivoting on the constant terms.
template <class T>
T small_det(std::vector<std::vector<T>> a) {
  const std::size_t n = a.size();
  T det(1.0);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    double best = std::abs(value_of(a[k][k]));
    for (std::size_t r = k + 1; r < n; ++r)
      if (std::abs(value_of(a[r][k])) > best) { best = std::abs(value_of(a[r][k])); piv = r; }
    if (best == 0.0) return T(0.0);
    if (piv != k) { std::swap(a[piv], a[k]); det = -det; }
    det = det * a[k][k];
    for (std::size_t r = k + 1; r < n; ++r) {
      T f = a[r][k] / a[k][k];
      for (std::size_t c = k; c < n; ++c) a[r][c] = a[r][c] - f * a[k][c];
    }
  }
  return det;
}

}  // namespace invmetric
