#pragma once

// Quadrature rules for Gram assembly: Halton points with a random shift,
// Gauss-Legendre, and exact polar rules on disks.

#include "invmetric/domain.hpp"

#include <Eigen/Eigenvalues>

#include <cstdint>
#include <random>

namespace invmetric {

struct QuadRule {
  std::vector<CVec> nodes;
  std::vector<double> weights;
};

// Gauss-Legendre nodes and weights on [-1, 1] (Golub-Welsch).
inline std::pair<RVec, RVec> gauss_legendre(int n) {
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    jac(k, k - 1) = jac(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  RVec x = es.eigenvalues();
  RVec w = 2.0 * es.eigenvectors().row(0).transpose().array().square();
  return {x, w};
}

inline double radical_inverse(std::uint64_t i, int base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}

// Halton sequence with a Cranley-Patterson rotation drawn from the seed.
class Halton {
 public:
  Halton(int dim, std::uint64_t seed) : dim_(dim), shift_(dim) {
    static const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
    if (dim > 16) throw Error(ErrorCode::invalid_argument, "Halton: dimension above 16");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int j = 0; j < dim; ++j) {
      bases_.push_back(primes[j]);
      shift_[j] = u(rng);
    }
  }

  RVec next() {
    RVec r(dim_);
    ++index_;
    for (int j = 0; j < dim_; ++j) {
      const double x = radical_inverse(index_, bases_[j]) + shift_[j];
      r[j] = x - std::floor(x);
    }
    return r;
  }

 private:
  int dim_;
  std::vector<int> bases_;
  RVec shift_;
  std::uint64_t index_ = 0;
};

// Accepted Halton nodes inside the domain, equal weights box_volume / trials.
inline QuadRule qmc_rule(const Domain& spec, std::size_t nodes, std::uint64_t seed) {
  const Box box = bounding_box(spec);
  Halton h(2 * spec.dim(), seed);
  QuadRule q;
  q.nodes.reserve(nodes);
  std::size_t trials = 0;
  while (q.nodes.size() < nodes) {
    const RVec u = h.next();
    ++trials;
    const CVec z = from_real(box.lo + (box.hi - box.lo).cwiseProduct(u));
    if (contains(spec, z)) q.nodes.push_back(z);
    if (trials >= 1000000 && static_cast<double>(q.nodes.size()) < 1e-6 * static_cast<double>(trials))
      throw Error(ErrorCode::sampling_failure, "qmc_rule: acceptance rate below 1e-6");
  }
  q.weights.assign(q.nodes.size(), box.volume() / static_cast<double>(trials));
  return q;
}

// Polar product rule on the disk |z - c| < r: exact for z^j conj(z)^k with
// j, k <= degree.
inline QuadRule polar_disk_rule(int degree, double r = 1.0, cplx c = 0.0) {
  const int nr = degree + 2;
  const int na = 2 * degree + 2;
  const auto [x, w] = gauss_legendre(nr);
  QuadRule q;
  for (int i = 0; i < nr; ++i) {
    const double rho = 0.5 * r * (x[i] + 1.0);
    const double wr = 0.5 * r * w[i] * rho;
    for (int k = 0; k < na; ++k) {
      q.nodes.push_back(make_point({c + std::polar(rho, 2.0 * kPi * (k + 0.5) / na)}));
      q.weights.push_back(wr * 2.0 * kPi / na);
    }
  }
  return q;
}

// Push the polar rule through the polynomial Riemann map f with Jacobian |f'|^2.
inline QuadRule planar_rule(const PlanarRiemann& pr, int degree) {
  const int p = static_cast<int>(pr.coeffs.size()) - 1;
  QuadRule base = polar_disk_rule(p * degree + p);
  const std::vector<cplx> da = detail::poly_derivative(pr.coeffs);
  for (std::size_t i = 0; i < base.nodes.size(); ++i) {
    const cplx zeta = base.nodes[i][0];
    base.weights[i] *= std::norm(detail::poly_eval(da, zeta));
    base.nodes[i][0] = detail::poly_eval(pr.coeffs, zeta);
  }
  return base;
}

}  // namespace invmetric
