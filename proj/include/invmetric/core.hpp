#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace invmetric {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class ErrorCode {
  unsupported_operation,
  sampling_failure,
  ill_conditioned_basis,
  degenerate_map,
  numerical_degeneracy,
  infeasible,
  invalid_path,
  path_initialization,
  empty_sample,
  construction_failure,
  invalid_radius,
  chart_failure,
  boundary_proximity,
  invalid_grid,
  invalid_argument,
  config,
  io,
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::unsupported_operation: return "unsupported-operation";
    case ErrorCode::sampling_failure: return "sampling-failure";
    case ErrorCode::ill_conditioned_basis: return "ill-conditioned-basis";
    case ErrorCode::degenerate_map: return "degenerate-map";
    case ErrorCode::numerical_degeneracy: return "numerical-degeneracy";
    case ErrorCode::infeasible: return "infeasible";
    case ErrorCode::invalid_path: return "invalid-path";
    case ErrorCode::path_initialization: return "path-initialization";
    case ErrorCode::empty_sample: return "empty-sample";
    case ErrorCode::construction_failure: return "construction-failure";
    case ErrorCode::invalid_radius: return "invalid-radius";
    case ErrorCode::chart_failure: return "chart-failure";
    case ErrorCode::boundary_proximity: return "boundary-proximity";
    case ErrorCode::invalid_grid: return "invalid-grid";
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::config: return "config";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline bool all_finite(const CVec& z) {
  for (Eigen::Index i = 0; i < z.size(); ++i)
    if (!std::isfinite(z[i].real()) || !std::isfinite(z[i].imag())) return false;
  return true;
}

inline CVec make_point(std::initializer_list<cplx> xs) {
  CVec z(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (auto x : xs) z[i++] = x;
  return z;
}

// Real coordinates (x_1, y_1, ..., x_d, y_d) of a point of C^d.
inline RVec to_real(const CVec& z) {
  RVec r(2 * z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    r[2 * i] = z[i].real();
    r[2 * i + 1] = z[i].imag();
  }
  return r;
}

inline CVec from_real(const RVec& r) {
  CVec z(r.size() / 2);
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = cplx(r[2 * i], r[2 * i + 1]);
  return z;
}

// Multi-indices alpha in N^dim with |alpha| <= degree, by increasing total
// degree and lexicographically descending within a degree.
inline std::vector<std::vector<int>> total_degree_indices(int dim, int degree) {
  std::vector<std::vector<int>> out;
  std::vector<int> a(static_cast<std::size_t>(dim), 0);
  for (int total = 0; total <= degree; ++total) {
    // All alpha with |alpha| = total, in lexicographic order.
    std::function<void(int, int)> rec = [&](int j, int rem) {
      if (j == dim - 1) {
        a[j] = rem;
        out.push_back(a);
        return;
      }
      for (int e = rem; e >= 0; --e) {
        a[j] = e;
        rec(j + 1, rem - e);
      }
    };
    rec(0, total);
  }
  return out;
}

// Worker count for sweeps: INVMETRIC_THREADS if set, else the hardware count.
inline int thread_count() {
  if (const char* env = std::getenv("INVMETRIC_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs f(i) for i in [0, n) on thread_count() workers. Each index writes its
// own slot, so results do not depend on scheduling. The first exception (by
// index) is rethrown.
template <class F>
void parallel_for(std::size_t n, F&& f) {
  const auto workers = static_cast<std::size_t>(std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) {
        try {
          f(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace invmetric
