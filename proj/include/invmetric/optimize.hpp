#pragma once

// Derivative-free minimization (Nelder-Mead, adaptive coefficients).

#include "invmetric/core.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

namespace invmetric {

struct NelderMeadResult {
  RVec x;
  double value = kInf;
  int evaluations = 0;
};

// Minimizes f starting from the simplex x0 + step * e_i. Coefficients follow
// Gao and Han's dimension-adapted choice, which behaves better above ~10
// variables than the classical (1, 2, 1/2, 1/2).
inline NelderMeadResult nelder_mead(const std::function<double(const RVec&)>& f, const RVec& x0, double step,
                                    int max_evals, double ftol = 1e-10) {
  const auto n = x0.size();
  const double nd = static_cast<double>(std::max<Eigen::Index>(n, 1));
  const double alpha = 1.0, gamma = 1.0 + 2.0 / nd, rho = 0.75 - 1.0 / (2.0 * nd), sigma = 1.0 - 1.0 / nd;
  std::vector<RVec> pts(static_cast<std::size_t>(n + 1), x0);
  std::vector<double> vals(static_cast<std::size_t>(n + 1));
  int evals = 0;
  auto eval = [&](const RVec& x) {
    ++evals;
    const double v = f(x);
    return std::isfinite(v) ? v : kInf;
  };
  for (Eigen::Index i = 0; i < n; ++i) pts[static_cast<std::size_t>(i + 1)][i] += step;
  for (std::size_t i = 0; i < pts.size(); ++i) vals[i] = eval(pts[i]);
  std::vector<std::size_t> order(pts.size());
  while (evals < max_evals) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[order.size() - 2];
    if (std::abs(vals[worst] - vals[best]) <= ftol * (std::abs(vals[best]) + ftol)) break;
    RVec centroid = RVec::Zero(n);
    for (std::size_t i = 0; i + 1 < order.size(); ++i) centroid += pts[order[i]];
    centroid /= nd;
    const RVec xr = centroid + alpha * (centroid - pts[worst]);
    const double fr = eval(xr);
    if (fr < vals[best]) {
      const RVec xe = centroid + gamma * (xr - centroid);
      const double fe = eval(xe);
      if (fe < fr) { pts[worst] = xe; vals[worst] = fe; }
      else { pts[worst] = xr; vals[worst] = fr; }
    } else if (fr < vals[second]) {
      pts[worst] = xr;
      vals[worst] = fr;
    } else {
      const bool outside = fr < vals[worst];
      const RVec xc = outside ? RVec(centroid + rho * (xr - centroid)) : RVec(centroid + rho * (pts[worst] - centroid));
      const double fc = eval(xc);
      if (fc < std::min(fr, vals[worst])) {
        pts[worst] = xc;
        vals[worst] = fc;
      } else {
        for (std::size_t i = 0; i < pts.size(); ++i) {
          if (i == best) continue;
          pts[i] = pts[best] + sigma * (pts[i] - pts[best]);
          vals[i] = eval(pts[i]);
        }
      }
    }
  }
  const auto it = std::min_element(vals.begin(), vals.end());
  return {pts[static_cast<std::size_t>(it - vals.begin())], *it, evals};
}

}  // namespace invmetric
