#pragma once

// Test-only numerical oracles, independent of the library's gradient and
// Hessian-vector code paths: plain finite differences on primal evaluations.

#include <cmath>
#include <functional>
#include <vector>

namespace oracles {

using ScalarOfVec = std::function<double(const std::vector<double>&)>;

// Central finite-difference gradient with per-coordinate step 1e-5*(1+|x_i|).
inline std::vector<double> fd_gradient(const ScalarOfVec& f, std::vector<double> x) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = 1e-5 * (1.0 + std::fabs(x[i]));
    const double orig = x[i];
    x[i] = orig + h;
    const double fp = f(x);
    x[i] = orig - h;
    const double fm = f(x);
    x[i] = orig;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

// Dense mixed Hessian block H[i][j] = d^2 f / d a_i d b_j via the four-point
// central stencil on primal values only.
inline std::vector<std::vector<double>> fd_mixed_hessian(
    const std::function<double(const std::vector<double>&, const std::vector<double>&)>& f,
    std::vector<double> a, std::vector<double> b) {
  std::vector<std::vector<double>> h(a.size(), std::vector<double>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ha = 1e-4 * (1.0 + std::fabs(a[i]));
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double hb = 1e-4 * (1.0 + std::fabs(b[j]));
      const double ai = a[i], bj = b[j];
      a[i] = ai + ha; b[j] = bj + hb; const double fpp = f(a, b);
      a[i] = ai + ha; b[j] = bj - hb; const double fpm = f(a, b);
      a[i] = ai - ha; b[j] = bj + hb; const double fmp = f(a, b);
      a[i] = ai - ha; b[j] = bj - hb; const double fmm = f(a, b);
      a[i] = ai; b[j] = bj;
      h[i][j] = (fpp - fpm - fmp + fmm) / (4.0 * ha * hb);
    }
  }
  return h;
}

inline double rel_err(double got, double want, double abs_floor = 1e-8) {
  const double denom = std::max(std::fabs(want), abs_floor);
  return std::fabs(got - want) / denom;
}

}  // namespace oracles
