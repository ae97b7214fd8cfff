#pragma once

// Test-only oracles, kept independent of the library implementations they
// check.

#include <cmath>
#include <vector>

namespace oracles {

// Tanh-sinh quadrature of f over (a, b); handles integrable endpoint
// singularities. Doubles the node density until the level-to-level change
// is below tol.
template <typename F>
double tanh_sinh(F&& f, double a, double b, double tol = 1e-12) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  const double t_max = 6.0;
  double prev = 0.0;
  double result = 0.0;
  for (int level = 1; level <= 12; ++level) {
    double h = t_max / std::ldexp(1.0, level);
    double sum = 0.0;
    // At each level only the odd multiples of h are new, but recomputing
    // everything keeps this trivially correct; cost is negligible here.
    int n_nodes = static_cast<int>(t_max / h);
    for (int k = -n_nodes; k <= n_nodes; ++k) {
      double t = k * h;
      double u = 0.5 * M_PI * std::sinh(t);
      double x = mid + half * std::tanh(u);
      double w = 0.5 * M_PI * std::cosh(t) / std::pow(std::cosh(u), 2);
      if (x <= a || x >= b) continue;
      double fx = f(x);
      if (std::isfinite(fx)) sum += fx * w;
    }
    result = sum * h * half;
    if (level > 3 && std::abs(result - prev) < tol * (1.0 + std::abs(result))) break;
    prev = result;
  }
  return result;
}

// sin(pi a)/pi * int_{lo}^{1} s^-a (1-s)^(a-1) ds by direct quadrature.
inline double arcsine_integral_quadrature(double theta, double alpha) {
  if (theta == 0.0) return 1.0;
  double lo = theta / (1.0 + theta);
  auto f = [alpha](double s) {
    return std::pow(s, -alpha) * std::pow(1.0 - s, alpha - 1.0);
  };
  return std::sin(M_PI * alpha) / M_PI * tanh_sinh(f, lo, 1.0, 1e-13);
}

// Closed antiderivative for alpha = 1/2: (1/pi) arcsin(2s - 1).
inline double arcsine_integral_half(double theta) {
  double lo = theta / (1.0 + theta);
  return (M_PI / 2.0 - std::asin(2.0 * lo - 1.0)) / M_PI;
}

}  // namespace oracles
