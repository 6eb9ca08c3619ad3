#include "dsw/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dsw {

QuadratureRule gauss_legendre(int m) {
  if (m < 1) throw std::invalid_argument("gauss_legendre: need at least one point");
  QuadratureRule rule;
  rule.points.resize(m);
  rule.weights.resize(m);
  // Newton iteration on P_m from the Chebyshev-like initial guesses.
  for (int i = 0; i < m; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
    double dp = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= m; ++k) {
        double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = m * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute the derivative at the converged root
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= m; ++k) {
      double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    dp = m * (x * p1 - p0) / (x * x - 1.0);
    rule.points[i] = {0.5 * (1.0 - x), 0.0};
    rule.weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);  // 2/((1-x^2)P'^2) scaled by 1/2
  }
  return rule;
}

QuadratureRule simplex_rule(int dim, int degree) {
  if (degree < 1) throw std::invalid_argument("quadrature degree must be >= 1");
  if (dim == 1) return gauss_legendre((degree + 2) / 2);
  if (dim != 2) throw std::invalid_argument("simplex_rule: dim must be 1 or 2");

  if (degree <= 2) {
    QuadratureRule rule;
    rule.points = {{0.5, 0.0}, {0.5, 0.5}, {0.0, 0.5}};
    rule.weights = {1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0};
    return rule;
  }
  // (u, v) in [0,1]^2 -> (u, v (1 - u)), Jacobian (1 - u) raises the degree by one.
  const int m = (degree + 3) / 2;
  const QuadratureRule line = gauss_legendre(m);
  QuadratureRule rule;
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      const double u = line.points[a][0];
      const double v = line.points[b][0];
      rule.points.push_back({u, v * (1.0 - u)});
      rule.weights.push_back(line.weights[a] * line.weights[b] * (1.0 - u));
    }
  }
  return rule;
}

}  // namespace dsw
