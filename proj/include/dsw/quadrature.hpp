/**
 * @file quadrature.hpp
 * @brief Quadrature on the reference simplex: [0,1] in 1D, the triangle
 * (0,0),(1,0),(0,1) in 2D. Weights sum to the reference measure.
 */
#pragma once

#include <vector>

#include "dsw/mesh.hpp"

namespace dsw {

struct QuadratureRule {
  std::vector<Point> points;
  std::vector<double> weights;
};

/// m-point Gauss-Legendre rule on [0,1], exact up to degree 2m-1.
QuadratureRule gauss_legendre(int m);

/// Rule on the reference simplex exact for polynomials of the given degree.
/// Degree <= 2 on triangles uses the 3-point edge-midpoint rule; higher
/// degrees use collapsed (Duffy) tensor Gauss rules.
QuadratureRule simplex_rule(int dim, int degree);

}  // namespace dsw
