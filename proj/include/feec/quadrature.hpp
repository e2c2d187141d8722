#pragma once

#include <vector>

#include "feec/geometry.hpp"

namespace feec {

/// Quadrature node on the reference triangle {(x,y) : x,y >= 0, x+y <= 1}.
/// Weights sum to 1; multiply by the element area when integrating.
struct TriQuadPoint {
  double x, y, w;
};

/// Symmetric rule exact for polynomials of total degree <= `degree`.
/// Supported degrees: 1, 2, 4, 6 (requests in between round up).
const std::vector<TriQuadPoint>& triangle_rule(int degree);

/// Gauss-Legendre nodes/weights on [0, 1]; exact for degree <= 2n-1.
/// Computed once per n by Newton iteration and cached.
struct LineRule {
  std::vector<double> xi;
  std::vector<double> w;
};
const LineRule& gauss_rule(int n);

}  // namespace feec
