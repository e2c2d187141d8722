#pragma once

#include "feec/femspace.hpp"

namespace feec {

/// Straight segment chopped at element boundaries.
///
/// Sub-segments are stored in traversal order with both physical and
/// reference-coordinate endpoints; consecutive sub-segments share their
/// physical endpoints. If the segment leaves the mesh, the remainder past
/// the first boundary exit counts as outside (no re-entry), so
/// sum(lengths) + outside_length == total_length.
struct PolylineTrace {
  struct Piece {
    int element;
    Vec2 a, b;      // physical endpoints
    Vec2 ra, rb;    // reference coordinates in `element`
    double length;
  };
  std::vector<Piece> pieces;
  double total_length = 0.0;
  double outside_length = 0.0;
};

/// Walks the segment [x0, x1] through the mesh starting from element k0
/// (which must contain x0 up to the barycentric tolerance, else
/// InvalidStartError). Visiting more than 4 * nt elements throws
/// TraceOverflowError.
PolylineTrace trace_segment(const Mesh& mesh, const Vec2& x0, int k0, const Vec2& x1);

/// Tangential line integral of the 1-form along the traced segment
/// (two-point Gauss per piece; exact for the piecewise-quadratic fields of
/// both space orders).
double integrate_along(const DiscreteOneForm& u, const PolylineTrace& trace);

/// integrate_along plus the out-of-domain closure: the outside part
/// contributes (outside_length / total_length) * original_edge_integral,
/// the integral over the untransported edge. Degenerate traces (total
/// length below 1e-14 * h) return original_edge_integral unchanged.
double integrate_with_outflow(const DiscreteOneForm& u, const PolylineTrace& trace,
                              double original_edge_integral);

}  // namespace feec
