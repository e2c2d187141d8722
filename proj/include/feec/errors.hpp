#pragma once

#include <stdexcept>

namespace feec {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Mesh file could not be parsed (bad token, wrong counts, index range).
struct ParseError : Error {
  using Error::Error;
};

/// Mesh connectivity is unusable (non-manifold edge, empty mesh, ...).
struct TopologyError : Error {
  using Error::Error;
};

/// Element area below the degeneracy threshold.
struct DegenerateElementError : Error {
  using Error::Error;
};

/// Segment trace started outside its claimed start element.
struct InvalidStartError : Error {
  using Error::Error;
};

/// Segment trace exceeded the element-visit cap.
struct TraceOverflowError : Error {
  using Error::Error;
};

/// Velocity evaluation requested outside the closed domain.
struct OutsideDomainError : Error {
  using Error::Error;
};

/// Direct solve failed or exceeded its residual tolerance.
struct LinearSolveError : Error {
  using Error::Error;
};

/// Nonlinear inner iteration hit its cap without converging.
struct NoConvergenceError : Error {
  using Error::Error;
};

/// Bad CLI/config input.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace feec
