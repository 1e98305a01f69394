#pragma once

#include <stdexcept>
#include <string>

namespace softrod {

/// Base class for every error raised by the simulator.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParameterError : public Error {
 public:
  using Error::Error;
};

/// An edge shorter than the degeneracy threshold.
class DegenerateEdgeError : public Error {
 public:
  DegenerateEdgeError(std::size_t edge, double length)
      : Error("degenerate edge " + std::to_string(edge) +
              " (length " + std::to_string(length) + ")"),
        edge_(edge) {}
  std::size_t edge() const { return edge_; }

 private:
  std::size_t edge_;
};

/// Two tangents that point in opposite directions; the minimal rotation
/// between them and the curvature binormal are undefined.
class AntiparallelTangentError : public Error {
 public:
  using Error::Error;
};

class SingularMatrixError : public Error {
 public:
  SingularMatrixError(std::size_t row, double pivot)
      : Error("singular banded matrix at row " + std::to_string(row) +
              " (pivot " + std::to_string(pivot) + ")"),
        row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

/// Raised by the implicit stepper when the Newton solve cannot produce a
/// finite iterate.
class StepFailureError : public Error {
 public:
  StepFailureError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Raised by the explicit stepper on divergence.
class InstabilityError : public Error {
 public:
  InstabilityError(const std::string& what, std::size_t dof)
      : Error(what), dof_(dof) {}
  std::size_t dof() const { return dof_; }

 private:
  std::size_t dof_;
};

class DimensionMismatchError : public Error {
 public:
  DimensionMismatchError(std::size_t expected, std::size_t got)
      : Error("dimension mismatch: expected " + std::to_string(expected) +
              ", got " + std::to_string(got)) {}
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace softrod
