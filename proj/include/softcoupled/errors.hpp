#pragma once

#include <stdexcept>
#include <string>

namespace softcoupled {

enum class ErrorKind {
  Argument,
  DegenerateGeometry,
  IllConditioned,
  Divergence,
  SolverNonConvergence,
  Singular,
  UnsupportedFamily,
  DegenerateDataset,
  Parse,
  Io,
  CertificateFailed,
};

const char* to_string(ErrorKind kind) noexcept;

/// Base exception for everything the library throws.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised by the integrator when the state stops being finite.
class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t step, const std::string& what)
      : Error(ErrorKind::Divergence, what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Raised by Newton solvers that exhaust their iteration budget.
class SolverError : public Error {
 public:
  SolverError(double residual, const std::string& what)
      : Error(ErrorKind::SolverNonConvergence, what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

}  // namespace softcoupled
