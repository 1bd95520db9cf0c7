#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace fractal {

// Invalid arguments / malformed inputs (CLI exit code 2).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Numerical-domain failures: singularity proximity, evaluation outside the
// certified half-plane, divergent series, counter overflow (CLI exit code 3).
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Evaluation attempted inside the guard region around a singularity.
// Carries the nearest lattice point so callers can report it.
class SingularityError : public DomainError {
 public:
  SingularityError(std::complex<double> nearest, const std::string& what)
      : DomainError(what), nearest_(nearest) {}

  std::complex<double> nearest() const { return nearest_; }

 private:
  std::complex<double> nearest_;
};

// Multiplicity or index arithmetic left the u64 range.
class OverflowError : public DomainError {
 public:
  using DomainError::DomainError;
};

}  // namespace fractal
