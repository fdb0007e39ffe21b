#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fsde {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A symmetric matrix expected to be positive definite failed its Cholesky
// factorization (for the Gramian: the rank condition fails at this horizon).
class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

// A tolerance-checked identity did not hold.
class ConstraintViolation : public Error {
 public:
  ConstraintViolation(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

// Path state became non-finite or exceeded the blow-up threshold.
class BlowUpError : public Error {
 public:
  BlowUpError(const std::string& what, std::size_t step)
      : Error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace fsde
