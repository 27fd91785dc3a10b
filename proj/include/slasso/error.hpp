#pragma once

#include <stdexcept>
#include <string>

namespace slasso {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class NonFinite : public Error {
 public:
  using Error::Error;
};

class NotSymmetric : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

/// A covariance column with zero variance, or an otherwise unusable input.
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

/// The simplex pivot fell below the stable threshold; rescale the problem.
class NumericalBreakdown : public Error {
 public:
  using Error::Error;
};

class ModelDegenerate : public Error {
 public:
  using Error::Error;
};

namespace detail {

[[noreturn]] inline void throw_dims(const std::string& what) {
  throw DimensionMismatch(what);
}

}  // namespace detail

}  // namespace slasso
