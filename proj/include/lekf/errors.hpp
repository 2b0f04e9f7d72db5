#pragma once

#include <stdexcept>
#include <string>

namespace lekf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Rotation angle too close to pi for a unique logarithm.
class NearCutLocus : public Error {
 public:
  using Error::Error;
};

class NotOnGroup : public Error {
 public:
  using Error::Error;
};

/// A truncated series did not reach its tolerance, or its argument lies
/// outside the radius of convergence.
class SeriesDivergence : public Error {
 public:
  using Error::Error;
};

class SingularInnovation : public Error {
 public:
  using Error::Error;
};

/// Loss of positive definiteness (or a non-finite value) during filtering.
class NumericalFailure : public Error {
 public:
  NumericalFailure(const std::string& what, double time, double min_eigenvalue)
      : Error(what), time_(time), min_eigenvalue_(min_eigenvalue) {}

  double time() const { return time_; }
  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  double time_;
  double min_eigenvalue_;
};

}  // namespace lekf
