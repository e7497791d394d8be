#ifndef GLB_ERROR_HPP
#define GLB_ERROR_HPP

#include <stdexcept>
#include <string>

namespace glb {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid lattice or bundle construction parameters.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// A form operation was applied to a field of unsupported degree.
class DegreeError : public Error {
 public:
  using Error::Error;
};

/// A radius, center, or index lies outside its admissible range.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// A physical parameter (for example epsilon) is out of range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Unsupported initialization mode for the requested bundle.
class ModeError : public Error {
 public:
  using Error::Error;
};

/// An iterative solve failed to reach its tolerance.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double residual)
      : Error(what + " (relative residual " + std::to_string(residual) + ")"),
        residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

}  // namespace glb

#endif  // GLB_ERROR_HPP
