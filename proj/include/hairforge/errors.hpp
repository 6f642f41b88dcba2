#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hairforge {

// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FileNotFound : public Error {
 public:
  using Error::Error;
};

class UnsupportedFormat : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class MaskTouchesBorder : public Error {
 public:
  using Error::Error;
};

class EmptyRegion : public Error {
 public:
  using Error::Error;
};

class EmptyBoundary : public Error {
 public:
  using Error::Error;
};

class EmptyAnnulus : public Error {
 public:
  using Error::Error;
};

class MaskOutOfBounds : public Error {
 public:
  using Error::Error;
};

class EmptyAfterTransform : public Error {
 public:
  using Error::Error;
};

class NoFeasiblePlacement : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Raised when an iterative solve stops at max_iterations with the residual
// still above tolerance.
class DidNotConverge : public Error {
 public:
  DidNotConverge(double residual, std::size_t iterations)
      : Error("solver did not converge: residual " + std::to_string(residual) +
              " after " + std::to_string(iterations) + " iterations"),
        residual_(residual),
        iterations_(iterations) {}

  double residual() const noexcept { return residual_; }
  std::size_t iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  std::size_t iterations_;
};

}  // namespace hairforge
