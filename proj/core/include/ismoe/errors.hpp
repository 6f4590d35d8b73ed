#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ismoe {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Bad arguments or configuration detected before any computation.
class InvalidArgument : public Error {
public:
  using Error::Error;
};

// Dimension mismatch between matrices/vectors/hyperparameters.
class ShapeError : public InvalidArgument {
public:
  using InvalidArgument::InvalidArgument;
};

class NumericalError : public Error {
public:
  explicit NumericalError(const std::string &what, double jitter = 0.0)
      : Error(what), jitter_(jitter) {}

  // Relative jitter level in effect when the failure happened (0 if n/a).
  double jitter() const { return jitter_; }

private:
  double jitter_;
};

class OptimizationError : public NumericalError {
public:
  OptimizationError(const std::string &what, std::vector<std::string> per_start)
      : NumericalError(what), diagnostics_(std::move(per_start)) {}

  const std::vector<std::string> &diagnostics() const { return diagnostics_; }

private:
  std::vector<std::string> diagnostics_;
};

class SampleError : public NumericalError {
public:
  SampleError(const std::string &what, int sample_index)
      : NumericalError(what), sample_index_(sample_index) {}

  // -1 for aggregate failures spanning several samples.
  int sample_index() const { return sample_index_; }

private:
  int sample_index_;
};

class IoError : public Error {
public:
  using Error::Error;
};

} // namespace ismoe
