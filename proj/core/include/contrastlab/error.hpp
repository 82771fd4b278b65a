#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace contrastlab {

enum class ErrorKind {
  Dimension,
  Contract,
  ContrastDegeneracy,    // fewer than two samples, negative-pair average undefined
  WithinClassContrast,   // a labeled class with fewer than two samples
  NoNegatives,           // fewer than two classes
  CenteringDegeneracy,   // m < 2 in HSIC centering
  DivisionByZero,
  Numeric,
  Singularity,
  StepSize,
  Config,
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Thrown by minimize() when the loss blows up; carries the iteration.
class DivergenceError : public Error {
 public:
  DivergenceError(long iteration, double loss);

  long iteration() const noexcept { return iteration_; }
  double loss() const noexcept { return loss_; }

 private:
  long iteration_;
  double loss_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

inline void require(bool cond, ErrorKind kind, const char* what) {
  if (!cond) fail(kind, what);
}

}  // namespace contrastlab
