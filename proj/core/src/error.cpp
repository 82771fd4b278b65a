#include "contrastlab/error.hpp"

#include <sstream>

namespace contrastlab {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::Contract: return "contract";
    case ErrorKind::ContrastDegeneracy: return "contrast-degeneracy";
    case ErrorKind::WithinClassContrast: return "within-class-contrast";
    case ErrorKind::NoNegatives: return "no-negatives";
    case ErrorKind::CenteringDegeneracy: return "centering-degeneracy";
    case ErrorKind::DivisionByZero: return "division-by-zero";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::Singularity: return "singularity";
    case ErrorKind::StepSize: return "step-size";
    case ErrorKind::Config: return "config";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind) {}

namespace {
std::string divergence_message(long iteration, double loss) {
  std::ostringstream os;
  os << "loss " << loss << " exceeded divergence threshold at iteration " << iteration
     << "; reduce step_size";
  return os.str();
}
}  // namespace

DivergenceError::DivergenceError(long iteration, double loss)
    : Error(ErrorKind::StepSize, divergence_message(iteration, loss)),
      iteration_(iteration),
      loss_(loss) {}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace contrastlab
