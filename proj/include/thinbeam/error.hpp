#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace thinbeam {

enum class ErrorKind {
  // tensor
  NotCoercive,
  InvalidLame,
  // truss
  DegeneratePair,
  WrongCount,
  NeedsReordering,
  NotParallelTriple,
  DegenerateProjection,
  SingularTruss,
  // beam
  GridMismatch,
  TrivialProblem,
  TooLarge,
  // thin film
  CrackOutsideDomain,
  InvalidThickness,
  BallTooLarge,
  InvalidField,
  // phase field
  ShapeMismatch,
  SingularSystem,
  SolverDiverged,
  // recovery
  CannotAchieveEta,
  // compactness
  EmptyRectangle,
  NoGoodRectangles,
  CertificateViolation,
  // io / config
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorKind kind);

/// True for error kinds that indicate bad input rather than a numerical failure.
bool is_config_error(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace thinbeam
