#include "thinbeam/error.hpp"

namespace thinbeam {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotCoercive: return "NotCoercive";
    case ErrorKind::InvalidLame: return "InvalidLame";
    case ErrorKind::DegeneratePair: return "DegeneratePair";
    case ErrorKind::WrongCount: return "WrongCount";
    case ErrorKind::NeedsReordering: return "NeedsReordering";
    case ErrorKind::NotParallelTriple: return "NotParallelTriple";
    case ErrorKind::DegenerateProjection: return "DegenerateProjection";
    case ErrorKind::SingularTruss: return "SingularTruss";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::TrivialProblem: return "TrivialProblem";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::CrackOutsideDomain: return "CrackOutsideDomain";
    case ErrorKind::InvalidThickness: return "InvalidThickness";
    case ErrorKind::BallTooLarge: return "BallTooLarge";
    case ErrorKind::InvalidField: return "InvalidField";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::SolverDiverged: return "SolverDiverged";
    case ErrorKind::CannotAchieveEta: return "CannotAchieveEta";
    case ErrorKind::EmptyRectangle: return "EmptyRectangle";
    case ErrorKind::NoGoodRectangles: return "NoGoodRectangles";
    case ErrorKind::CertificateViolation: return "CertificateViolation";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

bool is_config_error(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidLame:
    case ErrorKind::DegeneratePair:
    case ErrorKind::WrongCount:
    case ErrorKind::NeedsReordering:
    case ErrorKind::NotParallelTriple:
    case ErrorKind::GridMismatch:
    case ErrorKind::TrivialProblem:
    case ErrorKind::TooLarge:
    case ErrorKind::CrackOutsideDomain:
    case ErrorKind::InvalidThickness:
    case ErrorKind::BallTooLarge:
    case ErrorKind::InvalidField:
    case ErrorKind::ShapeMismatch:
    case ErrorKind::ConfigError:
    case ErrorKind::IoError:
      return true;
    default:
      return false;
  }
}

}  // namespace thinbeam
