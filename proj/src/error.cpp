#include "gern/error.hpp"

namespace gern {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::DisconnectedGraph: return "DisconnectedGraph";
    case ErrorKind::InvalidIndex: return "InvalidIndex";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::StepCapExceeded: return "StepCapExceeded";
    case ErrorKind::EdgeSetMismatch: return "EdgeSetMismatch";
    case ErrorKind::InvalidStart: return "InvalidStart";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::SizeCapExceeded: return "SizeCapExceeded";
    case ErrorKind::NumericalFailure: return "NumericalFailure";
    case ErrorKind::MissingEdgeResistance: return "MissingEdgeResistance";
    case ErrorKind::InvalidDims: return "InvalidDims";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NonFiniteActivation: return "NonFiniteActivation";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::EmptySubset: return "EmptySubset";
    case ErrorKind::StaleCache: return "StaleCache";
    case ErrorKind::MissingFile: return "MissingFile";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::ClassTooSmall: return "ClassTooSmall";
    case ErrorKind::CouldNotConnect: return "CouldNotConnect";
  }
  return "Unknown";
}

}  // namespace gern
