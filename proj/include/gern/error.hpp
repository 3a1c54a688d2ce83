#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gern {

enum class ErrorKind {
  DisconnectedGraph,
  InvalidIndex,
  LengthMismatch,
  StepCapExceeded,
  EdgeSetMismatch,
  InvalidStart,
  InvalidArgument,
  SizeCapExceeded,
  NumericalFailure,
  MissingEdgeResistance,
  InvalidDims,
  ShapeMismatch,
  NonFiniteActivation,
  NonFiniteLoss,
  EmptySubset,
  StaleCache,
  MissingFile,
  ParseError,
  IoError,
  ClassTooSmall,
  CouldNotConnect,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries a machine-checkable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace gern
