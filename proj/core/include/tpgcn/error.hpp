#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tpgcn {

enum class ErrorCode {
  // skeleton_io
  TruncatedFile,
  MalformedNumber,
  JointCountMismatch,
  FieldCountMismatch,
  TooManyBodies,
  PadOverflow,
  BadMagic,
  UnsupportedVersion,
  LengthMismatch,
  // graph_topology
  MissingSequence,
  IndexOutOfRange,
  NonSymmetric,
  // tensor_autodiff
  ShapeMismatch,
  NonFiniteDetected,
  NoTape,
  // network
  PartMapIncomplete,
  ConfigMismatch,
  // training
  DataEmpty,
  ClassCountMismatch,
  CheckpointMismatch,
  // generic
  InvalidArgument,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Every failure surfaced by the library is an Error carrying a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace tpgcn
