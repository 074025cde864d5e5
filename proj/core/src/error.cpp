#include "tpgcn/error.hpp"

namespace tpgcn {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::MalformedNumber: return "MalformedNumber";
    case ErrorCode::JointCountMismatch: return "JointCountMismatch";
    case ErrorCode::FieldCountMismatch: return "FieldCountMismatch";
    case ErrorCode::TooManyBodies: return "TooManyBodies";
    case ErrorCode::PadOverflow: return "PadOverflow";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::MissingSequence: return "MissingSequence";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::NonSymmetric: return "NonSymmetric";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteDetected: return "NonFiniteDetected";
    case ErrorCode::NoTape: return "NoTape";
    case ErrorCode::PartMapIncomplete: return "PartMapIncomplete";
    case ErrorCode::ConfigMismatch: return "ConfigMismatch";
    case ErrorCode::DataEmpty: return "DataEmpty";
    case ErrorCode::ClassCountMismatch: return "ClassCountMismatch";
    case ErrorCode::CheckpointMismatch: return "CheckpointMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace tpgcn
