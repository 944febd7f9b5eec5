#include "common/error.hpp"

namespace gaitfuse {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::ShapeMismatch: return "shape mismatch";
    case ErrorCode::NumericDivergence: return "numeric divergence";
    case ErrorCode::Io: return "i/o error";
    case ErrorCode::Parse: return "parse error";
    case ErrorCode::NonMonotoneTime: return "non-monotone time";
    case ErrorCode::MissingColumns: return "missing columns";
    case ErrorCode::EmptyInput: return "empty input";
    case ErrorCode::CheckpointMagic: return "bad checkpoint magic";
    case ErrorCode::CheckpointVersion: return "checkpoint version mismatch";
    case ErrorCode::CheckpointTruncated: return "truncated checkpoint";
    case ErrorCode::CheckpointFormat: return "malformed checkpoint";
    case ErrorCode::Config: return "config error";
    case ErrorCode::StructureMismatch: return "structure mismatch";
  }
  return "unknown error";
}

}  // namespace gaitfuse
