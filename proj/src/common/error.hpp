#pragma once

#include <stdexcept>
#include <string>

namespace gaitfuse {

enum class ErrorCode {
  InvalidArgument = 1,
  ShapeMismatch,
  NumericDivergence,
  Io,
  Parse,
  NonMonotoneTime,
  MissingColumns,
  EmptyInput,
  CheckpointMagic,
  CheckpointVersion,
  CheckpointTruncated,
  CheckpointFormat,
  Config,
  StructureMismatch,
};

const char* to_string(ErrorCode code) noexcept;

// Every failure in the library surfaces as this exception type; the C API maps
// code() onto its integer status values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace gaitfuse
