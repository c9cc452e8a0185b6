#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace revprobe {

enum class ErrorCode {
  // corpus
  MissingFile,
  MalformedRow,
  DuplicateId,
  ParseError,
  MalformedMatrix,
  UnknownFeatureType,
  MalformedRecord,
  NonPositiveCount,
  InconsistentDim,
  NonFiniteValue,
  // promptgen
  NotEnoughConcepts,
  VocabTooSmall,
  ConditionMismatch,
  // lmclient
  BackendUnreachable,
  ProtocolError,
  ContextOverflow,
  UnsupportedByBackend,
  // probe / stats / represent
  EmptyGroup,
  InsufficientData,
  LengthMismatch,
  ZeroVariance,
  NoPositives,
  OneClassOnly,
  MissingRow,
  DegenerateCategory,
  NonFiniteInput,
  InvalidVector,
  TooFewExamples,
  InvalidArgument,
  // harness
  ConfigInvalid,
  TooFewModels,
  MissingArtifact,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// True for failures that originate in talking to a model backend.
  bool is_backend_error() const noexcept {
    return code_ == ErrorCode::BackendUnreachable || code_ == ErrorCode::ProtocolError ||
           code_ == ErrorCode::ContextOverflow || code_ == ErrorCode::UnsupportedByBackend;
  }

 private:
  ErrorCode code_;
};

}  // namespace revprobe
