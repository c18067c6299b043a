#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace amt {

// Every failure the library reports carries one of these codes. The HTTP
// layer maps them to status codes and the CLI maps them to exit code 1.
enum class ErrorCode {
  // domain_model
  EmptySide,
  SameLanguage,
  InvalidArgument,
  // tm_store
  LanguageMismatch,
  Io,
  NoValidRecords,
  // embedder / ann_index
  ProviderUnavailable,
  DimensionMismatch,
  ZeroVector,
  TooFewVectors,
  NotTrained,
  DuplicateId,
  BadSnapshot,
  // retrieval
  IndexStale,
  EmptyTm,
  BadEdges,
  // prompts / terminology
  MissingSlot,
  EmptyMatches,
  EmptyTerms,
  NoTermsParsed,
  InconsistentCounts,
  // wlac
  SamplerFailure,
  EmptyInput,
  // corpus_pipeline
  EmptyDataset,
  PartialBatch,
  NegativeInput,
  // llm_gateway
  EmptyBatch,
  BackendError,
  Timeout,
  // server
  NotFound,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace amt
