#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace llmdetect {

enum class ErrorKind {
  FileNotFound,
  MalformedRecord,
  EmptyCorpus,
  CorpusTooSmall,
  NotFitted,
  InvalidArgument,
  SingleClass,
  NonFinite,
  DimensionMismatch,
  FingerprintMismatch,
  UnsupportedVersion,
  ProviderError,
  EmptyResponse,
  AllGenerationsFailed,
  Io,
};

std::string_view error_kind_name(ErrorKind kind) noexcept;

/// Every failure raised by the library carries a machine-readable kind so
/// the CLI can report it as structured JSON.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace llmdetect
