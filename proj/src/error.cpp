#include "llmdetect/error.hpp"

namespace llmdetect {

std::string_view error_kind_name(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::FileNotFound: return "file_not_found";
    case ErrorKind::MalformedRecord: return "malformed_record";
    case ErrorKind::EmptyCorpus: return "empty_corpus";
    case ErrorKind::CorpusTooSmall: return "corpus_too_small";
    case ErrorKind::NotFitted: return "not_fitted";
    case ErrorKind::InvalidArgument: return "invalid_argument";
    case ErrorKind::SingleClass: return "single_class";
    case ErrorKind::NonFinite: return "non_finite";
    case ErrorKind::DimensionMismatch: return "dimension_mismatch";
    case ErrorKind::FingerprintMismatch: return "fingerprint_mismatch";
    case ErrorKind::UnsupportedVersion: return "unsupported_version";
    case ErrorKind::ProviderError: return "provider_error";
    case ErrorKind::EmptyResponse: return "empty_response";
    case ErrorKind::AllGenerationsFailed: return "all_generations_failed";
    case ErrorKind::Io: return "io_error";
  }
  return "unknown";
}

}  // namespace llmdetect
