#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "llmdetect/corpus.hpp"
#include "llmdetect/sparse.hpp"

namespace llmdetect {

/// ASCII punctuation plus tab.
inline constexpr std::string_view kDefaultFilterChars =
    "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~\t";

struct TokenizerConfig {
  std::size_t max_vocab = 5000;
  std::string oov_token = "OOV";
  bool lowercase = true;
  std::string filter_chars{kDefaultFilterChars};

  /// Throws InvalidArgument when max_vocab is zero.
  void validate() const;

  bool operator==(const TokenizerConfig&) const = default;
};

/// Filter characters become spaces, ASCII letters are lowercased when
/// configured, and the result is split on whitespace runs.
std::vector<std::string> tokenize(const TokenizerConfig& config, std::string_view text);

/// Capped token index plus the document statistics behind the TF-IDF
/// weights. Index 0 is reserved for out-of-vocabulary tokens; kept tokens
/// occupy 1..size() densely, ranked by corpus frequency.
class FittedVocabulary {
 public:
  static constexpr std::uint32_t kOovIndex = 0;
  static constexpr int kFormatVersion = 1;

  FittedVocabulary() = default;

  const TokenizerConfig& config() const noexcept { return config_; }
  /// Number of kept tokens K (excluding OOV).
  std::size_t size() const noexcept { return tokens_.size() - (tokens_.empty() ? 0 : 1); }
  /// Feature dimensionality K + 1 (OOV column included).
  std::size_t dimension() const noexcept { return tokens_.size(); }
  bool fitted() const noexcept { return !tokens_.empty(); }

  /// Index of token, or kOovIndex when not kept.
  std::uint32_t index_of(std::string_view token) const;
  /// Token string for an index; index 0 yields the configured OOV token.
  const std::string& token_at(std::uint32_t index) const { return tokens_.at(index); }

  std::span<const std::uint64_t> doc_frequency() const noexcept { return doc_frequency_; }
  std::uint64_t n_docs() const noexcept { return n_docs_; }
  std::span<const double> idf() const noexcept { return idf_; }
  bool idf_fitted() const noexcept { return !idf_.empty(); }

  /// Bag-of-words counts; unknown tokens accumulate at index 0.
  SparseVector counts(std::string_view text) const;
  SparseVector counts(std::span<const std::string> tokens) const;

  /// Counts followed by TF-IDF weighting and L2 normalization.
  SparseVector tfidf(std::string_view text) const;
  FeatureMatrix tfidf_matrix(std::span<const std::string> texts) const;

  nlohmann::json to_json() const;
  static FittedVocabulary from_json(const nlohmann::json& doc);
  /// FNV-1a hash of the canonical JSON serialization, as 16 hex digits.
  std::string fingerprint() const;

  bool operator==(const FittedVocabulary& other) const;

 private:
  friend FittedVocabulary fit_vocabulary(const TokenizerConfig&, std::span<const std::string>);
  friend void fit_tfidf(FittedVocabulary&);

  TokenizerConfig config_;
  std::vector<std::string> tokens_;  // tokens_[0] is the OOV token
  std::unordered_map<std::string, std::uint32_t> token_to_index_;
  std::vector<std::uint64_t> doc_frequency_;
  std::uint64_t n_docs_ = 0;
  std::vector<double> idf_;
};

/// Ranks tokens by total frequency (ties: first appearance), keeps the top
/// max_vocab, records document frequencies and fits the IDF weights.
FittedVocabulary fit_vocabulary(const TokenizerConfig& config, std::span<const std::string> texts);
FittedVocabulary fit_vocabulary(const TokenizerConfig& config, const Corpus& corpus);

/// idf[j] = ln((1 + n_docs) / (1 + df[j])) + 1, for kept tokens and OOV.
void fit_tfidf(FittedVocabulary& vocab);

/// Multiplies entries by idf and divides by the Euclidean norm. Zero
/// vectors pass through.
SparseVector transform_tfidf(const FittedVocabulary& vocab, const SparseVector& counts);

}  // namespace llmdetect
