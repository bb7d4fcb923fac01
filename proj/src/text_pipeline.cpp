#include "llmdetect/text_pipeline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "llmdetect/error.hpp"
#include "llmdetect/rng.hpp"

namespace llmdetect {

using nlohmann::json;

namespace {

bool is_space(unsigned char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

}  // namespace

void TokenizerConfig::validate() const {
  if (max_vocab == 0) throw Error(ErrorKind::InvalidArgument, "max_vocab must be at least 1");
}

std::vector<std::string> tokenize(const TokenizerConfig& config, std::string_view text) {
  std::array<bool, 256> filtered{};
  for (unsigned char c : config.filter_chars) filtered[c] = true;

  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (filtered[c] || is_space(c)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
      continue;
    }
    if (config.lowercase && c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
    current += static_cast<char>(c);
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

FittedVocabulary fit_vocabulary(const TokenizerConfig& config, std::span<const std::string> texts) {
  config.validate();
  if (texts.empty()) throw Error(ErrorKind::EmptyCorpus, "cannot fit a vocabulary on no documents");

  struct Stat {
    std::uint64_t count = 0;
    std::size_t first_seen = 0;
  };
  std::unordered_map<std::string, Stat> stats;
  std::vector<std::vector<std::string>> tokenized;
  tokenized.reserve(texts.size());
  for (const auto& text : texts) {
    tokenized.push_back(tokenize(config, text));
    for (const auto& token : tokenized.back()) {
      if (token == config.oov_token) continue;  // reserved for index 0
      auto [it, inserted] = stats.try_emplace(token, Stat{0, stats.size()});
      ++it->second.count;
    }
  }

  std::vector<std::pair<const std::string*, Stat>> ranked;
  ranked.reserve(stats.size());
  for (const auto& [token, stat] : stats) ranked.emplace_back(&token, stat);
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second.count != b.second.count) return a.second.count > b.second.count;
    return a.second.first_seen < b.second.first_seen;
  });
  if (ranked.size() > config.max_vocab) ranked.resize(config.max_vocab);

  FittedVocabulary vocab;
  vocab.config_ = config;
  vocab.tokens_.reserve(ranked.size() + 1);
  vocab.tokens_.push_back(config.oov_token);
  for (const auto& [token, stat] : ranked) {
    vocab.token_to_index_.emplace(*token, static_cast<std::uint32_t>(vocab.tokens_.size()));
    vocab.tokens_.push_back(*token);
  }

  vocab.doc_frequency_.assign(vocab.tokens_.size(), 0);
  std::vector<std::size_t> last_doc(vocab.tokens_.size(), static_cast<std::size_t>(-1));
  for (std::size_t d = 0; d < tokenized.size(); ++d) {
    for (const auto& token : tokenized[d]) {
      const auto index = vocab.index_of(token);
      if (last_doc[index] != d) {
        last_doc[index] = d;
        ++vocab.doc_frequency_[index];
      }
    }
  }
  vocab.n_docs_ = texts.size();
  fit_tfidf(vocab);
  return vocab;
}

FittedVocabulary fit_vocabulary(const TokenizerConfig& config, const Corpus& corpus) {
  const auto texts = corpus.texts();
  return fit_vocabulary(config, texts);
}

void fit_tfidf(FittedVocabulary& vocab) {
  if (vocab.n_docs_ == 0 || vocab.doc_frequency_.size() != vocab.tokens_.size() ||
      vocab.tokens_.empty()) {
    throw Error(ErrorKind::NotFitted, "fit_tfidf needs document frequencies");
  }
  const double n = static_cast<double>(vocab.n_docs_);
  vocab.idf_.resize(vocab.doc_frequency_.size());
  for (std::size_t j = 0; j < vocab.idf_.size(); ++j) {
    const double df = static_cast<double>(vocab.doc_frequency_[j]);
    vocab.idf_[j] = std::log((1.0 + n) / (1.0 + df)) + 1.0;
  }
}

std::uint32_t FittedVocabulary::index_of(std::string_view token) const {
  // Heterogeneous lookup on unordered_map needs C++20 transparent hashing;
  // the tokens are short so a temporary string is fine.
  const auto it = token_to_index_.find(std::string(token));
  return it == token_to_index_.end() ? kOovIndex : it->second;
}

SparseVector FittedVocabulary::counts(std::span<const std::string> tokens) const {
  if (!fitted()) throw Error(ErrorKind::NotFitted, "vocabulary is not fitted");
  std::vector<SparseEntry> entries;
  entries.reserve(tokens.size());
  for (const auto& token : tokens) entries.push_back({index_of(token), 1.0});
  return SparseVector::from_unsorted(std::move(entries));
}

SparseVector FittedVocabulary::counts(std::string_view text) const {
  const auto tokens = tokenize(config_, text);
  return counts(tokens);
}

SparseVector FittedVocabulary::tfidf(std::string_view text) const {
  return transform_tfidf(*this, counts(text));
}

FeatureMatrix FittedVocabulary::tfidf_matrix(std::span<const std::string> texts) const {
  FeatureMatrix x;
  x.n_cols = dimension();
  x.rows.reserve(texts.size());
  for (const auto& text : texts) x.rows.push_back(tfidf(text));
  return x;
}

SparseVector transform_tfidf(const FittedVocabulary& vocab, const SparseVector& counts) {
  if (!vocab.idf_fitted()) throw Error(ErrorKind::NotFitted, "TF-IDF weights are not fitted");
  const auto idf = vocab.idf();
  SparseVector weighted;
  for (const auto& e : counts.entries()) {
    if (e.index >= idf.size()) {
      throw Error(ErrorKind::DimensionMismatch, "count index outside the vocabulary");
    }
    weighted.push_back(e.index, e.value * idf[e.index]);
  }
  const double norm = weighted.l2_norm();
  if (norm == 0.0) return weighted;
  return weighted.scaled(1.0 / norm);
}

json FittedVocabulary::to_json() const {
  return json{
      {"version", kFormatVersion},
      {"config",
       {{"max_vocab", config_.max_vocab},
        {"oov_token", config_.oov_token},
        {"lowercase", config_.lowercase},
        {"filter_chars", config_.filter_chars}}},
      {"tokens", tokens_},
      {"doc_frequency", doc_frequency_},
      {"n_docs", n_docs_},
      {"idf", idf_},
  };
}

FittedVocabulary FittedVocabulary::from_json(const json& doc) {
  try {
    const int version = doc.at("version").get<int>();
    if (version != kFormatVersion) {
      throw Error(ErrorKind::UnsupportedVersion,
                  "unsupported vocabulary version " + std::to_string(version));
    }
    FittedVocabulary vocab;
    const auto& cfg = doc.at("config");
    vocab.config_.max_vocab = cfg.at("max_vocab").get<std::size_t>();
    vocab.config_.oov_token = cfg.at("oov_token").get<std::string>();
    vocab.config_.lowercase = cfg.at("lowercase").get<bool>();
    vocab.config_.filter_chars = cfg.at("filter_chars").get<std::string>();
    vocab.tokens_ = doc.at("tokens").get<std::vector<std::string>>();
    vocab.doc_frequency_ = doc.at("doc_frequency").get<std::vector<std::uint64_t>>();
    vocab.n_docs_ = doc.at("n_docs").get<std::uint64_t>();
    vocab.idf_ = doc.at("idf").get<std::vector<double>>();

    const auto k = vocab.tokens_.size();
    if (k == 0 || vocab.doc_frequency_.size() != k || vocab.idf_.size() != k ||
        k - 1 > vocab.config_.max_vocab) {
      throw Error(ErrorKind::MalformedRecord, "inconsistent vocabulary arrays");
    }
    for (double w : vocab.idf_) {
      if (!(w > 0.0)) throw Error(ErrorKind::MalformedRecord, "vocabulary idf must be positive");
    }
    for (std::uint32_t i = 1; i < k; ++i) {
      if (!vocab.token_to_index_.emplace(vocab.tokens_[i], i).second) {
        throw Error(ErrorKind::MalformedRecord, "duplicate vocabulary token " + vocab.tokens_[i]);
      }
    }
    return vocab;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::MalformedRecord, std::string("bad vocabulary JSON: ") + e.what());
  }
}

std::string FittedVocabulary::fingerprint() const {
  const auto hash = fnv1a64(to_json().dump(-1, ' ', false, json::error_handler_t::replace));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

bool FittedVocabulary::operator==(const FittedVocabulary& other) const {
  return config_ == other.config_ && tokens_ == other.tokens_ &&
         doc_frequency_ == other.doc_frequency_ && n_docs_ == other.n_docs_ && idf_ == other.idf_;
}

}  // namespace llmdetect
