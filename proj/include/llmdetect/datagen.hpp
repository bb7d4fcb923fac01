#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "llmdetect/corpus.hpp"

namespace llmdetect {

struct ChatMessage {
  std::string role;
  std::string content;
};

/// One self-contained chat request. Each request is its own conversation.
struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  nlohmann::json options = nlohmann::json::object();  // decoding parameters, passed through

  nlohmann::json to_json() const;
};

class LlmProvider {
 public:
  virtual ~LlmProvider() = default;
  /// Returns the assistant reply. Implementations must be safe to call
  /// concurrently.
  virtual std::string complete(const ChatRequest& request) const = 0;
  virtual std::string name() const = 0;
};

struct LlmProviderConfig {
  std::string endpoint_url;   // e.g. https://api.example.com/v1/chat/completions
  std::string model_name;
  std::string api_key_env_var = "OPENAI_API_KEY";
  double timeout_seconds = 60.0;
  int max_retries = 3;
  double initial_backoff_seconds = 1.0;  // doubles after each failed attempt
  nlohmann::json options = nlohmann::json::object();

  void validate() const;
};

/// POSTs {model, messages, ...options} as JSON and reads
/// choices[0].message.content. Retries transport errors, HTTP 429 and 5xx.
class HttpChatProvider final : public LlmProvider {
 public:
  explicit HttpChatProvider(LlmProviderConfig config);
  std::string complete(const ChatRequest& request) const override;
  std::string name() const override;

  const LlmProviderConfig& config() const noexcept { return config_; }

 private:
  LlmProviderConfig config_;
};

/// Offline provider. The request's user content is "<instruction>\n\n<payload>".
/// A payload starting with "[SUM]" is answered "[ELAB] <payload> ~<seed>";
/// anything else with "[SUM] <first 10 whitespace tokens> ~<seed>".
class StubProvider final : public LlmProvider {
 public:
  explicit StubProvider(std::uint64_t seed = 0) : seed_(seed) {}
  std::string complete(const ChatRequest& request) const override;
  std::string name() const override;

 private:
  std::uint64_t seed_;
};

std::unique_ptr<LlmProvider> stub_provider(std::uint64_t seed);

struct PromptProtocol {
  std::string summarize_template = "please summarize this one into 3 lines keeping the context as it is";
  std::string elaborate_template =
      "Now elaborate on this topic with around 600 to 750 words keeping the context in mind";
  /// Used instead of elaborate_template in short mode; "{words}" expands to
  /// the word count of the source text.
  std::string short_elaborate_template =
      "Now elaborate on this topic in around {words} words, keeping the output sentence length "
      "similar to the input sentence and keeping the context in mind";
  bool short_mode = false;
  std::string model_name;
  nlohmann::json options = nlohmann::json::object();

  void validate() const;
};

/// Builds the two requests of the protocol. The elaboration request only
/// carries the summary, never the source text.
ChatRequest summarize_request(const PromptProtocol& protocol, const std::string& human_text);
ChatRequest elaborate_request(const PromptProtocol& protocol, const std::string& summary,
                              std::size_t source_word_count);

struct GenerationRecord {
  std::string source_id;
  std::string summary;
  std::string elaboration;
  std::string provider;
  std::string timestamp;  // UTC, ISO-8601

  nlohmann::json to_json() const;
};

GenerationRecord generate_counterpart(const LlmProvider& client, const std::string& source_id,
                                      const std::string& human_text, const PromptProtocol& protocol);

struct PairedDatasetOptions {
  std::size_t parallelism = 1;
};

struct PairedDataset {
  Corpus corpus;                          // human, counterpart, human, counterpart, ...
  std::vector<GenerationRecord> records;  // successful generations, in source order
  std::size_t warning_count = 0;
};

PairedDataset build_paired_dataset(const Corpus& humans, const LlmProvider& client,
                                   const PromptProtocol& protocol,
                                   const PairedDatasetOptions& options = {});

std::string utc_timestamp(std::chrono::system_clock::time_point when = std::chrono::system_clock::now());

}  // namespace llmdetect
