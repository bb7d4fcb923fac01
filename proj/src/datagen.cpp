#include "llmdetect/datagen.hpp"

#include <httplib.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <optional>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "llmdetect/error.hpp"

namespace llmdetect {

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorKind::InvalidArgument, "endpoint_url needs a scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::vector<std::string> whitespace_tokens(std::string_view s, std::size_t limit) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string tok;
  while (out.size() < limit && in >> tok) out.push_back(tok);
  return out;
}

std::size_t word_count(std::string_view s) {
  return whitespace_tokens(s, static_cast<std::size_t>(-1)).size();
}

ChatRequest single_turn(const PromptProtocol& protocol, const std::string& instruction,
                        const std::string& payload) {
  ChatRequest request;
  request.model = protocol.model_name;
  request.messages.push_back({"user", instruction + "\n\n" + payload});
  request.options = protocol.options;
  return request;
}

}  // namespace

nlohmann::json ChatRequest::to_json() const {
  nlohmann::json body = options.is_object() ? options : nlohmann::json::object();
  body["model"] = model;
  auto msgs = nlohmann::json::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  body["messages"] = std::move(msgs);
  return body;
}

void LlmProviderConfig::validate() const {
  if (endpoint_url.empty()) throw Error(ErrorKind::InvalidArgument, "endpoint_url is empty");
  if (!(timeout_seconds > 0.0)) throw Error(ErrorKind::InvalidArgument, "timeout must be positive");
  if (max_retries < 0) throw Error(ErrorKind::InvalidArgument, "max_retries must be non-negative");
  if (!(initial_backoff_seconds >= 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "initial_backoff_seconds must be non-negative");
  }
  if (!options.is_object()) throw Error(ErrorKind::InvalidArgument, "provider options must be an object");
  split_url(endpoint_url);
}

HttpChatProvider::HttpChatProvider(LlmProviderConfig config) : config_(std::move(config)) {
  config_.validate();
}

std::string HttpChatProvider::name() const {
  return "http:" + (config_.model_name.empty() ? config_.endpoint_url : config_.model_name);
}

std::string HttpChatProvider::complete(const ChatRequest& request) const {
  const auto endpoint = split_url(config_.endpoint_url);
  nlohmann::json body = request.to_json();
  for (const auto& [key, value] : config_.options.items()) {
    if (!request.options.contains(key)) body[key] = value;
  }
  if (request.model.empty()) body["model"] = config_.model_name;
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (const char* key = std::getenv(config_.api_key_env_var.c_str()); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  const auto seconds = static_cast<time_t>(config_.timeout_seconds);
  const auto micros = static_cast<time_t>((config_.timeout_seconds - static_cast<double>(seconds)) * 1e6);

  std::string last_error;
  double backoff = config_.initial_backoff_seconds;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
      backoff *= 2.0;
    }
    httplib::Client client(endpoint.origin);
    client.set_connection_timeout(seconds, micros);
    client.set_read_timeout(seconds, micros);
    client.set_write_timeout(seconds, micros);
    auto res = client.Post(endpoint.path, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      throw Error(ErrorKind::ProviderError,
                  "HTTP " + std::to_string(res->status) + " from " + config_.endpoint_url);
    }
    try {
      const auto doc = nlohmann::json::parse(res->body);
      const auto& content = doc.at("choices").at(0).at("message").at("content");
      if (content.is_null()) return {};
      return content.get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::ProviderError, std::string("malformed provider response: ") + e.what());
    }
  }
  throw Error(ErrorKind::ProviderError, "giving up after " + std::to_string(config_.max_retries + 1) +
                                            " attempts: " + last_error);
}

std::string StubProvider::complete(const ChatRequest& request) const {
  std::string content;
  for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it) {
    if (it->role == "user") {
      content = it->content;
      break;
    }
  }
  const auto sep = content.find("\n\n");
  const std::string payload = sep == std::string::npos ? content : content.substr(sep + 2);
  const std::string tag = " ~" + std::to_string(seed_);
  if (payload.starts_with("[SUM]")) return "[ELAB] " + payload + tag;

  std::string head;
  for (const auto& tok : whitespace_tokens(payload, 10)) {
    if (!head.empty()) head += ' ';
    head += tok;
  }
  return "[SUM] " + head + tag;
}

std::string StubProvider::name() const { return "stub:" + std::to_string(seed_); }

std::unique_ptr<LlmProvider> stub_provider(std::uint64_t seed) {
  return std::make_unique<StubProvider>(seed);
}

void PromptProtocol::validate() const {
  if (summarize_template.empty() || elaborate_template.empty() ||
      (short_mode && short_elaborate_template.empty())) {
    throw Error(ErrorKind::InvalidArgument, "prompt templates must be non-empty");
  }
  if (!options.is_object()) throw Error(ErrorKind::InvalidArgument, "protocol options must be an object");
}

ChatRequest summarize_request(const PromptProtocol& protocol, const std::string& human_text) {
  return single_turn(protocol, protocol.summarize_template, human_text);
}

ChatRequest elaborate_request(const PromptProtocol& protocol, const std::string& summary,
                              std::size_t source_word_count) {
  if (!protocol.short_mode) return single_turn(protocol, protocol.elaborate_template, summary);
  std::string instruction = protocol.short_elaborate_template;
  const std::string placeholder = "{words}";
  const std::string count = std::to_string(source_word_count);
  for (auto pos = instruction.find(placeholder); pos != std::string::npos;
       pos = instruction.find(placeholder, pos + count.size())) {
    instruction.replace(pos, placeholder.size(), count);
  }
  return single_turn(protocol, instruction, summary);
}

nlohmann::json GenerationRecord::to_json() const {
  return {{"source_id", source_id}, {"summary", summary}, {"elaboration", elaboration},
          {"provider", provider},   {"timestamp", timestamp}};
}

GenerationRecord generate_counterpart(const LlmProvider& client, const std::string& source_id,
                                      const std::string& human_text, const PromptProtocol& protocol) {
  protocol.validate();
  if (clean_text(human_text).empty()) {
    throw Error(ErrorKind::InvalidArgument, source_id + ": human text is empty");
  }
  auto call = [&](const ChatRequest& request, const char* step) {
    std::string reply;
    try {
      reply = client.complete(request);
    } catch (const Error& e) {
      throw Error(e.kind(), source_id + ": " + step + ": " + e.what());
    }
    if (clean_text(reply).empty()) {
      throw Error(ErrorKind::EmptyResponse, source_id + ": empty " + step + " response");
    }
    return reply;
  };

  GenerationRecord record;
  record.source_id = source_id;
  record.summary = call(summarize_request(protocol, human_text), "summary");
  record.elaboration = call(elaborate_request(protocol, record.summary, word_count(human_text)),
                            "elaboration");
  record.provider = client.name();
  record.timestamp = utc_timestamp();
  return record;
}

PairedDataset build_paired_dataset(const Corpus& humans, const LlmProvider& client,
                                   const PromptProtocol& protocol,
                                   const PairedDatasetOptions& options) {
  protocol.validate();
  for (const auto& d : humans.documents) {
    if (d.label != Label::Human) {
      throw Error(ErrorKind::InvalidArgument, "datagen input must be human-labeled; " + d.id + " is not");
    }
  }
  const Corpus sources = deduplicate(clean_corpus(humans));
  if (sources.empty()) throw Error(ErrorKind::EmptyCorpus, "no human documents to pair");

  struct Outcome {
    std::optional<GenerationRecord> record;
    std::string error;
  };
  std::vector<Outcome> outcomes(sources.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < sources.size(); i = next++) {
      const auto& doc = sources.documents[i];
      try {
        outcomes[i].record = generate_counterpart(client, doc.id, doc.text, protocol);
      } catch (const std::exception& e) {
        outcomes[i].error = e.what();
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(options.parallelism, 1, sources.size());
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }

  PairedDataset out;
  out.corpus.source_name = humans.source_name.empty() ? "datagen" : humans.source_name + "+datagen";
  std::unordered_set<std::string> seen;
  for (const auto& d : sources.documents) seen.insert(d.text);
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const auto& human = sources.documents[i];
    out.corpus.documents.push_back(human);
    auto& outcome = outcomes[i];
    if (!outcome.record) {
      warn("generation failed for " + human.id + ": " + outcome.error);
      ++out.warning_count;
      continue;
    }
    std::string text = clean_text(outcome.record->elaboration);
    if (!seen.insert(text).second) {
      warn("generated text for " + human.id + " duplicates an existing document; skipped");
      ++out.warning_count;
      continue;
    }
    out.corpus.documents.push_back({human.id + "-ai", std::move(text), Label::Ai, human.domain});
    out.records.push_back(std::move(*outcome.record));
  }
  if (out.records.empty()) {
    throw Error(ErrorKind::AllGenerationsFailed,
                "all " + std::to_string(sources.size()) + " generations failed");
  }
  return out;
}

std::string utc_timestamp(std::chrono::system_clock::time_point when) {
  const std::time_t t = std::chrono::system_clock::to_time_t(when);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace llmdetect
