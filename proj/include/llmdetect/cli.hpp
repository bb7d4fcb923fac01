#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "llmdetect/classifiers.hpp"
#include "llmdetect/corpus.hpp"
#include "llmdetect/datagen.hpp"
#include "llmdetect/explain.hpp"
#include "llmdetect/metrics.hpp"
#include "llmdetect/pipeline.hpp"
#include "llmdetect/text_pipeline.hpp"

namespace llmdetect {

struct RunPaths {
  std::string train_data;
  std::string test_data;  // when set, train_data is used whole and no split is made
  std::string model_out;
  std::string report_out;
};

/// Everything a command needs. Read from one JSON document; command-line
/// flags override individual fields.
struct RunConfig {
  TokenizerConfig tokenizer;
  SplitSpec split;
  ClassifierSpec classifier = ClassifierSpec::defaults(ClassifierKind::NaiveBayes);
  ExplanationConfig explanation;
  std::string label_field = "label";
  RunPaths paths;
  std::optional<LlmProviderConfig> provider;
  PromptProtocol protocol;

  /// Sets the split, classifier and explanation seeds together.
  void set_seed(std::uint64_t seed);

  nlohmann::json to_json() const;
  /// Missing fields keep their defaults.
  static RunConfig from_json(const nlohmann::json& doc);
  static RunConfig load(const std::filesystem::path& path);
};

struct TrainResult {
  ModelArtifact artifact;
  nlohmann::json summary;  // class counts, vocabulary size, final loss, ...
};

/// clean -> dedup -> split (unless a test file is given) -> fit vocabulary
/// and TF-IDF on the training partition -> fit classifier -> write artifact
/// to paths.model_out when set.
TrainResult cmd_train(const RunConfig& config);

/// Hash over the training corpus, tokenizer settings and classifier spec.
std::string training_fingerprint(const Corpus& train, const TokenizerConfig& tokenizer,
                                 const ClassifierSpec& spec);

struct EvaluateResult {
  EvalReport report;
  nlohmann::json report_json;
};

/// Writes the report JSON to report_out and the curves next to it as
/// <stem>.roc.csv and <stem>.det.csv, when report_out is non-empty.
EvaluateResult cmd_evaluate(const std::filesystem::path& model_path,
                            const std::filesystem::path& test_data,
                            const std::filesystem::path& report_out,
                            const std::string& label_field = "label");

struct PredictInput {
  std::optional<std::string> text;             // single-text mode
  std::optional<std::filesystem::path> file;  // .jsonl / .csv corpus, or one text per line
};

/// One JSON line {id, p_human, p_ai, label} per input text, in order.
std::vector<nlohmann::json> cmd_predict(const std::filesystem::path& model_path,
                                        const PredictInput& input, std::size_t batch_size = 32);

struct ExplainOutputs {
  std::filesystem::path json_out;  // empty: not written
  std::filesystem::path svg_out;   // empty: no chart
};

nlohmann::json cmd_explain(const std::filesystem::path& model_path, const std::string& text,
                           const ExplanationConfig& config, const ExplainOutputs& outputs = {});

struct DatagenOptions {
  std::filesystem::path human_data;
  std::filesystem::path output;          // paired corpus, JSONL or CSV by extension
  std::filesystem::path log_out;         // GenerationRecord JSONL; empty: not written
  bool stub = false;
  std::uint64_t stub_seed = 0;
  std::optional<LlmProviderConfig> provider;
  PromptProtocol protocol;
  std::size_t parallelism = 1;
};

PairedDataset cmd_datagen(const DatagenOptions& options);

/// Structured error line for stderr: {"error": kind, "message": ...}.
std::string error_json(const std::exception& e);

/// CLI entry point; returns the process exit code.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace llmdetect
