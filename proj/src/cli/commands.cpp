#include <fstream>
#include <sstream>

#include "llmdetect/cli.hpp"
#include "llmdetect/error.hpp"
#include "llmdetect/rng.hpp"

namespace llmdetect {

using nlohmann::json;

namespace {

template <typename T>
void read_opt(const json& doc, const char* key, T& out) {
  if (doc.contains(key) && !doc.at(key).is_null()) out = doc.at(key).get<T>();
}

json tokenizer_to_json(const TokenizerConfig& c) {
  return {{"max_vocab", c.max_vocab},
          {"oov_token", c.oov_token},
          {"lowercase", c.lowercase},
          {"filter_chars", c.filter_chars}};
}

TokenizerConfig tokenizer_from_json(const json& doc) {
  TokenizerConfig c;
  read_opt(doc, "max_vocab", c.max_vocab);
  read_opt(doc, "oov_token", c.oov_token);
  read_opt(doc, "lowercase", c.lowercase);
  read_opt(doc, "filter_chars", c.filter_chars);
  return c;
}

json explanation_config_to_json(const ExplanationConfig& c) {
  return {{"num_samples", c.num_samples}, {"top_k", c.top_k},
          {"kernel_width", c.kernel_width}, {"ridge_penalty", c.ridge_penalty},
          {"batch_size", c.batch_size},    {"seed", c.seed}};
}

ExplanationConfig explanation_config_from_json(const json& doc) {
  ExplanationConfig c;
  read_opt(doc, "num_samples", c.num_samples);
  read_opt(doc, "top_k", c.top_k);
  read_opt(doc, "kernel_width", c.kernel_width);
  read_opt(doc, "ridge_penalty", c.ridge_penalty);
  read_opt(doc, "batch_size", c.batch_size);
  read_opt(doc, "seed", c.seed);
  return c;
}

json provider_to_json(const LlmProviderConfig& c) {
  return {{"endpoint_url", c.endpoint_url},
          {"model_name", c.model_name},
          {"api_key_env_var", c.api_key_env_var},
          {"timeout_seconds", c.timeout_seconds},
          {"max_retries", c.max_retries},
          {"initial_backoff_seconds", c.initial_backoff_seconds},
          {"options", c.options}};
}

LlmProviderConfig provider_from_json(const json& doc) {
  if (doc.contains("api_key")) {
    throw Error(ErrorKind::InvalidArgument,
                "API keys are read from the environment; set provider.api_key_env_var instead");
  }
  LlmProviderConfig c;
  read_opt(doc, "endpoint_url", c.endpoint_url);
  read_opt(doc, "model_name", c.model_name);
  read_opt(doc, "api_key_env_var", c.api_key_env_var);
  read_opt(doc, "timeout_seconds", c.timeout_seconds);
  read_opt(doc, "max_retries", c.max_retries);
  read_opt(doc, "initial_backoff_seconds", c.initial_backoff_seconds);
  read_opt(doc, "options", c.options);
  return c;
}

json protocol_to_json(const PromptProtocol& p) {
  return {{"summarize_template", p.summarize_template},
          {"elaborate_template", p.elaborate_template},
          {"short_elaborate_template", p.short_elaborate_template},
          {"short_mode", p.short_mode},
          {"model_name", p.model_name},
          {"options", p.options}};
}

PromptProtocol protocol_from_json(const json& doc) {
  PromptProtocol p;
  read_opt(doc, "summarize_template", p.summarize_template);
  read_opt(doc, "elaborate_template", p.elaborate_template);
  read_opt(doc, "short_elaborate_template", p.short_elaborate_template);
  read_opt(doc, "short_mode", p.short_mode);
  read_opt(doc, "model_name", p.model_name);
  read_opt(doc, "options", p.options);
  return p;
}

std::string dump(const json& doc, int indent = 1) {
  return doc.dump(indent, ' ', false, json::error_handler_t::replace);
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

void require_file(const std::filesystem::path& path, const char* what) {
  if (path.empty()) throw Error(ErrorKind::InvalidArgument, std::string(what) + " path is not set");
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorKind::FileNotFound, std::string(what) + " not found: " + path.string());
  }
}

Corpus load_prepared(const std::filesystem::path& path, const LabelSource& label) {
  return deduplicate(clean_corpus(load_corpus(path, format_from_path(path), label)));
}

std::filesystem::path sibling(const std::filesystem::path& report, const std::string& suffix) {
  auto out = report;
  out.replace_filename(report.stem().string() + suffix);
  return out;
}

Corpus load_plain_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::FileNotFound, "cannot open " + path.string());
  Corpus corpus;
  corpus.source_name = path.string();
  std::string line;
  while (std::getline(in, line)) {
    std::string text = clean_text(line);
    if (text.empty()) continue;
    corpus.documents.push_back({std::to_string(corpus.size()), std::move(text), Label::Human, {}});
  }
  return corpus;
}

}  // namespace

void RunConfig::set_seed(std::uint64_t seed) {
  split.seed = seed;
  classifier.seed = seed;
  explanation.seed = seed;
}

json RunConfig::to_json() const {
  json doc = {
      {"tokenizer", tokenizer_to_json(tokenizer)},
      {"split", {{"train_fraction", split.train_fraction}, {"seed", split.seed}}},
      {"classifier", spec_to_json(classifier)},
      {"explanation", explanation_config_to_json(explanation)},
      {"label_field", label_field},
      {"paths",
       {{"train_data", paths.train_data},
        {"test_data", paths.test_data},
        {"model_out", paths.model_out},
        {"report_out", paths.report_out}}},
      {"protocol", protocol_to_json(protocol)},
  };
  if (provider) doc["provider"] = provider_to_json(*provider);
  return doc;
}

RunConfig RunConfig::from_json(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorKind::MalformedRecord, "run config must be a JSON object");
  RunConfig c;
  try {
    if (doc.contains("tokenizer")) c.tokenizer = tokenizer_from_json(doc.at("tokenizer"));
    if (doc.contains("split")) {
      read_opt(doc.at("split"), "train_fraction", c.split.train_fraction);
      read_opt(doc.at("split"), "seed", c.split.seed);
    }
    if (doc.contains("classifier")) c.classifier = spec_from_json(doc.at("classifier"));
    if (doc.contains("explanation")) c.explanation = explanation_config_from_json(doc.at("explanation"));
    read_opt(doc, "label_field", c.label_field);
    if (doc.contains("paths")) {
      const auto& p = doc.at("paths");
      read_opt(p, "train_data", c.paths.train_data);
      read_opt(p, "test_data", c.paths.test_data);
      read_opt(p, "model_out", c.paths.model_out);
      read_opt(p, "report_out", c.paths.report_out);
    }
    if (doc.contains("provider")) c.provider = provider_from_json(doc.at("provider"));
    if (doc.contains("protocol")) c.protocol = protocol_from_json(doc.at("protocol"));
    if (doc.contains("seed")) c.set_seed(doc.at("seed").get<std::uint64_t>());
  } catch (const json::exception& e) {
    throw Error(ErrorKind::MalformedRecord, std::string("malformed run config: ") + e.what());
  }
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::FileNotFound, "cannot open config " + path.string());
  try {
    return from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::MalformedRecord, path.string() + ": " + e.what());
  }
}

std::string training_fingerprint(const Corpus& train, const TokenizerConfig& tokenizer,
                                 const ClassifierSpec& spec) {
  std::uint64_t h = fnv1a64(corpus_to_jsonl(train));
  h = fnv1a64(dump(tokenizer_to_json(tokenizer), -1), h);
  h = fnv1a64(dump(spec_to_json(spec), -1), h);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

TrainResult cmd_train(const RunConfig& config) {
  config.tokenizer.validate();
  config.classifier.validate();
  require_file(config.paths.train_data, "training data");

  const LabelSource label = config.label_field;
  Corpus corpus = load_prepared(config.paths.train_data, label);
  if (corpus.empty()) throw Error(ErrorKind::EmptyCorpus, "training corpus is empty");
  Corpus train;
  std::size_t held_out = 0;
  if (config.paths.test_data.empty()) {
    auto split = split_train_test(corpus, config.split);
    held_out = split.test.size();
    train = std::move(split.train);
  } else {
    train = std::move(corpus);
  }
  if (train.empty()) {
    throw Error(ErrorKind::CorpusTooSmall, "training partition is empty; use more documents");
  }

  ModelArtifact artifact;
  artifact.pipeline.vocabulary = fit_vocabulary(config.tokenizer, train);
  const auto texts = train.texts();
  const auto labels = train.labels();
  const auto x = artifact.pipeline.vocabulary.tfidf_matrix(texts);
  artifact.pipeline.model = fit_classifier(x, labels, config.classifier);
  artifact.pipeline.model.set_vocabulary_fingerprint(artifact.pipeline.vocabulary.fingerprint());
  artifact.training_fingerprint = training_fingerprint(train, config.tokenizer, config.classifier);

  if (!config.paths.model_out.empty()) {
    write_text(config.paths.model_out, dump(artifact_to_json(artifact)) + "\n");
  }

  const auto& s = artifact.pipeline.model.summary();
  json summary = {
      {"classifier", kind_name(config.classifier.kind())},
      {"n_train", train.size()},
      {"n_held_out", held_out},
      {"class_counts", {{"human", s.class_counts[0]}, {"ai", s.class_counts[1]}}},
      {"vocabulary_size", artifact.pipeline.vocabulary.size()},
      {"feature_dimension", artifact.pipeline.vocabulary.dimension()},
      {"iterations", s.iterations},
      {"converged", s.converged},
      {"final_loss", s.final_loss ? json(*s.final_loss) : json(nullptr)},
      {"training_fingerprint", artifact.training_fingerprint},
  };
  if (!config.paths.model_out.empty()) summary["model_out"] = config.paths.model_out;
  return {std::move(artifact), std::move(summary)};
}

EvaluateResult cmd_evaluate(const std::filesystem::path& model_path,
                            const std::filesystem::path& test_data,
                            const std::filesystem::path& report_out, const std::string& label_field) {
  require_file(model_path, "model");
  require_file(test_data, "test data");
  const auto artifact = load_artifact(model_path);
  const Corpus test = clean_corpus(load_corpus(test_data, format_from_path(test_data), label_field));
  if (test.empty()) throw Error(ErrorKind::EmptyCorpus, "test corpus is empty");
  const auto counts = test.class_counts();
  if (counts[0] == 0 || counts[1] == 0) {
    throw Error(ErrorKind::SingleClass, "test corpus needs both classes");
  }

  const auto texts = test.texts();
  const auto labels = test.labels();
  const auto scores = batched_predict(artifact.pipeline, texts, 256);

  EvaluateResult result;
  result.report = evaluate_scores(scores, labels);
  std::string roc_name, det_name;
  if (!report_out.empty()) {
    const auto roc_path = sibling(report_out, ".roc.csv");
    const auto det_path = sibling(report_out, ".det.csv");
    roc_name = roc_path.filename().string();
    det_name = det_path.filename().string();
    write_text(roc_path, curve_to_csv(result.report.roc.points));
    write_text(det_path, curve_to_csv(result.report.det));
  }
  result.report_json = report_to_json(result.report, roc_name, det_name);
  result.report_json["model"] = model_path.filename().string();
  result.report_json["n_samples"] = test.size();
  if (!report_out.empty()) write_text(report_out, dump(result.report_json) + "\n");
  return result;
}

std::vector<json> cmd_predict(const std::filesystem::path& model_path, const PredictInput& input,
                              std::size_t batch_size) {
  require_file(model_path, "model");
  if (input.text.has_value() == input.file.has_value()) {
    throw Error(ErrorKind::InvalidArgument, "give exactly one of a text or an input file");
  }
  const auto artifact = load_artifact(model_path);

  Corpus corpus;
  if (input.text) {
    corpus.documents.push_back({"0", clean_text(*input.text), Label::Human, {}});
  } else {
    require_file(*input.file, "input");
    const auto ext = input.file->extension().string();
    corpus = (ext == ".jsonl" || ext == ".json" || ext == ".csv")
                 ? clean_corpus(load_corpus(*input.file, format_from_path(*input.file), Label::Human))
                 : load_plain_lines(*input.file);
  }
  const auto texts = corpus.texts();
  const auto scores = batched_predict(artifact.pipeline, texts, batch_size);

  std::vector<json> lines;
  lines.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    lines.push_back({{"id", corpus.documents[i].id},
                     {"p_human", 1.0 - scores[i]},
                     {"p_ai", scores[i]},
                     {"label", to_int(label_for(scores[i]))}});
  }
  return lines;
}

json cmd_explain(const std::filesystem::path& model_path, const std::string& text,
                 const ExplanationConfig& config, const ExplainOutputs& outputs) {
  require_file(model_path, "model");
  config.validate();
  if (clean_text(text).empty()) throw Error(ErrorKind::InvalidArgument, "text to explain is empty");
  const auto artifact = load_artifact(model_path);
  const auto explanation = explain(artifact.pipeline, text, config);
  json doc = explanation_to_json(explanation, config);
  if (!outputs.json_out.empty()) write_text(outputs.json_out, dump(doc) + "\n");
  if (!outputs.svg_out.empty()) write_text(outputs.svg_out, explanation_to_svg(explanation));
  return doc;
}

PairedDataset cmd_datagen(const DatagenOptions& options) {
  require_file(options.human_data, "human data");
  if (options.output.empty()) throw Error(ErrorKind::InvalidArgument, "output path is not set");

  std::unique_ptr<LlmProvider> provider;
  if (options.stub) {
    provider = stub_provider(options.stub_seed);
  } else {
    if (!options.provider) {
      throw Error(ErrorKind::InvalidArgument, "no provider configured; pass --endpoint or --stub");
    }
    provider = std::make_unique<HttpChatProvider>(*options.provider);
  }
  PromptProtocol protocol = options.protocol;
  if (protocol.model_name.empty() && options.provider) protocol.model_name = options.provider->model_name;

  const Corpus humans =
      load_corpus(options.human_data, format_from_path(options.human_data), Label::Human);
  auto dataset = build_paired_dataset(humans, *provider, protocol, {options.parallelism});
  write_corpus(dataset.corpus, options.output, format_from_path(options.output));
  if (!options.log_out.empty()) {
    std::string log;
    for (const auto& r : dataset.records) log += dump(r.to_json(), -1) + "\n";
    write_text(options.log_out, log);
  }
  return dataset;
}

std::string error_json(const std::exception& e) {
  std::string kind = "internal";
  if (const auto* err = dynamic_cast<const Error*>(&e)) kind = std::string(error_kind_name(err->kind()));
  return dump(json{{"error", kind}, {"message", e.what()}}, -1);
}

}  // namespace llmdetect
