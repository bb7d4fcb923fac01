#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "llmdetect/cli.hpp"
#include "llmdetect/error.hpp"

namespace llmdetect {

namespace {

// Restores the default warning sink when a quiet run ends.
class QuietScope {
 public:
  explicit QuietScope(bool quiet) : active_(quiet) {
    if (active_) set_warning_sink([](std::string_view) {});
  }
  ~QuietScope() {
    if (active_) set_warning_sink({});
  }
  QuietScope(const QuietScope&) = delete;
  QuietScope& operator=(const QuietScope&) = delete;

 private:
  bool active_;
};

template <typename T, typename U>
void override_with(const std::optional<T>& flag, U& target) {
  if (flag) target = *flag;
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Train, evaluate and explain human-vs-LLM text detectors", "llmdetect"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--seed", seed, "Seed for splitting, training and explanation");
  app.add_flag("--quiet,-q", quiet, "Suppress warnings and summaries");

  // train
  auto* train = app.add_subcommand("train", "Fit a vocabulary and classifier; write a model artifact");
  std::optional<std::string> train_data, test_data, model_out, classifier, label_field;
  std::optional<std::size_t> max_vocab;
  std::optional<double> train_fraction;
  train->add_option("--data", train_data, "Training corpus (.jsonl or .csv)");
  train->add_option("--test-data", test_data, "Held-out corpus; disables the internal split");
  train->add_option("--model-out,-o", model_out, "Artifact path");
  train->add_option("--classifier,-c", classifier, "nb | lr | rf | gbt | mlp");
  train->add_option("--max-vocab", max_vocab, "Vocabulary cap");
  train->add_option("--train-fraction", train_fraction, "Share of documents used for training");
  train->add_option("--label-field", label_field, "Label field or column name");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Score a labeled corpus; write report and curves");
  std::string eval_model, eval_data, report_out;
  std::optional<std::string> eval_label;
  evaluate->add_option("--model,-m", eval_model, "Model artifact")->required();
  evaluate->add_option("--data", eval_data, "Labeled test corpus")->required();
  evaluate->add_option("--report-out,-o", report_out, "Report JSON path");
  evaluate->add_option("--label-field", eval_label, "Label field or column name");

  // predict
  auto* predict = app.add_subcommand("predict", "Print {id, p_human, p_ai, label} per input text");
  std::string predict_model;
  std::optional<std::string> predict_text, predict_file;
  std::size_t predict_batch = 32;
  predict->add_option("--model,-m", predict_model, "Model artifact")->required();
  auto* text_opt = predict->add_option("--text", predict_text, "Single text");
  auto* file_opt = predict->add_option("--file", predict_file, "Corpus file or one text per line");
  text_opt->excludes(file_opt);
  predict->add_option("--batch-size", predict_batch, "Texts per model call");

  // explain
  auto* explain_cmd = app.add_subcommand("explain", "Word attributions for one text");
  std::string explain_model, explain_text;
  std::optional<std::size_t> top_k, num_samples, explain_batch;
  std::optional<double> kernel_width, ridge;
  std::string explain_out, svg_out;
  explain_cmd->add_option("--model,-m", explain_model, "Model artifact")->required();
  explain_cmd->add_option("--text", explain_text, "Text to explain")->required();
  explain_cmd->add_option("--top-k", top_k, "Attributions to report (default 10)");
  explain_cmd->add_option("--num-samples", num_samples, "Perturbed samples (default 5000)");
  explain_cmd->add_option("--kernel-width", kernel_width, "Kernel width (default 25)");
  explain_cmd->add_option("--ridge", ridge, "Surrogate ridge penalty (default 1)");
  explain_cmd->add_option("--batch-size", explain_batch, "Texts per model call (default 32)");
  explain_cmd->add_option("--out,-o", explain_out, "Explanation JSON path (default stdout)");
  explain_cmd->add_option("--svg", svg_out, "Bar chart SVG path");

  // datagen
  auto* datagen = app.add_subcommand("datagen", "Generate AI counterparts for human documents");
  std::string human_data, datagen_out, log_out;
  bool stub = false;
  bool short_mode = false;
  std::size_t parallelism = 1;
  std::optional<std::string> endpoint, model_name, api_key_env;
  std::optional<int> max_retries;
  std::optional<double> timeout;
  datagen->add_option("--input,-i", human_data, "Human corpus")->required();
  datagen->add_option("--output,-o", datagen_out, "Paired corpus output")->required();
  datagen->add_option("--log", log_out, "Generation log (JSONL)");
  datagen->add_flag("--stub", stub, "Use the offline deterministic provider");
  datagen->add_flag("--short-mode", short_mode, "Ask for output about as long as the input");
  datagen->add_option("--parallelism,-j", parallelism, "Concurrent generations");
  datagen->add_option("--endpoint", endpoint, "Chat completion URL");
  datagen->add_option("--model-name", model_name, "Provider model name");
  datagen->add_option("--api-key-env", api_key_env, "Environment variable holding the API key");
  datagen->add_option("--max-retries", max_retries, "Retries per request");
  datagen->add_option("--timeout", timeout, "Request timeout in seconds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << nlohmann::json{{"error", "invalid_argument"}, {"message", e.what()}}.dump() << '\n';
    return e.get_exit_code() == 0 ? 2 : e.get_exit_code();
  }

  const QuietScope quiet_scope(quiet);
  try {
    RunConfig config = config_path ? RunConfig::load(*config_path) : RunConfig{};
    if (seed) config.set_seed(*seed);

    if (train->parsed()) {
      override_with(train_data, config.paths.train_data);
      override_with(test_data, config.paths.test_data);
      override_with(model_out, config.paths.model_out);
      override_with(label_field, config.label_field);
      override_with(max_vocab, config.tokenizer.max_vocab);
      override_with(train_fraction, config.split.train_fraction);
      if (classifier) {
        config.classifier = ClassifierSpec::defaults(kind_from_name(*classifier), config.classifier.seed);
      }
      const auto result = cmd_train(config);
      if (!quiet) out << result.summary.dump(1) << '\n';
    } else if (evaluate->parsed()) {
      const auto result = cmd_evaluate(eval_model, eval_data, report_out, eval_label.value_or(config.label_field));
      if (!quiet || report_out.empty()) out << result.report_json.dump(1) << '\n';
    } else if (predict->parsed()) {
      PredictInput input;
      input.text = predict_text;
      if (predict_file) input.file = *predict_file;
      for (const auto& line : cmd_predict(predict_model, input, predict_batch)) out << line.dump() << '\n';
    } else if (explain_cmd->parsed()) {
      ExplanationConfig cfg = config.explanation;
      override_with(top_k, cfg.top_k);
      override_with(num_samples, cfg.num_samples);
      override_with(kernel_width, cfg.kernel_width);
      override_with(ridge, cfg.ridge_penalty);
      override_with(explain_batch, cfg.batch_size);
      const auto doc = cmd_explain(explain_model, explain_text, cfg, {explain_out, svg_out});
      if (explain_out.empty()) out << doc.dump(1) << '\n';
    } else if (datagen->parsed()) {
      DatagenOptions options;
      options.human_data = human_data;
      options.output = datagen_out;
      options.log_out = log_out;
      options.stub = stub;
      options.stub_seed = seed.value_or(0);
      options.protocol = config.protocol;
      options.protocol.short_mode = options.protocol.short_mode || short_mode;
      options.parallelism = parallelism;
      options.provider = config.provider;
      if (endpoint || model_name || api_key_env || max_retries || timeout) {
        if (!options.provider) options.provider = LlmProviderConfig{};
        override_with(endpoint, options.provider->endpoint_url);
        override_with(model_name, options.provider->model_name);
        override_with(api_key_env, options.provider->api_key_env_var);
        override_with(max_retries, options.provider->max_retries);
        override_with(timeout, options.provider->timeout_seconds);
      }
      const auto dataset = cmd_datagen(options);
      if (!quiet) {
        const auto counts = dataset.corpus.class_counts();
        out << nlohmann::json{{"documents", dataset.corpus.size()},
                              {"human", counts[0]},
                              {"ai", counts[1]},
                              {"warnings", dataset.warning_count},
                              {"output", datagen_out}}
                   .dump(1)
            << '\n';
      }
    }
  } catch (const std::exception& e) {
    err << error_json(e) << '\n';
    return 1;
  }
  return 0;
}

}  // namespace llmdetect
