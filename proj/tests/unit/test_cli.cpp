#include <doctest.h>

#include <sstream>

#include "llmdetect/cli.hpp"
#include "llmdetect/error.hpp"
#include "test_support.hpp"

using namespace llmdetect;
using testing::TempDir;

namespace {

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "llmdetect");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string write_corpus_file(const TempDir& dir, const std::string& name, std::size_t n, std::uint64_t seed) {
  const auto path = dir / name;
  write_corpus(testing::synthetic_corpus(n, seed), path, format_from_path(path));
  return path.string();
}

}  // namespace

TEST_CASE("train, evaluate, predict and explain end to end") {
  TempDir dir;
  const auto data = write_corpus_file(dir, "train.jsonl", 120, 1);
  const auto test = write_corpus_file(dir, "test.csv", 40, 2);
  const auto model = (dir / "model.json").string();

  auto r = run({"train", "--data", data, "--model-out", model, "-c", "lr", "--seed", "3"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto summary = nlohmann::json::parse(r.out);
  CHECK(summary["classifier"] == "logistic_regression");
  CHECK(summary["n_train"] == 96);
  CHECK(summary["n_held_out"] == 24);
  CHECK(summary["training_fingerprint"].get<std::string>().size() == 16);

  const auto report = (dir / "report.json").string();
  r = run({"evaluate", "-m", model, "--data", test, "-o", report});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto doc = nlohmann::json::parse(testing::read_file(report));
  CHECK(doc["metrics"]["Accuracy"].get<double>() > 0.8);
  CHECK(doc["n_samples"] == 40);
  CHECK(std::filesystem::exists(dir / "report.roc.csv"));
  CHECK(std::filesystem::exists(dir / "report.det.csv"));

  r = run({"predict", "--model", model, "--text", "furthermore comprehensive insights"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto line = nlohmann::json::parse(r.out);
  CHECK(line["label"] == 1);
  CHECK(line["p_ai"].get<double>() + line["p_human"].get<double>() == doctest::Approx(1.0));

  testing::write_file(dir / "texts.txt", "yeah my dog went\nfurthermore the landscape\n");
  r = run({"predict", "--model", model, "--file", (dir / "texts.txt").string(), "--batch-size", "1"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 2);

  const auto svg = (dir / "e.svg").string();
  r = run({"explain", "-m", model, "--text", "honestly furthermore dog", "--num-samples", "300", "--svg", svg});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto expl = nlohmann::json::parse(r.out);
  CHECK(expl["attributions"].size() == 3);
  CHECK(testing::read_file(svg).find("<svg") == 0);
}

TEST_CASE("training is byte-reproducible and explanations are too") {
  TempDir dir;
  const auto data = write_corpus_file(dir, "train.jsonl", 80, 4);
  for (const char* kind : {"nb", "rf", "gbt", "mlp"}) {
    CAPTURE(kind);
    const auto a = (dir / "a.json").string(), b = (dir / "b.json").string();
    REQUIRE(run({"train", "--data", data, "-o", a, "-c", kind, "--seed", "9", "-q"}).code == 0);
    REQUIRE(run({"train", "--data", data, "-o", b, "-c", kind, "--seed", "9", "-q"}).code == 0);
    CHECK(testing::read_file(a) == testing::read_file(b));
  }
  const auto model = (dir / "a.json").string();
  const auto e1 = run({"explain", "-m", model, "--text", "yeah overall crucial", "--num-samples", "200", "--seed", "5"});
  const auto e2 = run({"explain", "-m", model, "--text", "yeah overall crucial", "--num-samples", "200", "--seed", "5"});
  CHECK(e1.out == e2.out);
}

TEST_CASE("vocabulary is fit on the training partition only") {
  TempDir dir;
  const auto data = write_corpus_file(dir, "train.jsonl", 60, 6);
  RunConfig cfg;
  cfg.paths.train_data = data;
  cfg.set_seed(2);
  const auto result = cmd_train(cfg);
  const auto corpus = deduplicate(clean_corpus(load_corpus(data, CorpusFormat::Jsonl)));
  const auto split = split_train_test(corpus, cfg.split);
  const auto& vocab = result.artifact.pipeline.vocabulary;
  // Every synthetic text ends with a unique marker token "n<i>".
  for (const auto& d : split.test.documents) {
    const auto tokens = tokenize(vocab.config(), d.text);
    CHECK(vocab.index_of(tokens.back()) == FittedVocabulary::kOovIndex);
  }
  for (const auto& d : split.train.documents) {
    const auto tokens = tokenize(vocab.config(), d.text);
    CHECK(vocab.index_of(tokens.back()) != FittedVocabulary::kOovIndex);
  }
}

TEST_CASE("config file drives training; flags override it") {
  TempDir dir;
  const auto data = write_corpus_file(dir, "train.jsonl", 60, 7);
  RunConfig cfg;
  cfg.paths.train_data = data;
  cfg.paths.model_out = (dir / "from_config.json").string();
  cfg.classifier = ClassifierSpec::defaults(ClassifierKind::GradientBoostedTrees);
  std::get<BoostedTreesParams>(cfg.classifier.params).n_rounds = 5;
  testing::write_file(dir / "run.json", cfg.to_json().dump());
  CHECK(RunConfig::from_json(cfg.to_json()).to_json() == cfg.to_json());

  auto r = run({"--config", (dir / "run.json").string(), "train"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(nlohmann::json::parse(r.out)["classifier"] == "gradient_boosted_trees");
  CHECK(std::filesystem::exists(dir / "from_config.json"));

  r = run({"train", "--config", (dir / "run.json").string(), "--max-vocab", "7", "-q"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(r.out.empty());
  CHECK(load_artifact(dir / "from_config.json").pipeline.vocabulary.size() == 7);

  auto with_key = cfg.to_json();
  with_key["provider"] = {{"endpoint_url", "https://x/v1"}, {"api_key", "secret"}};
  CHECK_THROWS_AS(RunConfig::from_json(with_key), Error);
}

TEST_CASE("datagen with the stub provider") {
  TempDir dir;
  Corpus humans;
  for (int i = 0; i < 4; ++i) {
    humans.documents.push_back({"p" + std::to_string(i), "human paragraph number " + std::to_string(i), Label::Human, {}});
  }
  write_corpus(humans, dir / "humans.jsonl", CorpusFormat::Jsonl);
  const auto out = (dir / "paired.jsonl").string();
  const auto log = (dir / "log.jsonl").string();
  auto r = run({"datagen", "-i", (dir / "humans.jsonl").string(), "-o", out, "--log", log, "--stub", "--seed", "3", "-j", "2"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto paired = load_corpus(out, CorpusFormat::Jsonl);
  CHECK(paired.size() == 8);
  CHECK(paired.documents[1].id == "p0-ai");
  CHECK(paired.documents[1].text.rfind("[ELAB] [SUM] human paragraph number 0", 0) == 0);
  const auto log_text = testing::read_file(log);
  CHECK(std::count(log_text.begin(), log_text.end(), '\n') == 4);
  CHECK(nlohmann::json::parse(log_text.substr(0, log_text.find('\n')))["provider"] == "stub:3");

  // The paired corpus trains directly.
  r = run({"train", "--data", out, "-o", (dir / "m.json").string(), "-q"});
  CHECK_MESSAGE(r.code == 0, r.err);
}

TEST_CASE("errors are structured and exit non-zero") {
  TempDir dir;
  auto r = run({"predict", "--model", (dir / "missing.json").string(), "--text", "x"});
  CHECK(r.code == 1);
  const auto err = nlohmann::json::parse(r.err);
  CHECK(err["error"] == "file_not_found");
  CHECK(err["message"].is_string());

  r = run({"train", "--data", (dir / "nothing.jsonl").string(), "-o", (dir / "m.json").string()});
  CHECK(r.code == 1);

  r = run({"bogus"});
  CHECK(r.code != 0);
  CHECK(nlohmann::json::parse(r.err)["error"] == "invalid_argument");

  r = run({"train", "--classifier", "svm", "--data", "x"});
  CHECK(r.code == 1);

  // Single-class evaluation data.
  const auto data = write_corpus_file(dir, "train.jsonl", 40, 1);
  const auto model = (dir / "m.json").string();
  REQUIRE(run({"train", "--data", data, "-o", model, "-q"}).code == 0);
  Corpus one;
  one.documents.push_back({"a", "only human text", Label::Human, {}});
  one.documents.push_back({"b", "more human text", Label::Human, {}});
  write_corpus(one, dir / "one.jsonl", CorpusFormat::Jsonl);
  r = run({"evaluate", "-m", model, "--data", (dir / "one.jsonl").string()});
  CHECK(r.code == 1);
  CHECK(nlohmann::json::parse(r.err)["error"] == "single_class");

  r = run({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("train") != std::string::npos);
}
