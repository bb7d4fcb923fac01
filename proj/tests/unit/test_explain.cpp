#include <doctest.h>

#include <cmath>
#include <array>
#include <map>
#include <set>

#include "llmdetect/error.hpp"
#include "llmdetect/explain.hpp"
#include "test_support.hpp"

using namespace llmdetect;
using doctest::Approx;

namespace {

// p_ai = base + sum of coefficients of the words present in the text.
TextScorer affine_box(std::map<std::string, double> coef, double base) {
  return [coef = std::move(coef), base](std::span<const std::string> texts) {
    std::vector<double> out;
    for (const auto& t : texts) {
      std::set<std::string> present;
      for (auto& w : tokenize(TokenizerConfig{}, t)) present.insert(w);
      double p = base;
      for (const auto& w : present) {
        if (auto it = coef.find(w); it != coef.end()) p += it->second;
      }
      out.push_back(p);
    }
    return out;
  };
}

ExplanationConfig small_config(std::uint64_t seed = 0) {
  ExplanationConfig cfg;
  cfg.num_samples = 500;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("index_words groups repeated tokens") {
  const auto inst = index_words({"a", "b", "a", "c"});
  CHECK(inst.distinct_words == std::vector<std::string>{"a", "b", "c"});
  CHECK(inst.positions[0] == std::vector<std::size_t>{0, 2});
  CHECK(inst.n_words() == 3);
  CHECK_THROWS_AS(index_words({}), Error);
}

TEST_CASE("perturbations: first sample intact, removals drop every occurrence") {
  const auto inst = index_words({"a", "b", "a"});
  ExplanationConfig cfg = small_config();
  cfg.num_samples = 200;
  const auto samples = sample_perturbations(inst, cfg);
  REQUIRE(samples.size() == 200);
  CHECK(samples[0].mask == std::vector<std::uint8_t>{1, 1});
  CHECK(samples[0].text == "a b a");
  CHECK(samples[0].weight == 1.0);
  bool saw_b_only = false;
  for (std::size_t s = 1; s < samples.size(); ++s) {
    const auto& m = samples[s].mask;
    CHECK(m[0] + m[1] < 2);  // at least one word removed
    if (m[0] == 0 && m[1] == 1) {
      CHECK(samples[s].text == "b");
      saw_b_only = true;
    }
    if (m[0] == 0 && m[1] == 0) CHECK(samples[s].text.empty());
  }
  CHECK(saw_b_only);

  const auto single = sample_perturbations(index_words({"x", "x"}), cfg);
  for (std::size_t s = 1; s < single.size(); ++s) CHECK(single[s].text.empty());
}

TEST_CASE("removal counts are uniform over 1..d") {
  const auto inst = index_words({"a", "b", "c", "d"});
  ExplanationConfig cfg = small_config(5);
  cfg.num_samples = 8001;
  const auto samples = sample_perturbations(inst, cfg);
  std::array<int, 5> removed{};
  for (std::size_t s = 1; s < samples.size(); ++s) {
    int r = 0;
    for (auto v : samples[s].mask) r += v == 0;
    ++removed[static_cast<std::size_t>(r)];
  }
  CHECK(removed[0] == 0);
  for (int k = 1; k <= 4; ++k) CHECK(std::abs(removed[static_cast<std::size_t>(k)] - 2000) < 200);
}

TEST_CASE("kernel weight values") {
  const std::vector<std::uint8_t> all = {1, 1, 1, 1};
  CHECK(kernel_weight(all, 25.0) == 1.0);
  // kept 1 of 4: distance 1/2, scaled 50, exp(-2500/625) = exp(-4)
  const std::vector<std::uint8_t> one = {0, 1, 0, 0};
  CHECK(kernel_weight(one, 25.0) == Approx(std::exp(-4.0)).epsilon(1e-12));
  CHECK(kernel_weight(one, 25.0) == Approx(0.0183).epsilon(1e-3));
  const std::vector<std::uint8_t> none = {0, 0};
  CHECK(kernel_weight(none, 25.0) == Approx(std::exp(-16.0)).epsilon(1e-12));
  CHECK_THROWS_AS(kernel_weight({}, 25.0), Error);
}

TEST_CASE("surrogate recovers an affine black box") {
  const auto scorer = affine_box({{"good", 0.5}, {"bad", -0.3}}, 0.2);
  ExplanationConfig cfg = small_config(3);
  cfg.ridge_penalty = 1e-9;
  const auto e = explain(scorer, TokenizerConfig{}, "good bad filler", cfg);
  REQUIRE(e.attributions.size() == 3);
  CHECK(e.attributions[0].word == "good");
  CHECK(e.attributions[0].weight == Approx(0.5).epsilon(1e-6));
  CHECK(e.attributions[1].word == "bad");
  CHECK(e.attributions[1].weight == Approx(-0.3).epsilon(1e-6));
  CHECK(std::abs(e.attributions[2].weight) < 1e-6);
  CHECK(e.intercept == Approx(0.2).epsilon(1e-6));
  CHECK(e.surrogate_r2 == Approx(1.0).epsilon(1e-9));
  CHECK(e.p_ai == Approx(0.4));
  CHECK(e.p_human == Approx(0.6));
}

TEST_CASE("constant black box has zero coefficients") {
  const auto scorer = affine_box({}, 0.7);
  const auto e = explain(scorer, TokenizerConfig{}, "one two three four", small_config());
  for (const auto& a : e.attributions) CHECK(std::abs(a.weight) < 1e-6);
  CHECK(e.intercept == Approx(0.7));
  CHECK(e.surrogate_r2 == 1.0);
}

TEST_CASE("duplicating every sample leaves the surrogate unchanged") {
  const auto inst = index_words({"p", "q", "r"});
  auto samples = sample_perturbations(inst, small_config(9));
  const auto scorer = affine_box({{"p", 0.1}, {"q", -0.2}, {"r", 0.05}}, 0.3);
  for (auto& s : samples) s.p_ai = scorer(std::span<const std::string>(&s.text, 1))[0] + 0.01 * (s.mask[0] ? 1 : -1) * s.mask[1];
  const auto once = fit_surrogate(samples, 0.0);
  auto doubled = samples;
  doubled.insert(doubled.end(), samples.begin(), samples.end());
  const auto twice = fit_surrogate(doubled, 0.0);
  for (std::size_t j = 0; j < 3; ++j) CHECK(twice.coefficients[j] == Approx(once.coefficients[j]).epsilon(1e-9));
  CHECK(twice.r2 == Approx(once.r2).epsilon(1e-9));
}

TEST_CASE("explanations are deterministic per seed and truncated to top_k") {
  const auto scorer = affine_box({{"a", 0.1}, {"b", 0.2}, {"c", -0.3}, {"d", 0.05}}, 0.1);
  auto cfg = small_config(4);
  cfg.top_k = 2;
  const auto e1 = explain(scorer, TokenizerConfig{}, "a b c d e", cfg);
  const auto e2 = explain(scorer, TokenizerConfig{}, "a b c d e", cfg);
  CHECK(explanation_to_json(e1, cfg).dump() == explanation_to_json(e2, cfg).dump());
  REQUIRE(e1.attributions.size() == 2);
  CHECK(e1.attributions[0].word == "c");
  CHECK(e1.attributions[1].word == "b");

  cfg.num_samples = 1;
  CHECK_THROWS_AS(explain(scorer, TokenizerConfig{}, "a b", cfg), Error);
  CHECK_THROWS_AS(explain(scorer, TokenizerConfig{}, "  ", small_config()), Error);
}

TEST_CASE("Naive Bayes pipeline attributes a class-specific word to its class") {
  const auto corpus = testing::synthetic_corpus(200, 2, 0.7);
  DetectorPipeline p;
  p.vocabulary = fit_vocabulary(TokenizerConfig{}, corpus);
  p.model = fit_classifier(p.vocabulary.tfidf_matrix(corpus.texts()), corpus.labels(),
                           ClassifierSpec::defaults(ClassifierKind::NaiveBayes));
  p.model.set_vocabulary_fingerprint(p.vocabulary.fingerprint());
  auto cfg = small_config(1);
  cfg.top_k = 20;
  const auto e = explain(p, "honestly the furthermore dog comprehensive", cfg);
  std::map<std::string, double> w;
  for (const auto& a : e.attributions) w[a.word] = a.weight;
  CHECK(w.at("furthermore") > 0.0);
  CHECK(w.at("comprehensive") > 0.0);
  CHECK(w.at("honestly") < 0.0);
  CHECK(w.at("dog") < 0.0);

  const auto doc = explanation_to_json(e, cfg);
  CHECK(doc["attributions"].size() == 5);
  CHECK(doc["config"]["num_samples"] == 500);
  const auto svg = explanation_to_svg(e);
  std::size_t bars = 0;
  for (auto pos = svg.find("class=\"bar\""); pos != std::string::npos; pos = svg.find("class=\"bar\"", pos + 1)) ++bars;
  CHECK(bars == e.attributions.size());
  CHECK(svg.rfind("<svg", 0) == 0);
}

TEST_CASE("SVG escapes markup in words") {
  Explanation e;
  e.attributions = {{"<b>&", 0.4}, {"q", -0.2}};
  const auto svg = explanation_to_svg(e);
  CHECK(svg.find("&lt;b&gt;&amp;") != std::string::npos);
  CHECK(svg.find("<b>") == std::string::npos);
}
