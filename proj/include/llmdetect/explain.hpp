#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "llmdetect/pipeline.hpp"

namespace llmdetect {

/// Bag-of-words view of one instance: each distinct word once, in order of
/// first occurrence, with the token positions it covers.
struct InterpretableInstance {
  std::vector<std::string> tokens;
  std::vector<std::string> distinct_words;
  std::vector<std::vector<std::size_t>> positions;

  std::size_t n_words() const noexcept { return distinct_words.size(); }
};

struct PerturbationSample {
  std::vector<std::uint8_t> mask;  // 1 = word kept
  std::string text;
  double weight = 0.0;
  double p_ai = 0.0;
};

struct ExplanationConfig {
  std::size_t num_samples = 5000;
  std::size_t top_k = 10;
  double kernel_width = 25.0;
  double ridge_penalty = 1.0;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Attribution {
  std::string word;
  double weight = 0.0;  // > 0 pushes toward AI
};

struct Explanation {
  double p_human = 0.0;
  double p_ai = 0.0;
  std::vector<Attribution> attributions;  // |weight| descending
  double intercept = 0.0;
  double surrogate_r2 = 0.0;
};

struct Surrogate {
  std::vector<double> coefficients;  // one per distinct word
  double intercept = 0.0;
  double r2 = 0.0;
};

InterpretableInstance index_words(std::vector<std::string> tokens);

/// Sample 0 is the unperturbed instance. Every other sample draws k
/// uniformly from 1..d and removes a uniform k-subset of distinct words
/// (all occurrences). Masks and texts only.
std::vector<PerturbationSample> sample_perturbations(const InterpretableInstance& instance,
                                                     const ExplanationConfig& config);

/// exp(-(100 * cosine_distance(mask, ones))^2 / width^2). An all-zero
/// mask has distance 1.
double kernel_weight(std::span<const std::uint8_t> mask, double kernel_width);

/// Weighted ridge of p_ai on masks, intercept unpenalized.
Surrogate fit_surrogate(std::span<const PerturbationSample> samples, double ridge_penalty);

Explanation explain(const TextScorer& scorer, const TokenizerConfig& tokenizer,
                    std::string_view text, const ExplanationConfig& config);
Explanation explain(const DetectorPipeline& pipeline, std::string_view text,
                    const ExplanationConfig& config);

nlohmann::json explanation_to_json(const Explanation& explanation, const ExplanationConfig& config);

/// Horizontal signed bar chart, one <rect class="bar"> per attribution.
std::string explanation_to_svg(const Explanation& explanation);

}  // namespace llmdetect
