#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "llmdetect/classifiers.hpp"
#include "llmdetect/text_pipeline.hpp"

namespace llmdetect {

/// Fitted vocabulary + classifier: text in, probabilities out.
struct DetectorPipeline {
  FittedVocabulary vocabulary;
  TrainedModel model;

  /// Throws FingerprintMismatch unless the model was trained against this
  /// vocabulary, DimensionMismatch if the widths disagree.
  void verify() const;

  FeatureMatrix features(std::span<const std::string> texts) const;
  std::vector<ProbabilityPair> predict_proba(std::span<const std::string> texts) const;
};

/// Scores texts in consecutive batches of at most batch_size through
/// tokenize -> counts -> TF-IDF -> predict_proba. Returns p_ai per text.
std::vector<double> batched_predict(const DetectorPipeline& pipeline,
                                    std::span<const std::string> texts, std::size_t batch_size);

/// Any black box mapping a batch of texts to p_ai values.
using TextScorer = std::function<std::vector<double>(std::span<const std::string>)>;

std::vector<double> batched_predict(const TextScorer& scorer, std::span<const std::string> texts,
                                    std::size_t batch_size);

TextScorer make_scorer(const DetectorPipeline& pipeline);

/// Persistent train output.
struct ModelArtifact {
  static constexpr int kVersion = 1;

  DetectorPipeline pipeline;
  std::string training_fingerprint;  // hash of training corpus + run settings
};

nlohmann::json artifact_to_json(const ModelArtifact& artifact);
/// Verifies version and vocabulary fingerprint before returning.
ModelArtifact artifact_from_json(const nlohmann::json& doc);

void save_artifact(const ModelArtifact& artifact, const std::filesystem::path& path);
ModelArtifact load_artifact(const std::filesystem::path& path);

}  // namespace llmdetect
