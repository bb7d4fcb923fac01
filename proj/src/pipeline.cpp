#include "llmdetect/pipeline.hpp"

#include <fstream>
#include <sstream>

#include "llmdetect/error.hpp"

namespace llmdetect {

void DetectorPipeline::verify() const {
  if (!vocabulary.fitted() || !vocabulary.idf_fitted()) {
    throw Error(ErrorKind::NotFitted, "pipeline vocabulary is not fitted");
  }
  if (model.vocabulary_fingerprint() != vocabulary.fingerprint()) {
    throw Error(ErrorKind::FingerprintMismatch,
                "model was trained against vocabulary " + model.vocabulary_fingerprint() +
                    ", pipeline has " + vocabulary.fingerprint());
  }
  if (model.n_features() != vocabulary.dimension()) {
    throw Error(ErrorKind::DimensionMismatch, "model width differs from vocabulary dimension");
  }
}

FeatureMatrix DetectorPipeline::features(std::span<const std::string> texts) const {
  return vocabulary.tfidf_matrix(texts);
}

std::vector<ProbabilityPair> DetectorPipeline::predict_proba(std::span<const std::string> texts) const {
  return llmdetect::predict_proba(model, features(texts));
}

std::vector<double> batched_predict(const TextScorer& scorer, std::span<const std::string> texts,
                                    std::size_t batch_size) {
  if (batch_size == 0) throw Error(ErrorKind::InvalidArgument, "batch_size must be positive");
  std::vector<double> out;
  out.reserve(texts.size());
  for (std::size_t start = 0; start < texts.size(); start += batch_size) {
    const auto batch = texts.subspan(start, std::min(batch_size, texts.size() - start));
    const auto scores = scorer(batch);
    if (scores.size() != batch.size()) {
      throw Error(ErrorKind::DimensionMismatch, "scorer returned the wrong number of scores");
    }
    out.insert(out.end(), scores.begin(), scores.end());
  }
  return out;
}

TextScorer make_scorer(const DetectorPipeline& pipeline) {
  return [&pipeline](std::span<const std::string> batch) {
    std::vector<double> out;
    out.reserve(batch.size());
    for (const auto& p : pipeline.predict_proba(batch)) out.push_back(p.p_ai);
    return out;
  };
}

std::vector<double> batched_predict(const DetectorPipeline& pipeline,
                                    std::span<const std::string> texts, std::size_t batch_size) {
  return batched_predict(make_scorer(pipeline), texts, batch_size);
}

nlohmann::json artifact_to_json(const ModelArtifact& artifact) {
  return {
      {"format", "llmdetect-model"},
      {"version", ModelArtifact::kVersion},
      {"training_fingerprint", artifact.training_fingerprint},
      {"vocabulary_fingerprint", artifact.pipeline.vocabulary.fingerprint()},
      {"vocabulary", artifact.pipeline.vocabulary.to_json()},
      {"model", model_to_json(artifact.pipeline.model)},
  };
}

ModelArtifact artifact_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("version")) {
    throw Error(ErrorKind::MalformedRecord, "model artifact has no version field");
  }
  const auto& version = doc.at("version");
  if (!version.is_number_integer() || version.get<int>() != ModelArtifact::kVersion) {
    throw Error(ErrorKind::UnsupportedVersion,
                "unsupported model artifact version " + version.dump());
  }
  ModelArtifact artifact;
  try {
    artifact.training_fingerprint = doc.value("training_fingerprint", std::string{});
    artifact.pipeline.vocabulary = FittedVocabulary::from_json(doc.at("vocabulary"));
    artifact.pipeline.model = model_from_json(doc.at("model"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedRecord, std::string("malformed model artifact: ") + e.what());
  }
  const auto stored = doc.value("vocabulary_fingerprint", std::string{});
  if (stored != artifact.pipeline.vocabulary.fingerprint()) {
    throw Error(ErrorKind::FingerprintMismatch, "vocabulary does not match its stored fingerprint");
  }
  artifact.pipeline.verify();
  return artifact;
}

void save_artifact(const ModelArtifact& artifact, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << artifact_to_json(artifact).dump(1) << '\n';
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

ModelArtifact load_artifact(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::FileNotFound, "cannot open " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::MalformedRecord, path.string() + ": " + e.what());
  }
  return artifact_from_json(doc);
}

}  // namespace llmdetect
