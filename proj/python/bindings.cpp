#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "llmdetect/cli.hpp"
#include "llmdetect/error.hpp"

namespace py = pybind11;
using namespace llmdetect;

namespace {

py::object to_python(const nlohmann::json& doc) {
  return py::module_::import("json").attr("loads")(
      doc.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace));
}

nlohmann::json from_python(const py::object& obj) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

std::vector<Label> labels_from(const std::vector<int>& ints) {
  std::vector<Label> out;
  out.reserve(ints.size());
  for (int v : ints) out.push_back(label_from_int(v));
  return out;
}

ExplanationConfig explanation_config(std::size_t num_samples, std::size_t top_k, double kernel_width,
                                     double ridge, std::size_t batch_size, std::uint64_t seed) {
  ExplanationConfig cfg;
  cfg.num_samples = num_samples;
  cfg.top_k = top_k;
  cfg.kernel_width = kernel_width;
  cfg.ridge_penalty = ridge;
  cfg.batch_size = batch_size;
  cfg.seed = seed;
  return cfg;
}

// In-memory detector built from texts or loaded from an artifact.
class Detector {
 public:
  explicit Detector(ModelArtifact artifact) : artifact_(std::move(artifact)) {}

  static Detector load(const std::filesystem::path& path) { return Detector(load_artifact(path)); }

  static Detector fit(const std::vector<std::string>& texts, const std::vector<int>& labels,
                      const std::string& classifier, std::uint64_t seed, std::size_t max_vocab) {
    if (texts.size() != labels.size()) {
      throw Error(ErrorKind::DimensionMismatch, "texts and labels differ in length");
    }
    Corpus corpus;
    for (std::size_t i = 0; i < texts.size(); ++i) {
      corpus.documents.push_back({std::to_string(i), clean_text(texts[i]), label_from_int(labels[i]), {}});
    }
    TokenizerConfig tokenizer;
    tokenizer.max_vocab = max_vocab;
    const auto spec = ClassifierSpec::defaults(kind_from_name(classifier), seed);
    ModelArtifact artifact;
    artifact.pipeline.vocabulary = fit_vocabulary(tokenizer, corpus);
    const auto x = artifact.pipeline.vocabulary.tfidf_matrix(corpus.texts());
    artifact.pipeline.model = fit_classifier(x, corpus.labels(), spec);
    artifact.pipeline.model.set_vocabulary_fingerprint(artifact.pipeline.vocabulary.fingerprint());
    artifact.training_fingerprint = training_fingerprint(corpus, tokenizer, spec);
    return Detector(std::move(artifact));
  }

  std::vector<double> predict_proba(const std::vector<std::string>& texts, std::size_t batch_size) const {
    return batched_predict(artifact_.pipeline, texts, batch_size);
  }

  py::object explain_text(const std::string& text, const ExplanationConfig& cfg) const {
    return to_python(explanation_to_json(explain(artifact_.pipeline, text, cfg), cfg));
  }

  void save(const std::filesystem::path& path) const { save_artifact(artifact_, path); }

  std::string classifier() const { return std::string(kind_name(artifact_.pipeline.model.kind())); }
  std::size_t vocabulary_size() const { return artifact_.pipeline.vocabulary.size(); }
  const std::string& training_fingerprint_value() const { return artifact_.training_fingerprint; }

 private:
  ModelArtifact artifact_;
};

}  // namespace

PYBIND11_MODULE(_llmdetect, m) {
  m.doc() = "Human-vs-LLM text detectors: TF-IDF pipeline, classifiers, metrics, LIME, datagen";

  static py::exception<Error> error_type(m, "LlmdetectError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetString(error_type.ptr(), (std::string(error_kind_name(e.kind())) + ": " + e.what()).c_str());
    }
  });

  m.def(
      "tokenize",
      [](const std::string& text, bool lowercase) {
        TokenizerConfig cfg;
        cfg.lowercase = lowercase;
        return tokenize(cfg, text);
      },
      py::arg("text"), py::arg("lowercase") = true);
  m.def("clean_text", [](const std::string& s) { return clean_text(s); }, py::arg("text"));

  py::class_<Detector>(m, "Detector")
      .def_static("load", &Detector::load, py::arg("path"))
      .def_static("fit", &Detector::fit, py::arg("texts"), py::arg("labels"),
                  py::arg("classifier") = "nb", py::arg("seed") = 0, py::arg("max_vocab") = 5000)
      .def("predict_proba", &Detector::predict_proba, py::arg("texts"), py::arg("batch_size") = 32,
           "p_ai for each text")
      .def(
          "explain",
          [](const Detector& d, const std::string& text, std::size_t num_samples, std::size_t top_k,
             double kernel_width, double ridge, std::size_t batch_size, std::uint64_t seed) {
            return d.explain_text(text, explanation_config(num_samples, top_k, kernel_width, ridge,
                                                           batch_size, seed));
          },
          py::arg("text"), py::arg("num_samples") = 5000, py::arg("top_k") = 10,
          py::arg("kernel_width") = 25.0, py::arg("ridge") = 1.0, py::arg("batch_size") = 32,
          py::arg("seed") = 0)
      .def("save", &Detector::save, py::arg("path"))
      .def_property_readonly("classifier", &Detector::classifier)
      .def_property_readonly("vocabulary_size", &Detector::vocabulary_size)
      .def_property_readonly("training_fingerprint", &Detector::training_fingerprint_value);

  m.def(
      "evaluate",
      [](const std::vector<double>& p_ai, const std::vector<int>& labels) {
        return to_python(report_to_json(evaluate_scores(p_ai, labels_from(labels))));
      },
      py::arg("p_ai"), py::arg("labels"), "Report with Accuracy, F1-score, FPR, FNR, TNR, TPR and auc");
  m.def(
      "roc_curve",
      [](const std::vector<double>& scores, const std::vector<int>& labels) {
        const auto roc = roc_curve(scores, labels_from(labels));
        std::vector<std::tuple<double, double, double>> points;
        for (const auto& p : roc.points) points.emplace_back(p.x, p.y, p.threshold);
        return py::make_tuple(points, roc.auc);
      },
      py::arg("scores"), py::arg("labels"), "([(fpr, tpr, threshold)], auc)");
  m.def(
      "det_curve",
      [](const std::vector<double>& scores, const std::vector<int>& labels) {
        std::vector<std::tuple<double, double, double>> points;
        for (const auto& p : det_curve(scores, labels_from(labels))) points.emplace_back(p.x, p.y, p.threshold);
        return points;
      },
      py::arg("scores"), py::arg("labels"));
  m.def("probit", &probit, py::arg("p"));

  m.def(
      "train",
      [](const py::object& config) { return to_python(cmd_train(RunConfig::from_json(from_python(config))).summary); },
      py::arg("config"), "Runs the train command from a run-config dict");
  m.def(
      "generate_paired_stub",
      [](const std::vector<std::string>& texts, std::uint64_t seed, bool short_mode) {
        Corpus humans;
        for (std::size_t i = 0; i < texts.size(); ++i) {
          humans.documents.push_back({std::to_string(i), texts[i], Label::Human, {}});
        }
        PromptProtocol protocol;
        protocol.short_mode = short_mode;
        StubProvider stub(seed);
        const auto dataset = build_paired_dataset(humans, stub, protocol);
        std::vector<std::tuple<std::string, std::string, int>> docs;
        for (const auto& d : dataset.corpus.documents) docs.emplace_back(d.id, d.text, to_int(d.label));
        return docs;
      },
      py::arg("texts"), py::arg("seed") = 0, py::arg("short_mode") = false,
      "Paired corpus [(id, text, label)] from the offline stub provider");
}
