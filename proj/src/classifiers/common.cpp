#include <cmath>
#include <string>

#include "llmdetect/classifiers.hpp"
#include "llmdetect/error.hpp"
#include "training_checks.hpp"

namespace llmdetect {

using nlohmann::json;

namespace {

constexpr std::string_view kKindNames[] = {"naive_bayes", "logistic_regression", "random_forest",
                                           "gradient_boosted_trees", "mlp"};

void require(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorKind::InvalidArgument, message);
}

std::string_view max_features_name(MaxFeaturesRule rule) {
  switch (rule) {
    case MaxFeaturesRule::Sqrt: return "sqrt";
    case MaxFeaturesRule::Log2: return "log2";
    case MaxFeaturesRule::All: return "all";
  }
  return "sqrt";
}

MaxFeaturesRule max_features_from_name(std::string_view name) {
  if (name == "sqrt") return MaxFeaturesRule::Sqrt;
  if (name == "log2") return MaxFeaturesRule::Log2;
  if (name == "all") return MaxFeaturesRule::All;
  throw Error(ErrorKind::InvalidArgument, "unknown max_features rule: " + std::string(name));
}

template <typename T>
void read_opt(const json& doc, const char* key, T& out) {
  if (const auto it = doc.find(key); it != doc.end()) out = it->get<T>();
}

json tree_to_json(const DecisionTree& tree) {
  json feature = json::array(), threshold = json::array(), left = json::array(),
       right = json::array(), value = json::array();
  for (const auto& n : tree.nodes) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    value.push_back(n.value);
  }
  return {{"feature", feature}, {"threshold", threshold}, {"left", left},
          {"right", right},     {"value", value}};
}

DecisionTree tree_from_json(const json& doc, std::size_t n_features) {
  const auto feature = doc.at("feature").get<std::vector<std::int32_t>>();
  const auto threshold = doc.at("threshold").get<std::vector<double>>();
  const auto left = doc.at("left").get<std::vector<std::int32_t>>();
  const auto right = doc.at("right").get<std::vector<std::int32_t>>();
  const auto value = doc.at("value").get<std::vector<double>>();
  const auto n = feature.size();
  if (n == 0 || threshold.size() != n || left.size() != n || right.size() != n || value.size() != n) {
    throw Error(ErrorKind::MalformedRecord, "inconsistent tree arrays");
  }
  DecisionTree tree;
  tree.nodes.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& node = tree.nodes[i];
    node = {feature[i], threshold[i], left[i], right[i], value[i]};
    if (!node.is_leaf()) {
      const auto self = static_cast<std::int32_t>(i);
      const bool ok = static_cast<std::size_t>(node.feature) < n_features && node.left > self &&
                      node.right > self && static_cast<std::size_t>(node.left) < n &&
                      static_cast<std::size_t>(node.right) < n;
      if (!ok) throw Error(ErrorKind::MalformedRecord, "tree node out of range");
    }
  }
  return tree;
}

json layer_to_json(const DenseLayer& layer) {
  return {{"fan_in", layer.fan_in},
          {"fan_out", layer.fan_out},
          {"activation", layer.activation == Activation::Relu ? "relu" : "logistic"},
          {"weights", layer.weights},
          {"bias", layer.bias}};
}

DenseLayer layer_from_json(const json& doc) {
  DenseLayer layer;
  layer.fan_in = doc.at("fan_in").get<std::size_t>();
  layer.fan_out = doc.at("fan_out").get<std::size_t>();
  layer.activation = doc.at("activation").get<std::string>() == "relu" ? Activation::Relu
                                                                      : Activation::Logistic;
  layer.weights = doc.at("weights").get<std::vector<double>>();
  layer.bias = doc.at("bias").get<std::vector<double>>();
  if (layer.weights.size() != layer.fan_in * layer.fan_out || layer.bias.size() != layer.fan_out) {
    throw Error(ErrorKind::MalformedRecord, "inconsistent layer shape");
  }
  return layer;
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

std::string_view kind_name(ClassifierKind kind) noexcept {
  return kKindNames[static_cast<std::size_t>(kind)];
}

ClassifierKind kind_from_name(std::string_view name) {
  for (std::size_t i = 0; i < std::size(kKindNames); ++i) {
    if (kKindNames[i] == name) return static_cast<ClassifierKind>(i);
  }
  if (name == "nb") return ClassifierKind::NaiveBayes;
  if (name == "lr") return ClassifierKind::LogisticRegression;
  if (name == "rf") return ClassifierKind::RandomForest;
  if (name == "gbt" || name == "xgboost") return ClassifierKind::GradientBoostedTrees;
  throw Error(ErrorKind::InvalidArgument, "unknown classifier kind: " + std::string(name));
}

void ClassifierSpec::validate() const {
  std::visit(overloaded{
                 [](const NaiveBayesParams& p) { require(p.alpha > 0.0, "alpha must be positive"); },
                 [](const LogisticRegressionParams& p) {
                   require(p.c > 0.0, "C must be positive");
                   require(p.max_iter >= 1, "max_iter must be at least 1");
                   require(p.tol > 0.0, "tol must be positive");
                   require(p.memory >= 1, "LBFGS memory must be at least 1");
                 },
                 [](const RandomForestParams& p) {
                   require(p.n_trees >= 1, "n_trees must be at least 1");
                   require(p.min_leaf >= 1, "min_leaf must be at least 1");
                   require(p.max_depth >= 0, "max_depth must be non-negative");
                 },
                 [](const BoostedTreesParams& p) {
                   require(p.learning_rate > 0.0, "learning rate must be positive");
                   require(p.lambda > 0.0, "lambda must be positive");
                   require(p.n_rounds >= 1, "n_rounds must be at least 1");
                   require(p.max_depth >= 0, "max_depth must be non-negative");
                   require(p.min_child_weight >= 0.0, "min_child_weight must be non-negative");
                 },
                 [](const MlpParams& p) {
                   require(!p.hidden.empty(), "MLP needs at least one hidden layer");
                   for (int h : p.hidden) require(h >= 1, "hidden layer sizes must be at least 1");
                   require(p.epochs >= 1, "epochs must be at least 1");
                   require(p.batch_size >= 1, "batch size must be at least 1");
                   require(p.learning_rate > 0.0, "learning rate must be positive");
                   require(p.weight_decay > 0.0, "weight decay must be positive");
                   require(p.beta1 > 0.0 && p.beta1 < 1.0, "beta1 must lie in (0, 1)");
                   require(p.beta2 > 0.0 && p.beta2 < 1.0, "beta2 must lie in (0, 1)");
                   require(p.epsilon > 0.0, "epsilon must be positive");
                 },
             },
             params);
}

ClassifierSpec ClassifierSpec::defaults(ClassifierKind kind, std::uint64_t seed) {
  ClassifierSpec spec;
  spec.seed = seed;
  switch (kind) {
    case ClassifierKind::NaiveBayes: spec.params = NaiveBayesParams{}; break;
    case ClassifierKind::LogisticRegression: spec.params = LogisticRegressionParams{}; break;
    case ClassifierKind::RandomForest: spec.params = RandomForestParams{}; break;
    case ClassifierKind::GradientBoostedTrees: spec.params = BoostedTreesParams{}; break;
    case ClassifierKind::Mlp: spec.params = MlpParams{}; break;
  }
  return spec;
}

json spec_to_json(const ClassifierSpec& spec) {
  json hp = std::visit(
      overloaded{
          [](const NaiveBayesParams& p) { return json{{"alpha", p.alpha}}; },
          [](const LogisticRegressionParams& p) {
            return json{{"C", p.c}, {"max_iter", p.max_iter}, {"tol", p.tol}, {"memory", p.memory}};
          },
          [](const RandomForestParams& p) {
            return json{{"n_trees", p.n_trees},
                        {"max_features", max_features_name(p.max_features)},
                        {"min_leaf", p.min_leaf},
                        {"max_depth", p.max_depth},
                        {"bootstrap", p.bootstrap}};
          },
          [](const BoostedTreesParams& p) {
            return json{{"learning_rate", p.learning_rate},
                        {"lambda", p.lambda},
                        {"n_rounds", p.n_rounds},
                        {"max_depth", p.max_depth},
                        {"min_child_weight", p.min_child_weight}};
          },
          [](const MlpParams& p) {
            return json{{"hidden", p.hidden},
                        {"epochs", p.epochs},
                        {"batch_size", p.batch_size},
                        {"learning_rate", p.learning_rate},
                        {"weight_decay", p.weight_decay},
                        {"beta1", p.beta1},
                        {"beta2", p.beta2},
                        {"epsilon", p.epsilon}};
          },
      },
      spec.params);
  return {{"kind", kind_name(spec.kind())}, {"seed", spec.seed}, {"hyperparameters", hp}};
}

ClassifierSpec spec_from_json(const json& doc) {
  try {
    auto spec = ClassifierSpec::defaults(kind_from_name(doc.at("kind").get<std::string>()));
    read_opt(doc, "seed", spec.seed);
    const json hp = doc.value("hyperparameters", json::object());
    std::visit(overloaded{
                   [&](NaiveBayesParams& p) { read_opt(hp, "alpha", p.alpha); },
                   [&](LogisticRegressionParams& p) {
                     read_opt(hp, "C", p.c);
                     read_opt(hp, "max_iter", p.max_iter);
                     read_opt(hp, "tol", p.tol);
                     read_opt(hp, "memory", p.memory);
                   },
                   [&](RandomForestParams& p) {
                     read_opt(hp, "n_trees", p.n_trees);
                     if (hp.contains("max_features")) {
                       p.max_features = max_features_from_name(hp.at("max_features").get<std::string>());
                     }
                     read_opt(hp, "min_leaf", p.min_leaf);
                     read_opt(hp, "max_depth", p.max_depth);
                     read_opt(hp, "bootstrap", p.bootstrap);
                   },
                   [&](BoostedTreesParams& p) {
                     read_opt(hp, "learning_rate", p.learning_rate);
                     read_opt(hp, "lambda", p.lambda);
                     read_opt(hp, "n_rounds", p.n_rounds);
                     read_opt(hp, "max_depth", p.max_depth);
                     read_opt(hp, "min_child_weight", p.min_child_weight);
                   },
                   [&](MlpParams& p) {
                     read_opt(hp, "hidden", p.hidden);
                     read_opt(hp, "epochs", p.epochs);
                     read_opt(hp, "batch_size", p.batch_size);
                     read_opt(hp, "learning_rate", p.learning_rate);
                     read_opt(hp, "weight_decay", p.weight_decay);
                     read_opt(hp, "beta1", p.beta1);
                     read_opt(hp, "beta2", p.beta2);
                     read_opt(hp, "epsilon", p.epsilon);
                   },
               },
               spec.params);
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("bad classifier spec: ") + e.what());
  }
}

double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double logloss_from_logit(double z, double y) noexcept {
  // softplus(z) - y z
  const double softplus = std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
  return softplus - y * z;
}

std::size_t resolve_max_features(MaxFeaturesRule rule, std::size_t n_features) noexcept {
  const double d = static_cast<double>(n_features);
  std::size_t m = n_features;
  if (rule == MaxFeaturesRule::Sqrt) m = static_cast<std::size_t>(std::sqrt(d));
  if (rule == MaxFeaturesRule::Log2) m = n_features > 0 ? static_cast<std::size_t>(std::log2(d)) : 0;
  return std::max<std::size_t>(m, 1);
}

double TrainedModel::p_ai(const SparseVector& x) const {
  return std::visit(
      overloaded{
          [&](const NaiveBayesModel& m) {
            const auto jll = m.joint_log_likelihood(x);
            return sigmoid(jll[1] - jll[0]);
          },
          [&](const LogisticRegressionModel& m) { return sigmoid(m.decision(x)); },
          [&](const RandomForestModel& m) {
            double sum = 0.0;
            for (const auto& tree : m.trees) sum += tree.leaf_for(x).value;
            return m.trees.empty() ? 0.5 : sum / static_cast<double>(m.trees.size());
          },
          [&](const BoostedTreesModel& m) { return sigmoid(m.logit(x)); },
          [&](const MlpModel& m) { return sigmoid(m.logit(x)); },
      },
      params_);
}

std::vector<ProbabilityPair> predict_proba(const TrainedModel& model, const FeatureMatrix& x) {
  if (x.n_cols != model.n_features()) {
    throw Error(ErrorKind::DimensionMismatch,
                "model expects " + std::to_string(model.n_features()) + " features, got " +
                    std::to_string(x.n_cols));
  }
  std::vector<ProbabilityPair> out;
  out.reserve(x.n_rows());
  for (const auto& row : x.rows) {
    if (row.extent() > x.n_cols) throw Error(ErrorKind::DimensionMismatch, "row wider than matrix");
    const double p = model.p_ai(row);
    out.push_back({1.0 - p, p});
  }
  return out;
}

std::vector<Label> predict_label(const TrainedModel& model, const FeatureMatrix& x) {
  std::vector<Label> out;
  for (const auto& pair : predict_proba(model, x)) out.push_back(label_for(pair.p_ai));
  return out;
}

TrainedModel fit_classifier(const FeatureMatrix& x, std::span<const Label> y,
                            const ClassifierSpec& spec) {
  spec.validate();
  TrainedModel model = std::visit(
      overloaded{
          [&](const NaiveBayesParams& p) { return fit_naive_bayes(x, y, p); },
          [&](const LogisticRegressionParams& p) { return fit_logistic_regression(x, y, p); },
          [&](const RandomForestParams& p) { return fit_random_forest(x, y, p, spec.seed); },
          [&](const BoostedTreesParams& p) { return fit_gradient_boosted_trees(x, y, p); },
          [&](const MlpParams& p) { return fit_mlp(x, y, p, spec.seed); },
      },
      spec.params);
  return TrainedModel(spec, model.params(), model.n_features(), model.summary());
}

json model_to_json(const TrainedModel& model) {
  json params = std::visit(
      overloaded{
          [](const NaiveBayesModel& m) {
            return json{{"alpha", m.alpha},
                        {"log_prior", m.log_prior},
                        {"log_likelihood", m.log_likelihood}};
          },
          [](const LogisticRegressionModel& m) {
            return json{{"weights", m.weights}, {"bias", m.bias}, {"C", m.c}};
          },
          [](const RandomForestModel& m) {
            json trees = json::array();
            for (const auto& t : m.trees) trees.push_back(tree_to_json(t));
            return json{{"trees", trees}};
          },
          [](const BoostedTreesModel& m) {
            json trees = json::array();
            for (const auto& t : m.trees) trees.push_back(tree_to_json(t));
            return json{{"learning_rate", m.learning_rate}, {"base_logit", m.base_logit},
                        {"trees", trees}};
          },
          [](const MlpModel& m) {
            json layers = json::array();
            for (const auto& l : m.layers) layers.push_back(layer_to_json(l));
            return json{{"layers", layers}};
          },
      },
      model.params());

  const auto& s = model.summary();
  json summary = {{"n_samples", s.n_samples},
                  {"class_counts", s.class_counts},
                  {"iterations", s.iterations},
                  {"converged", s.converged},
                  {"loss_history", s.loss_history}};
  summary["final_loss"] = s.final_loss ? json(*s.final_loss) : json(nullptr);

  return {{"kind", kind_name(model.kind())},
          {"spec", spec_to_json(model.spec())},
          {"n_features", model.n_features()},
          {"vocabulary_fingerprint", model.vocabulary_fingerprint()},
          {"summary", summary},
          {"params", params}};
}

TrainedModel model_from_json(const json& doc) {
  try {
    const auto spec = spec_from_json(doc.at("spec"));
    const auto kind = kind_from_name(doc.at("kind").get<std::string>());
    if (kind != spec.kind()) throw Error(ErrorKind::MalformedRecord, "model kind does not match spec");
    const auto n_features = doc.at("n_features").get<std::size_t>();
    const auto& p = doc.at("params");

    ModelParameters params;
    switch (kind) {
      case ClassifierKind::NaiveBayes: {
        NaiveBayesModel m;
        m.alpha = p.at("alpha").get<double>();
        m.log_prior = p.at("log_prior").get<std::array<double, 2>>();
        m.log_likelihood = p.at("log_likelihood").get<std::array<std::vector<double>, 2>>();
        if (m.log_likelihood[0].size() != n_features || m.log_likelihood[1].size() != n_features) {
          throw Error(ErrorKind::MalformedRecord, "naive Bayes table width mismatch");
        }
        params = std::move(m);
        break;
      }
      case ClassifierKind::LogisticRegression: {
        LogisticRegressionModel m;
        m.weights = p.at("weights").get<std::vector<double>>();
        m.bias = p.at("bias").get<double>();
        m.c = p.at("C").get<double>();
        if (m.weights.size() != n_features) {
          throw Error(ErrorKind::MalformedRecord, "logistic weight width mismatch");
        }
        params = std::move(m);
        break;
      }
      case ClassifierKind::RandomForest: {
        RandomForestModel m;
        for (const auto& t : p.at("trees")) m.trees.push_back(tree_from_json(t, n_features));
        params = std::move(m);
        break;
      }
      case ClassifierKind::GradientBoostedTrees: {
        BoostedTreesModel m;
        m.learning_rate = p.at("learning_rate").get<double>();
        m.base_logit = p.at("base_logit").get<double>();
        for (const auto& t : p.at("trees")) m.trees.push_back(tree_from_json(t, n_features));
        params = std::move(m);
        break;
      }
      case ClassifierKind::Mlp: {
        MlpModel m;
        for (const auto& l : p.at("layers")) m.layers.push_back(layer_from_json(l));
        if (m.layers.empty() || m.layers.front().fan_in != n_features ||
            m.layers.back().fan_out != 1) {
          throw Error(ErrorKind::MalformedRecord, "MLP shape mismatch");
        }
        for (std::size_t i = 1; i < m.layers.size(); ++i) {
          if (m.layers[i].fan_in != m.layers[i - 1].fan_out) {
            throw Error(ErrorKind::MalformedRecord, "MLP layer chain mismatch");
          }
        }
        params = std::move(m);
        break;
      }
    }

    TrainingSummary summary;
    if (const auto it = doc.find("summary"); it != doc.end()) {
      const auto& s = *it;
      summary.n_samples = s.value("n_samples", std::size_t{0});
      if (s.contains("class_counts")) {
        summary.class_counts = s.at("class_counts").get<std::array<std::size_t, 2>>();
      }
      summary.iterations = s.value("iterations", 0);
      summary.converged = s.value("converged", false);
      if (s.contains("loss_history")) {
        summary.loss_history = s.at("loss_history").get<std::vector<double>>();
      }
      if (s.contains("final_loss") && s.at("final_loss").is_number()) {
        summary.final_loss = s.at("final_loss").get<double>();
      }
    }

    TrainedModel model(spec, std::move(params), n_features, std::move(summary));
    model.set_vocabulary_fingerprint(doc.value("vocabulary_fingerprint", std::string{}));
    return model;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::MalformedRecord, std::string("bad model JSON: ") + e.what());
  }
}

namespace detail {

std::array<std::size_t, 2> check_training_data(const FeatureMatrix& x, std::span<const Label> y) {
  if (x.n_rows() != y.size()) {
    throw Error(ErrorKind::DimensionMismatch, std::to_string(x.n_rows()) + " rows but " +
                                                  std::to_string(y.size()) + " labels");
  }
  if (x.n_cols == 0) throw Error(ErrorKind::DimensionMismatch, "feature matrix has no columns");
  for (const auto& row : x.rows) {
    if (row.extent() > x.n_cols) throw Error(ErrorKind::DimensionMismatch, "row wider than matrix");
    for (const auto& e : row.entries()) {
      if (!std::isfinite(e.value)) throw Error(ErrorKind::NonFinite, "non-finite feature value");
    }
  }
  std::array<std::size_t, 2> counts{};
  for (Label l : y) ++counts[to_int(l)];
  if (counts[0] == 0 || counts[1] == 0) {
    throw Error(ErrorKind::SingleClass, "training data must contain both classes");
  }
  return counts;
}

}  // namespace detail

}  // namespace llmdetect
