#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

#include "llmdetect/corpus.hpp"
#include "llmdetect/sparse.hpp"

namespace llmdetect {

enum class ClassifierKind { NaiveBayes, LogisticRegression, RandomForest, GradientBoostedTrees, Mlp };

std::string_view kind_name(ClassifierKind kind) noexcept;
ClassifierKind kind_from_name(std::string_view name);

// ---------------------------------------------------------------------------
// Hyperparameters. Defaults follow the reference detector configuration where
// it gives a value and the usual library defaults elsewhere.

struct NaiveBayesParams {
  double alpha = 1.0;  // additive smoothing
};

struct LogisticRegressionParams {
  double c = 1.0;      // inverse L2 strength
  int max_iter = 100;  // LBFGS iteration cap
  double tol = 1e-5;   // gradient infinity-norm target
  int memory = 10;     // LBFGS history length
};

enum class MaxFeaturesRule { Sqrt, Log2, All };

struct RandomForestParams {
  int n_trees = 100;
  MaxFeaturesRule max_features = MaxFeaturesRule::Sqrt;
  int min_leaf = 1;
  int max_depth = 0;  // 0 = grow until pure
  bool bootstrap = true;
};

struct BoostedTreesParams {
  double learning_rate = 0.3;
  double lambda = 1.0;  // L2 penalty on leaf weights
  int n_rounds = 100;
  int max_depth = 6;    // 0 = a single leaf per round
  double min_child_weight = 1.0;
};

struct MlpParams {
  std::vector<int> hidden{100};
  int epochs = 200;
  int batch_size = 200;
  double learning_rate = 1e-3;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

using Hyperparameters = std::variant<NaiveBayesParams, LogisticRegressionParams,
                                     RandomForestParams, BoostedTreesParams, MlpParams>;

struct ClassifierSpec {
  Hyperparameters params;
  std::uint64_t seed = 0;

  ClassifierKind kind() const noexcept { return static_cast<ClassifierKind>(params.index()); }
  /// Rates/penalties must be positive, counts at least one.
  void validate() const;

  static ClassifierSpec defaults(ClassifierKind kind, std::uint64_t seed = 0);
};

nlohmann::json spec_to_json(const ClassifierSpec& spec);
/// Missing hyperparameter fields keep their defaults.
ClassifierSpec spec_from_json(const nlohmann::json& doc);

// ---------------------------------------------------------------------------
// Learned parameters.

struct NaiveBayesModel {
  std::array<double, 2> log_prior{};
  std::array<std::vector<double>, 2> log_likelihood;  // [class][feature]
  double alpha = 1.0;

  /// Unnormalized class scores: log-prior + sum_j x_j * theta_{c,j}.
  std::array<double, 2> joint_log_likelihood(const SparseVector& x) const;
};

struct LogisticRegressionModel {
  std::vector<double> weights;
  double bias = 0.0;
  double c = 1.0;

  double decision(const SparseVector& x) const;
};

/// Binary tree in a flat array; node 0 is the root. Internal nodes route
/// x[feature] <= threshold to the left child.
struct TreeNode {
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;  // forest: AI frequency at the leaf; boosting: leaf weight

  bool is_leaf() const noexcept { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;

  const TreeNode& leaf_for(const SparseVector& x) const;
  std::size_t depth() const;
  bool operator==(const DecisionTree&) const = default;
};

struct RandomForestModel {
  std::vector<DecisionTree> trees;
};

struct BoostedTreesModel {
  std::vector<DecisionTree> trees;
  double learning_rate = 0.3;
  double base_logit = 0.0;

  double logit(const SparseVector& x) const;
};

enum class Activation { Relu, Logistic };

/// Fully connected layer; weights are stored input-major, so the weight
/// from input j to output k sits at j * fan_out + k.
struct DenseLayer {
  std::size_t fan_in = 0;
  std::size_t fan_out = 0;
  std::vector<double> weights;
  std::vector<double> bias;
  Activation activation = Activation::Relu;
};

struct MlpModel {
  std::vector<DenseLayer> layers;

  /// Output-layer pre-activation for one input.
  double logit(const SparseVector& x) const;
  std::size_t parameter_count() const;
  /// Flattened parameters, layer by layer: weights, then bias.
  std::vector<double> flat_parameters() const;
  void set_flat_parameters(std::span<const double> flat);
};

using ModelParameters = std::variant<NaiveBayesModel, LogisticRegressionModel, RandomForestModel,
                                     BoostedTreesModel, MlpModel>;

struct TrainingSummary {
  std::size_t n_samples = 0;
  std::array<std::size_t, 2> class_counts{};
  std::optional<double> final_loss;  // mean training logloss where the model optimizes one
  int iterations = 0;
  bool converged = false;
  std::vector<double> loss_history;
};

class TrainedModel {
 public:
  TrainedModel() = default;
  TrainedModel(ClassifierSpec spec, ModelParameters params, std::size_t n_features,
               TrainingSummary summary = {})
      : spec_(std::move(spec)), params_(std::move(params)), n_features_(n_features),
        summary_(std::move(summary)) {}

  ClassifierKind kind() const noexcept { return static_cast<ClassifierKind>(params_.index()); }
  const ClassifierSpec& spec() const noexcept { return spec_; }
  const ModelParameters& params() const noexcept { return params_; }
  std::size_t n_features() const noexcept { return n_features_; }
  const TrainingSummary& summary() const noexcept { return summary_; }

  const std::string& vocabulary_fingerprint() const noexcept { return vocabulary_fingerprint_; }
  void set_vocabulary_fingerprint(std::string fp) { vocabulary_fingerprint_ = std::move(fp); }

  /// Probability of the AI class for one row.
  double p_ai(const SparseVector& x) const;

 private:
  ClassifierSpec spec_;
  ModelParameters params_;
  std::size_t n_features_ = 0;
  TrainingSummary summary_;
  std::string vocabulary_fingerprint_;
};

struct ProbabilityPair {
  double p_human = 0.5;
  double p_ai = 0.5;
};

// ---------------------------------------------------------------------------
// Training.

TrainedModel fit_naive_bayes(const FeatureMatrix& x, std::span<const Label> y,
                             const NaiveBayesParams& params = {});
TrainedModel fit_logistic_regression(const FeatureMatrix& x, std::span<const Label> y,
                                     const LogisticRegressionParams& params = {});
TrainedModel fit_random_forest(const FeatureMatrix& x, std::span<const Label> y,
                               const RandomForestParams& params = {}, std::uint64_t seed = 0);
TrainedModel fit_gradient_boosted_trees(const FeatureMatrix& x, std::span<const Label> y,
                                        const BoostedTreesParams& params = {});
TrainedModel fit_mlp(const FeatureMatrix& x, std::span<const Label> y, const MlpParams& params = {},
                     std::uint64_t seed = 0);

/// Dispatches on spec.kind().
TrainedModel fit_classifier(const FeatureMatrix& x, std::span<const Label> y,
                            const ClassifierSpec& spec);

// ---------------------------------------------------------------------------
// Prediction. Rows are scored independently.

std::vector<ProbabilityPair> predict_proba(const TrainedModel& model, const FeatureMatrix& x);
std::vector<Label> predict_label(const TrainedModel& model, const FeatureMatrix& x);

/// p_ai >= 0.5 is classified as AI.
inline Label label_for(double p_ai) noexcept { return p_ai >= 0.5 ? Label::Ai : Label::Human; }

// ---------------------------------------------------------------------------
// Serialization.

nlohmann::json model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const nlohmann::json& doc);

// ---------------------------------------------------------------------------
// Building blocks, exposed for verification.

double sigmoid(double z) noexcept;
/// -[y ln p + (1-y) ln(1-p)] with p = sigmoid(z), evaluated stably.
double logloss_from_logit(double z, double y) noexcept;

/// 1 - sum_c p_c^2 over weighted class counts.
double gini_impurity(double w_human, double w_ai) noexcept;

/// Newton-boosting gain of splitting a node into (GL, HL) | (GR, HR).
double split_gain(double g_left, double h_left, double g_right, double h_right,
                  double lambda) noexcept;
/// Optimal leaf weight -G / (H + lambda).
inline double leaf_weight(double g, double h, double lambda) noexcept { return -g / (h + lambda); }

/// Regularized logistic objective sum_i logloss + ||w||^2 / (2C); writes
/// the gradient (weights then bias) when requested.
double logistic_objective(const FeatureMatrix& x, std::span<const Label> y,
                          std::span<const double> weights, double bias, double c,
                          std::vector<double>* gradient = nullptr);

/// Mean logloss over `rows` plus weight_decay * ||W||^2 / 2 (biases
/// excluded). Writes the gradient in flat_parameters() order when requested.
double mlp_objective(const MlpModel& model, const FeatureMatrix& x, std::span<const Label> y,
                     std::span<const std::size_t> rows, double weight_decay,
                     std::vector<double>* gradient = nullptr);

/// Glorot-style symmetric uniform initialization from the seed.
MlpModel init_mlp(std::size_t n_features, std::span<const int> hidden, std::uint64_t seed);

/// Number of candidate features per forest split for a given width.
std::size_t resolve_max_features(MaxFeaturesRule rule, std::size_t n_features) noexcept;

}  // namespace llmdetect
