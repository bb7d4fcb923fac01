#include <cmath>

#include "llmdetect/classifiers.hpp"
#include "llmdetect/error.hpp"
#include "training_checks.hpp"

namespace llmdetect {

std::array<double, 2> NaiveBayesModel::joint_log_likelihood(const SparseVector& x) const {
  std::array<double, 2> out = log_prior;
  for (int c = 0; c < 2; ++c) out[c] += x.dot(log_likelihood[c]);
  return out;
}

// Multinomial event model over (possibly fractional) feature mass:
//   theta_{c,j} = ln((N_cj + alpha) / (N_c + alpha * d)).
TrainedModel fit_naive_bayes(const FeatureMatrix& x, std::span<const Label> y,
                             const NaiveBayesParams& params) {
  if (!(params.alpha > 0.0)) throw Error(ErrorKind::InvalidArgument, "alpha must be positive");
  const auto class_counts = detail::check_training_data(x, y);
  const std::size_t d = x.n_cols;

  std::array<std::vector<double>, 2> mass{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  for (std::size_t i = 0; i < x.n_rows(); ++i) {
    auto& m = mass[to_int(y[i])];
    for (const auto& e : x.rows[i].entries()) {
      if (e.value < 0.0) {
        throw Error(ErrorKind::InvalidArgument, "naive Bayes needs non-negative features");
      }
      m[e.index] += e.value;
    }
  }

  NaiveBayesModel model;
  model.alpha = params.alpha;
  const double n = static_cast<double>(x.n_rows());
  for (int c = 0; c < 2; ++c) {
    model.log_prior[c] = std::log(static_cast<double>(class_counts[c]) / n);
    double total = 0.0;
    for (double v : mass[c]) total += v;
    const double denom = std::log(total + params.alpha * static_cast<double>(d));
    model.log_likelihood[c].resize(d);
    for (std::size_t j = 0; j < d; ++j) {
      model.log_likelihood[c][j] = std::log(mass[c][j] + params.alpha) - denom;
    }
  }

  TrainingSummary summary;
  summary.n_samples = x.n_rows();
  summary.class_counts = class_counts;
  summary.converged = true;
  double loss = 0.0;
  for (std::size_t i = 0; i < x.n_rows(); ++i) {
    const auto jll = model.joint_log_likelihood(x.rows[i]);
    loss += logloss_from_logit(jll[1] - jll[0], to_double(y[i]));
  }
  summary.final_loss = loss / n;

  return TrainedModel(ClassifierSpec{params, 0}, std::move(model), d, std::move(summary));
}

}  // namespace llmdetect
