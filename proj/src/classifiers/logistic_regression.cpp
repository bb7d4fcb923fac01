#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>

#include "llmdetect/classifiers.hpp"
#include "llmdetect/error.hpp"
#include "training_checks.hpp"

namespace llmdetect {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

using Objective = std::function<double(std::span<const double>, std::vector<double>&)>;

struct LbfgsResult {
  int iterations = 0;
  bool converged = false;
  double value = 0.0;
};

// Limited-memory BFGS with the two-loop recursion and a backtracking
// Armijo line search. Stops when the gradient infinity-norm reaches tol.
LbfgsResult minimize_lbfgs(const Objective& objective, std::vector<double>& x, int memory,
                           int max_iter, double tol) {
  const std::size_t n = x.size();
  std::vector<double> grad(n), next_grad(n), direction(n), next_x(n);
  double value = objective(x, grad);
  if (!std::isfinite(value)) throw Error(ErrorKind::NonFinite, "non-finite loss at iteration 0");

  struct Pair {
    std::vector<double> s, y;
    double rho;
  };
  std::deque<Pair> history;
  std::vector<double> alpha(static_cast<std::size_t>(memory));

  LbfgsResult result;
  for (int iter = 0; iter < max_iter; ++iter) {
    if (inf_norm(grad) <= tol) {
      result.converged = true;
      break;
    }

    // Two-loop recursion: direction = -H * grad.
    for (std::size_t i = 0; i < n; ++i) direction[i] = -grad[i];
    for (std::size_t k = history.size(); k-- > 0;) {
      alpha[k] = history[k].rho * dot(history[k].s, direction);
      for (std::size_t i = 0; i < n; ++i) direction[i] -= alpha[k] * history[k].y[i];
    }
    double initial_step = 1.0;
    if (history.empty()) {
      initial_step = 1.0 / std::max(1.0, std::sqrt(dot(grad, grad)));
    } else {
      const auto& last = history.back();
      const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
      for (double& v : direction) v *= gamma;
    }
    for (std::size_t k = 0; k < history.size(); ++k) {
      const double beta = history[k].rho * dot(history[k].y, direction);
      for (std::size_t i = 0; i < n; ++i) direction[i] += history[k].s[i] * (alpha[k] - beta);
    }

    double slope = dot(grad, direction);
    if (!(slope < 0.0)) {
      // Not a descent direction; restart from steepest descent.
      history.clear();
      for (std::size_t i = 0; i < n; ++i) direction[i] = -grad[i];
      slope = -dot(grad, grad);
      initial_step = 1.0 / std::max(1.0, std::sqrt(-slope));
    }

    double step = initial_step;
    double next_value = 0.0;
    bool accepted = false;
    for (int trial = 0; trial < 60; ++trial) {
      for (std::size_t i = 0; i < n; ++i) next_x[i] = x[i] + step * direction[i];
      next_value = objective(next_x, next_grad);
      if (!std::isfinite(next_value)) {
        throw Error(ErrorKind::NonFinite,
                    "non-finite loss at iteration " + std::to_string(iter + 1));
      }
      if (next_value <= value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    result.iterations = iter + 1;
    if (!accepted) break;  // no further progress possible at this precision

    Pair pair{std::vector<double>(n), std::vector<double>(n), 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      pair.s[i] = next_x[i] - x[i];
      pair.y[i] = next_grad[i] - grad[i];
    }
    const double sy = dot(pair.s, pair.y);
    x.swap(next_x);
    grad.swap(next_grad);
    value = next_value;
    if (sy > 1e-12) {
      pair.rho = 1.0 / sy;
      history.push_back(std::move(pair));
      if (history.size() > static_cast<std::size_t>(memory)) history.pop_front();
    }
  }
  if (!result.converged && inf_norm(grad) <= tol) result.converged = true;
  result.value = value;
  return result;
}

}  // namespace

double LogisticRegressionModel::decision(const SparseVector& x) const {
  return x.dot(weights) + bias;
}

double logistic_objective(const FeatureMatrix& x, std::span<const Label> y,
                          std::span<const double> weights, double bias, double c,
                          std::vector<double>* gradient) {
  const std::size_t d = weights.size();
  if (gradient) gradient->assign(d + 1, 0.0);
  double loss = 0.0;
  for (std::size_t i = 0; i < x.n_rows(); ++i) {
    const double z = x.rows[i].dot(weights) + bias;
    const double target = to_double(y[i]);
    loss += logloss_from_logit(z, target);
    if (gradient) {
      const double dz = sigmoid(z) - target;
      for (const auto& e : x.rows[i].entries()) (*gradient)[e.index] += dz * e.value;
      (*gradient)[d] += dz;
    }
  }
  double penalty = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    penalty += weights[j] * weights[j];
    if (gradient) (*gradient)[j] += weights[j] / c;
  }
  return loss + penalty / (2.0 * c);
}

TrainedModel fit_logistic_regression(const FeatureMatrix& x, std::span<const Label> y,
                                     const LogisticRegressionParams& params) {
  ClassifierSpec spec{params, 0};
  spec.validate();
  const auto class_counts = detail::check_training_data(x, y);
  const std::size_t d = x.n_cols;

  std::vector<double> theta(d + 1, 0.0);  // weights, then bias
  const Objective objective = [&](std::span<const double> t, std::vector<double>& grad) {
    return logistic_objective(x, y, t.first(d), t[d], params.c, &grad);
  };
  const auto result = minimize_lbfgs(objective, theta, params.memory, params.max_iter, params.tol);

  LogisticRegressionModel model;
  model.bias = theta[d];
  theta.pop_back();
  model.weights = std::move(theta);
  model.c = params.c;

  TrainingSummary summary;
  summary.n_samples = x.n_rows();
  summary.class_counts = class_counts;
  summary.iterations = result.iterations;
  summary.converged = result.converged;
  double loss = 0.0;
  for (std::size_t i = 0; i < x.n_rows(); ++i) {
    loss += logloss_from_logit(model.decision(x.rows[i]), to_double(y[i]));
  }
  summary.final_loss = loss / static_cast<double>(x.n_rows());

  return TrainedModel(std::move(spec), std::move(model), d, std::move(summary));
}

}  // namespace llmdetect
