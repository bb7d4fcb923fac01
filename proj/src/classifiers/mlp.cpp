#include <cmath>
#include <numeric>

#include "llmdetect/classifiers.hpp"
#include "llmdetect/error.hpp"
#include "llmdetect/rng.hpp"
#include "training_checks.hpp"

namespace llmdetect {

namespace {

// Per-sample activations. pre[l] / post[l] are the outputs of layer l.
struct Activations {
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> post;

  explicit Activations(const MlpModel& model) {
    for (const auto& layer : model.layers) {
      pre.emplace_back(layer.fan_out);
      post.emplace_back(layer.fan_out);
    }
  }
};

void forward(const MlpModel& model, const SparseVector& x, Activations& act) {
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& layer = model.layers[l];
    auto& z = act.pre[l];
    z.assign(layer.bias.begin(), layer.bias.end());
    if (l == 0) {
      for (const auto& e : x.entries()) {
        const double* w = &layer.weights[e.index * layer.fan_out];
        for (std::size_t k = 0; k < layer.fan_out; ++k) z[k] += e.value * w[k];
      }
    } else {
      const auto& input = act.post[l - 1];
      for (std::size_t j = 0; j < layer.fan_in; ++j) {
        const double a = input[j];
        if (a == 0.0) continue;
        const double* w = &layer.weights[j * layer.fan_out];
        for (std::size_t k = 0; k < layer.fan_out; ++k) z[k] += a * w[k];
      }
    }
    auto& a = act.post[l];
    for (std::size_t k = 0; k < layer.fan_out; ++k) {
      a[k] = layer.activation == Activation::Relu ? std::max(z[k], 0.0) : sigmoid(z[k]);
    }
  }
}

// Offsets of each layer's weights and bias inside the flat parameter vector.
std::vector<std::size_t> layer_offsets(const MlpModel& model) {
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const auto& layer : model.layers) {
    offsets.push_back(offset);
    offset += layer.weights.size() + layer.bias.size();
  }
  return offsets;
}

}  // namespace

double MlpModel::logit(const SparseVector& x) const {
  Activations act(*this);
  forward(*this, x, act);
  return act.pre.back()[0];
}

std::size_t MlpModel::parameter_count() const {
  std::size_t count = 0;
  for (const auto& layer : layers) count += layer.weights.size() + layer.bias.size();
  return count;
}

std::vector<double> MlpModel::flat_parameters() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const auto& layer : layers) {
    flat.insert(flat.end(), layer.weights.begin(), layer.weights.end());
    flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
  }
  return flat;
}

void MlpModel::set_flat_parameters(std::span<const double> flat) {
  if (flat.size() != parameter_count()) {
    throw Error(ErrorKind::DimensionMismatch, "flat parameter vector has the wrong length");
  }
  std::size_t offset = 0;
  for (auto& layer : layers) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(offset), layer.weights.size(), layer.weights.begin());
    offset += layer.weights.size();
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(offset), layer.bias.size(), layer.bias.begin());
    offset += layer.bias.size();
  }
}

MlpModel init_mlp(std::size_t n_features, std::span<const int> hidden, std::uint64_t seed) {
  MlpModel model;
  Rng rng(seed);
  std::size_t fan_in = n_features;
  for (std::size_t l = 0; l <= hidden.size(); ++l) {
    const bool output = l == hidden.size();
    DenseLayer layer;
    layer.fan_in = fan_in;
    layer.fan_out = output ? 1 : static_cast<std::size_t>(hidden[l]);
    layer.activation = output ? Activation::Logistic : Activation::Relu;
    const double bound = std::sqrt(6.0 / static_cast<double>(layer.fan_in + layer.fan_out));
    layer.weights.resize(layer.fan_in * layer.fan_out);
    for (double& w : layer.weights) w = rng.symmetric(bound);
    layer.bias.resize(layer.fan_out);
    for (double& b : layer.bias) b = rng.symmetric(bound);
    fan_in = layer.fan_out;
    model.layers.push_back(std::move(layer));
  }
  return model;
}

double mlp_objective(const MlpModel& model, const FeatureMatrix& x, std::span<const Label> y,
                     std::span<const std::size_t> rows, double weight_decay,
                     std::vector<double>* gradient) {
  if (rows.empty()) throw Error(ErrorKind::InvalidArgument, "mlp_objective needs at least one row");
  const auto offsets = layer_offsets(model);
  if (gradient) gradient->assign(model.parameter_count(), 0.0);

  Activations act(model);
  std::vector<std::vector<double>> delta;
  for (const auto& layer : model.layers) delta.emplace_back(layer.fan_out);
  const double scale = 1.0 / static_cast<double>(rows.size());
  const std::size_t n_layers = model.layers.size();

  double loss = 0.0;
  for (auto row : rows) {
    const auto& input = x.rows[row];
    forward(model, input, act);
    const double z = act.pre.back()[0];
    const double target = to_double(y[row]);
    loss += logloss_from_logit(z, target);
    if (!gradient) continue;

    delta.back()[0] = (sigmoid(z) - target) * scale;
    for (std::size_t l = n_layers; l-- > 0;) {
      const auto& layer = model.layers[l];
      double* g_w = gradient->data() + offsets[l];
      double* g_b = g_w + layer.weights.size();
      const auto& d = delta[l];
      for (std::size_t k = 0; k < layer.fan_out; ++k) g_b[k] += d[k];
      if (l == 0) {
        for (const auto& e : input.entries()) {
          double* gw = g_w + e.index * layer.fan_out;
          for (std::size_t k = 0; k < layer.fan_out; ++k) gw[k] += e.value * d[k];
        }
        break;
      }
      const auto& below = act.post[l - 1];
      const auto& below_pre = act.pre[l - 1];
      auto& d_below = delta[l - 1];
      for (std::size_t j = 0; j < layer.fan_in; ++j) {
        const double* w = &layer.weights[j * layer.fan_out];
        double* gw = g_w + j * layer.fan_out;
        double back = 0.0;
        for (std::size_t k = 0; k < layer.fan_out; ++k) {
          gw[k] += below[j] * d[k];
          back += w[k] * d[k];
        }
        d_below[j] = below_pre[j] > 0.0 ? back : 0.0;  // ReLU derivative
      }
    }
  }

  double squared = 0.0;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const auto& w = model.layers[l].weights;
    for (std::size_t i = 0; i < w.size(); ++i) {
      squared += w[i] * w[i];
      if (gradient) (*gradient)[offsets[l] + i] += weight_decay * w[i];
    }
  }
  return loss * scale + 0.5 * weight_decay * squared;
}

TrainedModel fit_mlp(const FeatureMatrix& x, std::span<const Label> y, const MlpParams& params,
                     std::uint64_t seed) {
  ClassifierSpec spec{params, seed};
  spec.validate();
  const auto class_counts = detail::check_training_data(x, y);
  const std::size_t n = x.n_rows();

  MlpModel model = init_mlp(x.n_cols, params.hidden, seed);
  const auto offsets = layer_offsets(model);
  const std::size_t n_params = model.parameter_count();
  std::vector<double> m(n_params, 0.0), v(n_params, 0.0), grad;
  Rng shuffler(derive_seed(seed, 1));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainingSummary summary;
  std::uint64_t step = 0;
  const auto batch = static_cast<std::size_t>(params.batch_size);
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    shuffler.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    for (std::size_t start = 0, b = 0; start < n; start += batch, ++b) {
      const std::span<const std::size_t> rows(order.data() + start, std::min(batch, n - start));
      const double loss = mlp_objective(model, x, y, rows, params.weight_decay, &grad);
      if (!std::isfinite(loss)) {
        throw Error(ErrorKind::NonFinite, "non-finite loss at epoch " + std::to_string(epoch) +
                                              ", batch " + std::to_string(b));
      }
      epoch_loss += loss * static_cast<double>(rows.size());

      ++step;
      const double correction1 = 1.0 - std::pow(params.beta1, static_cast<double>(step));
      const double correction2 = 1.0 - std::pow(params.beta2, static_cast<double>(step));
      for (std::size_t l = 0; l < model.layers.size(); ++l) {
        auto& layer = model.layers[l];
        auto update = [&](std::vector<double>& values, std::size_t base) {
          for (std::size_t i = 0; i < values.size(); ++i) {
            const std::size_t p = base + i;
            m[p] = params.beta1 * m[p] + (1.0 - params.beta1) * grad[p];
            v[p] = params.beta2 * v[p] + (1.0 - params.beta2) * grad[p] * grad[p];
            const double m_hat = m[p] / correction1;
            const double v_hat = v[p] / correction2;
            values[i] -= params.learning_rate * m_hat / (std::sqrt(v_hat) + params.epsilon);
          }
        };
        update(layer.weights, offsets[l]);
        update(layer.bias, offsets[l] + layer.weights.size());
      }
    }
    summary.loss_history.push_back(epoch_loss / static_cast<double>(n));
  }

  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) loss += logloss_from_logit(model.logit(x.rows[i]), to_double(y[i]));
  summary.n_samples = n;
  summary.class_counts = class_counts;
  summary.iterations = params.epochs;
  summary.converged = true;
  summary.final_loss = loss / static_cast<double>(n);
  return TrainedModel(std::move(spec), std::move(model), x.n_cols, std::move(summary));
}

}  // namespace llmdetect
