#include "llmdetect/explain.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "llmdetect/error.hpp"
#include "llmdetect/rng.hpp"

namespace llmdetect {

namespace {

std::string join_kept(const InterpretableInstance& instance, std::span<const std::uint8_t> mask) {
  // word index of every token position
  std::vector<std::size_t> word_of(instance.tokens.size());
  for (std::size_t w = 0; w < instance.positions.size(); ++w) {
    for (auto pos : instance.positions[w]) word_of[pos] = w;
  }
  std::string text;
  for (std::size_t i = 0; i < instance.tokens.size(); ++i) {
    if (!mask[word_of[i]]) continue;
    if (!text.empty()) text += ' ';
    text += instance.tokens[i];
  }
  return text;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void ExplanationConfig::validate() const {
  if (num_samples < 2) throw Error(ErrorKind::InvalidArgument, "num_samples must be at least 2");
  if (top_k < 1) throw Error(ErrorKind::InvalidArgument, "top_k must be at least 1");
  if (!(kernel_width > 0.0)) throw Error(ErrorKind::InvalidArgument, "kernel_width must be positive");
  if (!(ridge_penalty >= 0.0)) throw Error(ErrorKind::InvalidArgument, "ridge_penalty must be non-negative");
  if (batch_size < 1) throw Error(ErrorKind::InvalidArgument, "batch_size must be at least 1");
}

InterpretableInstance index_words(std::vector<std::string> tokens) {
  if (tokens.empty()) throw Error(ErrorKind::InvalidArgument, "nothing to explain: no tokens");
  InterpretableInstance instance;
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto [it, inserted] = index.try_emplace(tokens[i], instance.distinct_words.size());
    if (inserted) {
      instance.distinct_words.push_back(tokens[i]);
      instance.positions.emplace_back();
    }
    instance.positions[it->second].push_back(i);
  }
  instance.tokens = std::move(tokens);
  return instance;
}

std::vector<PerturbationSample> sample_perturbations(const InterpretableInstance& instance,
                                                     const ExplanationConfig& config) {
  config.validate();
  const std::size_t d = instance.n_words();
  if (d == 0) throw Error(ErrorKind::InvalidArgument, "instance has no words");

  Rng rng(config.seed);
  std::vector<PerturbationSample> samples(config.num_samples);
  std::vector<std::size_t> pool(d);
  for (std::size_t s = 0; s < samples.size(); ++s) {
    auto& sample = samples[s];
    sample.mask.assign(d, 1);
    if (s > 0) {
      const auto k = static_cast<std::size_t>(1 + rng.uniform_index(d));
      std::iota(pool.begin(), pool.end(), std::size_t{0});
      // Partial Fisher-Yates: the first k slots become a uniform k-subset.
      for (std::size_t i = 0; i < k; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.uniform_index(d - i));
        std::swap(pool[i], pool[j]);
        sample.mask[pool[i]] = 0;
      }
    }
    sample.text = join_kept(instance, sample.mask);
    sample.weight = kernel_weight(sample.mask, config.kernel_width);
  }
  return samples;
}

double kernel_weight(std::span<const std::uint8_t> mask, double kernel_width) {
  if (mask.empty()) throw Error(ErrorKind::InvalidArgument, "empty mask");
  const auto kept = static_cast<double>(std::count_if(mask.begin(), mask.end(),
                                                      [](std::uint8_t m) { return m != 0; }));
  // cos(mask, ones) = kept / (sqrt(kept) * sqrt(d)) = sqrt(kept / d)
  const double distance = kept == 0.0 ? 1.0 : 1.0 - std::sqrt(kept / static_cast<double>(mask.size()));
  const double scaled = 100.0 * distance;
  return std::exp(-(scaled * scaled) / (kernel_width * kernel_width));
}

Surrogate fit_surrogate(std::span<const PerturbationSample> samples, double ridge_penalty) {
  if (samples.size() < 2) throw Error(ErrorKind::InvalidArgument, "surrogate needs at least 2 samples");
  const std::size_t d = samples.front().mask.size();
  const auto n = static_cast<Eigen::Index>(samples.size());
  const auto cols = static_cast<Eigen::Index>(d + 1);

  Eigen::MatrixXd z(n, cols);  // column 0 is the intercept
  Eigen::VectorXd w(n), y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    if (s.mask.size() != d) throw Error(ErrorKind::DimensionMismatch, "masks differ in length");
    z(i, 0) = 1.0;
    for (std::size_t j = 0; j < d; ++j) z(i, static_cast<Eigen::Index>(j + 1)) = s.mask[j];
    w(i) = s.weight;
    y(i) = s.p_ai;
  }
  if (!(w.sum() > 0.0)) throw Error(ErrorKind::InvalidArgument, "all sample weights are zero");

  const Eigen::MatrixXd zw = z.transpose() * w.asDiagonal();
  Eigen::MatrixXd gram = zw * z;
  gram.diagonal().tail(cols - 1).array() += ridge_penalty;
  const Eigen::VectorXd rhs = zw * y;
  const Eigen::VectorXd beta = gram.ldlt().solve(rhs);
  if (!beta.allFinite()) throw Error(ErrorKind::NonFinite, "surrogate system is singular");

  Surrogate out;
  out.intercept = beta(0);
  out.coefficients.assign(beta.data() + 1, beta.data() + cols);

  const Eigen::VectorXd residual = y - z * beta;
  const double ss_res = (w.array() * residual.array().square()).sum();
  if (y.maxCoeff() == y.minCoeff()) {
    // Constant target: the weighted mean carries rounding noise, so compare
    // the fit against the target scale instead of a near-zero ss_tot.
    const double scale = std::max(1.0, std::abs(y(0)));
    out.r2 = residual.cwiseAbs().maxCoeff() <= 1e-9 * scale ? 1.0 : 0.0;
    return out;
  }
  const double y_mean = w.dot(y) / w.sum();
  const double ss_tot = (w.array() * (y.array() - y_mean).square()).sum();
  out.r2 = 1.0 - ss_res / ss_tot;
  return out;
}

Explanation explain(const TextScorer& scorer, const TokenizerConfig& tokenizer,
                    std::string_view text, const ExplanationConfig& config) {
  config.validate();
  const auto instance = index_words(tokenize(tokenizer, text));
  auto samples = sample_perturbations(instance, config);

  std::vector<std::string> texts;
  texts.reserve(samples.size());
  for (const auto& s : samples) texts.push_back(s.text);
  const auto scores = batched_predict(scorer, texts, config.batch_size);
  for (std::size_t i = 0; i < samples.size(); ++i) samples[i].p_ai = scores[i];

  const auto surrogate = fit_surrogate(samples, config.ridge_penalty);

  // The unperturbed probability is scored on the raw text.
  const std::string original(text);
  const double p_ai = scorer(std::span<const std::string>(&original, 1)).at(0);

  std::vector<std::size_t> order(instance.n_words());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(surrogate.coefficients[a]) > std::abs(surrogate.coefficients[b]);
  });
  order.resize(std::min(order.size(), config.top_k));

  Explanation out;
  out.p_ai = p_ai;
  out.p_human = 1.0 - p_ai;
  out.intercept = surrogate.intercept;
  out.surrogate_r2 = surrogate.r2;
  for (auto j : order) out.attributions.push_back({instance.distinct_words[j], surrogate.coefficients[j]});
  return out;
}

Explanation explain(const DetectorPipeline& pipeline, std::string_view text,
                    const ExplanationConfig& config) {
  return explain(make_scorer(pipeline), pipeline.vocabulary.config(), text, config);
}

nlohmann::json explanation_to_json(const Explanation& explanation, const ExplanationConfig& config) {
  auto attributions = nlohmann::json::array();
  for (const auto& a : explanation.attributions) {
    attributions.push_back({{"word", a.word}, {"weight", a.weight}});
  }
  return {
      {"p_human", explanation.p_human},
      {"p_ai", explanation.p_ai},
      {"attributions", std::move(attributions)},
      {"intercept", explanation.intercept},
      {"r2", explanation.surrogate_r2},
      {"config",
       {{"num_samples", config.num_samples},
        {"top_k", config.top_k},
        {"kernel_width", config.kernel_width},
        {"ridge_penalty", config.ridge_penalty},
        {"batch_size", config.batch_size},
        {"seed", config.seed}}},
  };
}

std::string explanation_to_svg(const Explanation& explanation) {
  constexpr int kWidth = 640, kRow = 24, kTop = 40, kLabel = 180, kHalf = 200;
  const int height = kTop + kRow * static_cast<int>(explanation.attributions.size()) + 20;
  const int axis = kLabel + kHalf;
  double max_abs = 0.0;
  for (const auto& a : explanation.attributions) max_abs = std::max(max_abs, std::abs(a.weight));
  if (max_abs == 0.0) max_abs = 1.0;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<text x=\"10\" y=\"20\">p(AI) = " << explanation.p_ai
      << "   p(Human) = " << explanation.p_human << "</text>\n";
  svg << "<line x1=\"" << axis << "\" y1=\"" << kTop - 6 << "\" x2=\"" << axis << "\" y2=\""
      << height - 14 << "\" stroke=\"#444\"/>\n";
  int y = kTop;
  for (const auto& a : explanation.attributions) {
    const double len = std::abs(a.weight) / max_abs * kHalf;
    const double x = a.weight >= 0.0 ? axis : axis - len;
    svg << "<text x=\"10\" y=\"" << y + 14 << "\">" << xml_escape(a.word) << "</text>\n";
    svg << "<rect class=\"bar\" x=\"" << x << "\" y=\"" << y + 2 << "\" width=\"" << len
        << "\" height=\"" << kRow - 6 << "\" fill=\"" << (a.weight >= 0.0 ? "#d9534f" : "#337ab7")
        << "\"><title>" << xml_escape(a.word) << ": " << a.weight << "</title></rect>\n";
    y += kRow;
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace llmdetect
