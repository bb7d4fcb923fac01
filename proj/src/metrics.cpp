#include "llmdetect/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "llmdetect/error.hpp"

namespace llmdetect {

namespace {

Metric ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

// Rates a/(a+b) and b/(a+b). The rate with the smaller count is computed
// directly and the other as its complement, which makes the pair sum to
// exactly 1.0 (the complement of a value in [0, 0.5] is exact up to a
// half-ulp that rounds back to 1).
std::pair<Metric, Metric> complementary(std::uint64_t a, std::uint64_t b) {
  const std::uint64_t den = a + b;
  if (den == 0) return {std::nullopt, std::nullopt};
  if (a <= b) {
    const double ra = static_cast<double>(a) / static_cast<double>(den);
    return {ra, 1.0 - ra};
  }
  const double rb = static_cast<double>(b) / static_cast<double>(den);
  return {1.0 - rb, rb};
}

void check_scored(std::span<const double> scores, std::span<const Label> truth) {
  if (scores.size() != truth.size()) {
    throw Error(ErrorKind::DimensionMismatch, "scores and labels differ in length");
  }
  bool has[2] = {false, false};
  for (auto label : truth) has[to_int(label)] = true;
  if (!has[0] || !has[1]) {
    throw Error(ErrorKind::SingleClass, "curves need both classes in the ground truth");
  }
  for (double s : scores) {
    if (!std::isfinite(s)) throw Error(ErrorKind::NonFinite, "non-finite score");
  }
}

// Cumulative (fp, tp) counts at each distinct threshold, descending, starting
// with the sentinel above the maximum score.
struct Sweep {
  std::vector<double> thresholds;
  std::vector<std::uint64_t> fp;
  std::vector<std::uint64_t> tp;
  std::uint64_t negatives = 0;
  std::uint64_t positives = 0;
};

Sweep sweep(std::span<const double> scores, std::span<const Label> truth) {
  check_scored(scores, truth);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  Sweep s;
  s.thresholds.push_back(scores[order.front()] + 1.0);
  s.fp.push_back(0);
  s.tp.push_back(0);
  std::uint64_t fp = 0, tp = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (truth[order[i]] == Label::Ai) ++tp; else ++fp;
    const bool last_of_tie = i + 1 == order.size() || scores[order[i + 1]] != scores[order[i]];
    if (last_of_tie) {
      s.thresholds.push_back(scores[order[i]]);
      s.fp.push_back(fp);
      s.tp.push_back(tp);
    }
  }
  s.negatives = fp;
  s.positives = tp;
  return s;
}

// Wichura's PPND16 polynomial coefficients.
constexpr double kA[] = {3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
                         1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
                         3.3430575583588128105e4, 2.5090809287301226727e3};
constexpr double kB[] = {1.0,
                         4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
                         2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
                         5.2264952788528545610e3};
constexpr double kC[] = {1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
                         3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
                         2.27238449892691845833e-2, 7.74545014278341407640e-4};
constexpr double kD[] = {1.0,
                         2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
                         1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
                         1.05075007164441684324e-9};
constexpr double kE[] = {6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
                         2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
                         2.71155556874348757815e-5, 2.01033439929228813265e-7};
constexpr double kF[] = {1.0,
                         5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
                         7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
                         2.04426310338993978564e-15};

double poly(const double (&c)[8], double x) {
  double r = c[7];
  for (int i = 6; i >= 0; --i) r = r * x + c[i];
  return r;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

nlohmann::json metric_json(const Metric& m) {
  if (m) return *m;
  return "undefined";
}

}  // namespace

ConfusionMatrix confusion(std::span<const Label> predicted, std::span<const Label> truth) {
  if (predicted.size() != truth.size()) {
    throw Error(ErrorKind::DimensionMismatch, "predicted and true labels differ in length");
  }
  if (predicted.empty()) throw Error(ErrorKind::InvalidArgument, "no labels to compare");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool p = predicted[i] == Label::Ai;
    const bool t = truth[i] == Label::Ai;
    if (p && t) ++cm.tp;
    else if (p) ++cm.fp;
    else if (t) ++cm.fn;
    else ++cm.tn;
  }
  return cm;
}

ScalarMetrics scalar_metrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw Error(ErrorKind::InvalidArgument, "empty confusion matrix");
  ScalarMetrics m;
  m.accuracy = ratio(cm.tp + cm.tn, cm.total());
  m.precision = ratio(cm.tp, cm.tp + cm.fp);
  std::tie(m.recall_tpr, m.fnr) = complementary(cm.tp, cm.fn);
  std::tie(m.fpr, m.tnr) = complementary(cm.fp, cm.tn);
  if (m.precision && m.recall_tpr && *m.precision + *m.recall_tpr > 0.0) {
    m.f1 = 2.0 * *m.precision * *m.recall_tpr / (*m.precision + *m.recall_tpr);
  }
  return m;
}

RocCurve roc_curve(std::span<const double> scores, std::span<const Label> truth) {
  const Sweep s = sweep(scores, truth);
  RocCurve roc;
  // Trapezoid areas in integer units of 1/(2PN).
  std::uint64_t twice_area = 0;
  for (std::size_t i = 0; i < s.thresholds.size(); ++i) {
    roc.points.push_back({static_cast<double>(s.fp[i]) / static_cast<double>(s.negatives),
                          static_cast<double>(s.tp[i]) / static_cast<double>(s.positives),
                          s.thresholds[i]});
    if (i > 0) twice_area += (s.fp[i] - s.fp[i - 1]) * (s.tp[i] + s.tp[i - 1]);
  }
  roc.auc = static_cast<double>(twice_area) /
            (2.0 * static_cast<double>(s.positives) * static_cast<double>(s.negatives));
  return roc;
}

std::vector<CurvePoint> det_curve(std::span<const double> scores, std::span<const Label> truth) {
  const Sweep s = sweep(scores, truth);
  auto clip = [](double r) { return std::clamp(r, kDetEpsilon, 1.0 - kDetEpsilon); };
  std::vector<CurvePoint> det;
  for (std::size_t i = 0; i < s.thresholds.size(); ++i) {
    const auto [fpr, tnr] = complementary(s.fp[i], s.negatives - s.fp[i]);
    const auto [tpr, fnr] = complementary(s.tp[i], s.positives - s.tp[i]);
    det.push_back({probit(clip(*fpr)), probit(clip(*fnr)), s.thresholds[i]});
  }
  return det;
}

double probit(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorKind::InvalidArgument, "probit needs 0 < p < 1");
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q * poly(kA, r) / poly(kB, r);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double z;
  if (r <= 5.0) {
    r -= 1.6;
    z = poly(kC, r) / poly(kD, r);
  } else {
    r -= 5.0;
    z = poly(kE, r) / poly(kF, r);
  }
  return q < 0.0 ? -z : z;
}

EvalReport evaluate_scores(std::span<const double> p_ai, std::span<const Label> truth) {
  EvalReport report;
  std::vector<Label> predicted;
  predicted.reserve(p_ai.size());
  for (double p : p_ai) predicted.push_back(p >= report.decision_threshold ? Label::Ai : Label::Human);
  report.confusion = confusion(predicted, truth);
  report.scalars = scalar_metrics(report.confusion);
  report.roc = roc_curve(p_ai, truth);
  report.det = det_curve(p_ai, truth);
  return report;
}

nlohmann::json report_to_json(const EvalReport& report, const std::string& roc_csv,
                              const std::string& det_csv) {
  const auto& m = report.scalars;
  nlohmann::json metrics = {
      {"Accuracy", metric_json(m.accuracy)}, {"F1-score", metric_json(m.f1)},
      {"FPR", metric_json(m.fpr)},           {"FNR", metric_json(m.fnr)},
      {"TNR", metric_json(m.tnr)},           {"TPR", metric_json(m.recall_tpr)},
      {"auc", report.roc.auc},
  };
  const auto& cm = report.confusion;
  return {
      {"positive_class", "AI"},
      {"decision_threshold", report.decision_threshold},
      {"metrics", std::move(metrics)},
      {"precision", metric_json(m.precision)},
      {"confusion", {{"tp", cm.tp}, {"fp", cm.fp}, {"tn", cm.tn}, {"fn", cm.fn}}},
      {"curves", {{"roc_csv", roc_csv}, {"det_csv", det_csv}}},
  };
}

std::string curve_to_csv(std::span<const CurvePoint> curve) {
  std::string out = "threshold,x,y\n";
  for (const auto& p : curve) out += fmt(p.threshold) + "," + fmt(p.x) + "," + fmt(p.y) + "\n";
  return out;
}

}  // namespace llmdetect
