#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "llmdetect/corpus.hpp"

namespace llmdetect {

/// 2x2 table with AI (label 1) as the positive class.
struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const noexcept { return tp + fp + tn + fn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion(std::span<const Label> predicted, std::span<const Label> truth);

/// A ratio whose denominator may be zero; nullopt means "undefined".
using Metric = std::optional<double>;

struct ScalarMetrics {
  Metric accuracy;
  Metric f1;
  Metric precision;
  Metric recall_tpr;
  Metric fpr;
  Metric tnr;
  Metric fnr;
};

/// Complementary rates (TPR/FNR, TNR/FPR) are computed so that each pair
/// sums to exactly 1.0 in floating point.
ScalarMetrics scalar_metrics(const ConfusionMatrix& cm);

struct CurvePoint {
  double x = 0.0;
  double y = 0.0;
  double threshold = 0.0;
};

struct RocCurve {
  std::vector<CurvePoint> points;  // (FPR, TPR), from (0,0) to (1,1)
  double auc = 0.0;
};

/// Thresholds sweep the distinct scores in descending order after a
/// sentinel (max score + 1); a sample is positive when score >= threshold.
RocCurve roc_curve(std::span<const double> scores, std::span<const Label> truth);

/// Lower clipping bound for DET rates.
inline constexpr double kDetEpsilon = 1e-6;

/// (probit(FPR), probit(FNR)) at the ROC thresholds, with rates clipped to
/// [kDetEpsilon, 1 - kDetEpsilon].
std::vector<CurvePoint> det_curve(std::span<const double> scores, std::span<const Label> truth);

/// Inverse standard normal CDF (Wichura's AS241 rational approximations).
double probit(double p);

struct EvalReport {
  ConfusionMatrix confusion;
  ScalarMetrics scalars;
  RocCurve roc;
  std::vector<CurvePoint> det;
  double decision_threshold = 0.5;
};

EvalReport evaluate_scores(std::span<const double> p_ai, std::span<const Label> truth);

/// Report JSON. `metrics` holds Accuracy, F1-score, FPR, FNR, TNR, TPR and
/// auc; undefined values serialize as the string "undefined".
nlohmann::json report_to_json(const EvalReport& report, const std::string& roc_csv = {},
                              const std::string& det_csv = {});

/// "threshold,x,y" rows.
std::string curve_to_csv(std::span<const CurvePoint> curve);

}  // namespace llmdetect
