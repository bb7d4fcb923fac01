#include <doctest.h>

#include <cmath>

#include "llmdetect/error.hpp"
#include "llmdetect/metrics.hpp"
#include "test_support.hpp"

using namespace llmdetect;
using doctest::Approx;
using testing::Gen;

namespace {

std::vector<Label> labels_of(std::initializer_list<int> ints) {
  std::vector<Label> out;
  for (int v : ints) out.push_back(label_from_int(v));
  return out;
}

// P(score_ai > score_human) + 0.5 P(tie), by pair counting.
double mann_whitney(const std::vector<double>& s, const std::vector<Label>& y) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != Label::Ai) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != Label::Human) continue;
      pairs += 1.0;
      if (s[i] > s[j]) wins += 1.0;
      else if (s[i] == s[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Inverse of normal_cdf by bisection.
double bisect_probit(double p) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("confusion counts with AI as positive") {
  const auto pred = labels_of({1, 1, 0, 0, 1});
  const auto truth = labels_of({1, 0, 0, 1, 1});
  const auto cm = confusion(pred, truth);
  CHECK(cm == ConfusionMatrix{2, 1, 1, 1});
  CHECK(cm.total() == 5);
  CHECK_THROWS_AS(confusion(pred, labels_of({1})), Error);
  CHECK_THROWS_AS(confusion({}, {}), Error);
}

TEST_CASE("scalar metrics hand example") {
  // tp 2, fp 0, tn 1, fn 1
  const auto m = scalar_metrics({2, 0, 1, 1});
  CHECK(*m.accuracy == 0.75);
  CHECK(*m.recall_tpr == Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(*m.precision == 1.0);
  CHECK(*m.f1 == Approx(0.8).epsilon(1e-15));
  CHECK(*m.fpr == 0.0);
  CHECK(*m.tnr == 1.0);
  CHECK(*m.fnr == Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("undefined metrics") {
  // No positives predicted and none present.
  const auto m = scalar_metrics({0, 0, 4, 0});
  CHECK(*m.accuracy == 1.0);
  CHECK_FALSE(m.precision.has_value());
  CHECK_FALSE(m.recall_tpr.has_value());
  CHECK_FALSE(m.fnr.has_value());
  CHECK_FALSE(m.f1.has_value());
  CHECK(*m.tnr == 1.0);
  const auto doc = report_to_json(EvalReport{{0, 0, 4, 0}, m, {}, {}, 0.5});
  CHECK(doc["metrics"]["TPR"] == "undefined");
  CHECK(doc["metrics"]["Accuracy"] == 1.0);
}

TEST_CASE("complementary rates sum to exactly one") {
  Gen g(1);
  for (int i = 0; i < 2000; ++i) {
    const ConfusionMatrix cm{g.size(0, 1000), g.size(0, 1000), g.size(0, 1000), g.size(0, 1000)};
    const auto m = scalar_metrics(cm);
    if (cm.tp + cm.fn > 0) CHECK(*m.recall_tpr + *m.fnr == 1.0);
    if (cm.tn + cm.fp > 0) CHECK(*m.tnr + *m.fpr == 1.0);
  }
}

TEST_CASE("ROC hand cases") {
  const std::vector<double> s = {0.9, 0.8, 0.3, 0.1};
  CHECK(roc_curve(s, labels_of({1, 1, 0, 0})).auc == 1.0);
  CHECK(roc_curve(s, labels_of({0, 0, 1, 1})).auc == 0.0);
  CHECK(roc_curve(std::vector<double>{0.5, 0.5, 0.5, 0.5}, labels_of({0, 1, 0, 1})).auc == 0.5);

  const auto roc = roc_curve(s, labels_of({1, 0, 1, 0}));
  CHECK(roc.auc == 0.75);
  REQUIRE(roc.points.size() == 5);
  CHECK(roc.points.front().x == 0.0);
  CHECK(roc.points.front().y == 0.0);
  CHECK(roc.points.front().threshold == Approx(1.9));
  CHECK(roc.points.back().x == 1.0);
  CHECK(roc.points.back().y == 1.0);

  // Ties collapse into one point.
  CHECK(roc_curve(std::vector<double>{0.4, 0.4, 0.2}, labels_of({1, 0, 0})).points.size() == 3);

  CHECK_THROWS_AS(roc_curve(s, labels_of({1, 1, 1, 1})), Error);
  CHECK_THROWS_AS(roc_curve(std::vector<double>{0.1, NAN}, labels_of({0, 1})), Error);
}

TEST_CASE("AUC equals the Mann-Whitney statistic on tie-heavy grids") {
  Gen g(2);
  const std::vector<double> grid = {0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0};
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = g.size(2, 12);
    std::vector<double> s(n);
    for (auto& v : s) v = g.pick(grid);
    const auto y = g.two_class_labels(n);
    const auto roc = roc_curve(s, y);
    CHECK(std::abs(roc.auc - mann_whitney(s, y)) <= 1e-12);

    // Inverting the truth reflects the curve.
    std::vector<Label> inv(y);
    for (auto& l : inv) l = l == Label::Ai ? Label::Human : Label::Ai;
    CHECK(std::abs(roc.auc + roc_curve(s, inv).auc - 1.0) <= 1e-12);

    for (std::size_t k = 1; k < roc.points.size(); ++k) {
      CHECK(roc.points[k].x >= roc.points[k - 1].x);
      CHECK(roc.points[k].y >= roc.points[k - 1].y);
      CHECK(roc.points[k].threshold < roc.points[k - 1].threshold);
    }
  }
}

TEST_CASE("probit values and symmetry") {
  CHECK(probit(0.5) == 0.0);
  CHECK(probit(0.975) == Approx(1.959963984540054).epsilon(1e-14));
  CHECK(probit(0.0228) == Approx(-2.0).epsilon(1e-3));
  CHECK_THROWS_AS(probit(0.0), Error);
  CHECK_THROWS_AS(probit(1.0), Error);
  Gen g(3);
  for (int i = 0; i < 500; ++i) {
    const double p = g.coin(0.2) ? std::pow(10.0, -g.real(1.0, 12.0)) : g.real(1e-6, 1.0 - 1e-6);
    const double z = probit(p);
    CHECK(z == Approx(bisect_probit(p)).epsilon(1e-12).scale(1.0));
    // 1 - p is inexact for tiny p, so symmetry is checked on the bulk only.
    if (p >= 1e-6) CHECK(probit(1.0 - p) == Approx(-z).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("DET points map back to the clipped ROC rates") {
  Gen g(4);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = g.size(2, 60);
    std::vector<double> s(n);
    for (auto& v : s) v = g.real(0.0, 1.0);
    const auto y = g.two_class_labels(n);
    const auto roc = roc_curve(s, y);
    const auto det = det_curve(s, y);
    REQUIRE(det.size() == roc.points.size());
    for (std::size_t k = 0; k < det.size(); ++k) {
      const auto clip = [](double r) { return std::clamp(r, kDetEpsilon, 1.0 - kDetEpsilon); };
      CHECK(std::abs(normal_cdf(det[k].x) - clip(roc.points[k].x)) <= 1e-8);
      CHECK(std::abs(normal_cdf(det[k].y) - clip(1.0 - roc.points[k].y)) <= 1e-8);
      CHECK(std::isfinite(det[k].x));
      CHECK(std::isfinite(det[k].y));
    }
  }
}

TEST_CASE("a separating scorer dominates a noisy one in DET space") {
  // Perfect separation gives a point at (probit(eps), probit(eps)).
  const auto y = labels_of({0, 0, 0, 1, 1, 1});
  const auto good = det_curve(std::vector<double>{0.1, 0.2, 0.3, 0.7, 0.8, 0.9}, y);
  const auto bad = det_curve(std::vector<double>{0.1, 0.8, 0.3, 0.7, 0.2, 0.9}, y);
  auto min_sum = [](const std::vector<CurvePoint>& c) {
    double best = 1e300;
    for (const auto& p : c) best = std::min(best, p.x + p.y);
    return best;
  };
  CHECK(min_sum(good) < min_sum(bad));
  CHECK(min_sum(good) == Approx(2.0 * probit(kDetEpsilon)));
}

TEST_CASE("metric formulas match direct re-evaluation") {
  Gen g(5);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = g.size(2, 200);
    const auto truth = g.labels(n);
    const auto pred = g.labels(n);
    const auto m = scalar_metrics(confusion(pred, truth));
    double tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool p = pred[i] == Label::Ai, t = truth[i] == Label::Ai;
      (p ? (t ? tp : fp) : (t ? fn : tn)) += 1;
    }
    CHECK(std::abs(*m.accuracy - (tp + tn) / static_cast<double>(n)) <= 1e-12);
    if (tp + fp > 0 && tp + fn > 0 && tp > 0) {
      const double precision = tp / (tp + fp), recall = tp / (tp + fn);
      CHECK(std::abs(*m.precision - precision) <= 1e-12);
      CHECK(std::abs(*m.recall_tpr - recall) <= 1e-12);
      CHECK(std::abs(*m.f1 - 2 * precision * recall / (precision + recall)) <= 1e-12);
    }
  }
}

TEST_CASE("evaluation report") {
  const std::vector<double> p = {0.9, 0.5, 0.49, 0.1};
  const auto report = evaluate_scores(p, labels_of({1, 0, 0, 1}));
  // 0.5 counts as AI.
  CHECK(report.confusion == ConfusionMatrix{1, 1, 1, 1});
  CHECK(report.roc.auc == 0.5);
  const auto doc = report_to_json(report, "r.roc.csv", "r.det.csv");
  CHECK(doc["positive_class"] == "AI");
  CHECK(doc["decision_threshold"] == 0.5);
  for (const char* key : {"Accuracy", "F1-score", "FPR", "FNR", "TNR", "TPR", "auc"}) {
    CHECK(doc["metrics"].contains(key));
  }
  CHECK(doc["confusion"]["tp"] == 1);
  CHECK(doc["curves"]["roc_csv"] == "r.roc.csv");

  const auto csv = curve_to_csv(report.roc.points);
  CHECK(csv.rfind("threshold,x,y\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(report.roc.points.size() + 1));
}
