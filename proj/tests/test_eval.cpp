#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "pedcross/eval.hpp"
#include "pedcross/random.hpp"

using namespace pedcross;
using eval::ConfusionMatrix;
using eval::FrameObservation;
using eval::PredictionOutcome;

namespace {

std::vector<PredictionOutcome> balanced_predictions(bool inverted) {
  // Agents 0..4 cross, 5..9 do not.
  std::vector<PredictionOutcome> out;
  for (int a = 0; a < 10; ++a) {
    const bool truth = a < 5;
    out.push_back({a, inverted ? !truth : truth, a});
  }
  return out;
}

std::map<int, bool> balanced_labels() {
  std::map<int, bool> labels;
  for (int a = 0; a < 10; ++a) labels[a] = a < 5;
  return labels;
}

}  // namespace

TEST_CASE("confusion matrix from resolved predictions") {
  const auto labels = balanced_labels();
  const auto correct = eval::compute_confusion(balanced_predictions(false), labels);
  CHECK(correct.matrix.tp == 5);
  CHECK(correct.matrix.tn == 5);
  CHECK(correct.matrix.fp == 0);
  CHECK(correct.matrix.fn == 0);

  const auto inverted = eval::compute_confusion(balanced_predictions(true), labels);
  CHECK(inverted.matrix.tp == 0);
  CHECK(inverted.matrix.tn == 0);
  CHECK(inverted.matrix.fp == 5);
  CHECK(inverted.matrix.fn == 5);

  const auto empty = eval::compute_confusion({}, labels);
  CHECK(empty.matrix.total() == 0);

  std::vector<PredictionOutcome> spurious{{7, true, std::nullopt}, {8, true, 999}};
  const auto s = eval::compute_confusion(spurious, labels);
  CHECK(s.matrix.total() == 0);
  CHECK(s.spurious == 2);
}

TEST_CASE("prediction order does not change the confusion matrix") {
  auto preds = balanced_predictions(false);
  preds.push_back({42, true, 9});
  const auto labels = balanced_labels();
  const auto a = eval::compute_confusion(preds, labels);
  std::reverse(preds.begin(), preds.end());
  const auto b = eval::compute_confusion(preds, labels);
  CHECK(a.matrix.tp == b.matrix.tp);
  CHECK(a.matrix.fp == b.matrix.fp);
  CHECK(a.matrix.tn == b.matrix.tn);
  CHECK(a.matrix.fn == b.matrix.fn);
}

TEST_CASE("metric ratios on a hand-checked matrix") {
  const ConfusionMatrix cm{3, 1, 4, 2};
  const auto m = eval::compute_metrics(cm);
  CHECK(*m.accuracy == doctest::Approx(0.7));
  CHECK(*m.precision == doctest::Approx(0.75));
  CHECK(*m.specificity == doctest::Approx(0.8));
  CHECK(*m.cross_recall == doctest::Approx(0.6));
  CHECK(*m.not_cross_recall == doctest::Approx(4.0 / 6.0));
}

TEST_CASE("zero denominators report as absent") {
  const ConfusionMatrix cm{7, 0, 0, 0};  // every prediction a true positive
  const auto m = eval::compute_metrics(cm);
  CHECK(*m.accuracy == doctest::Approx(1.0));
  CHECK(*m.precision == doctest::Approx(1.0));
  CHECK_FALSE(m.specificity.has_value());   // tn + fp == 0
  CHECK(*m.cross_recall == doctest::Approx(1.0));
  CHECK_FALSE(m.not_cross_recall.has_value());  // tn + fn == 0

  CHECK_THROWS_AS(eval::compute_metrics(ConfusionMatrix{}), InputError);
}

TEST_CASE("inverting predictions complements accuracy on balanced data") {
  const auto labels = balanced_labels();
  const auto a = eval::compute_metrics(eval::compute_confusion(balanced_predictions(false), labels).matrix);
  const auto b = eval::compute_metrics(eval::compute_confusion(balanced_predictions(true), labels).matrix);
  CHECK(*a.accuracy + *b.accuracy == doctest::Approx(1.0));
}

namespace {

struct RateFixture {
  std::vector<eval::AgentFrameTruth> truth;
  std::vector<FrameObservation> observations;
};

/// `n_agents` agents visible on every frame, all detected and matched to one
/// stable track each.
RateFixture clean_fixture(int n_agents, int n_frames) {
  RateFixture fx;
  for (int a = 0; a < n_agents; ++a) {
    eval::AgentFrameTruth at;
    at.agent_id = a;
    for (int f = 0; f < n_frames; ++f) at.visible_frames.push_back(f);
    fx.truth.push_back(at);
  }
  for (int f = 0; f < n_frames; ++f) {
    FrameObservation obs;
    obs.frame = f;
    for (int a = 0; a < n_agents; ++a) {
      obs.detected_agents.push_back(a);
      obs.matched.emplace_back(a, 100 + a);
    }
    fx.observations.push_back(obs);
  }
  return fx;
}

}  // namespace

TEST_CASE("clean runs score perfect rates") {
  const auto fx = clean_fixture(4, 120);
  const auto r = eval::detection_tracking_rates(fx.truth, fx.observations);
  CHECK(*r.detection_rate == doctest::Approx(1.0));
  CHECK(*r.tracking_rate == doctest::Approx(1.0));
  CHECK(r.id_switches == 0);
}

TEST_CASE("detection rate follows a known miss rate") {
  const int n_frames = 400, n_agents = 5;
  auto fx = clean_fixture(n_agents, n_frames);
  Rng rng(77);
  const double miss = 0.1;
  long dropped = 0;
  for (auto& obs : fx.observations) {
    std::vector<int> kept_agents;
    std::vector<std::pair<int, int>> kept_matched;
    for (std::size_t i = 0; i < obs.detected_agents.size(); ++i) {
      if (rng.bernoulli(miss)) {
        ++dropped;
        continue;
      }
      kept_agents.push_back(obs.detected_agents[i]);
      kept_matched.push_back(obs.matched[i]);
    }
    obs.detected_agents = kept_agents;
    obs.matched = kept_matched;
  }
  const auto r = eval::detection_tracking_rates(fx.truth, fx.observations);
  const double n = static_cast<double>(n_frames) * n_agents;
  const double sigma = std::sqrt(miss * (1.0 - miss) / n);
  CHECK(std::abs(*r.detection_rate - (1.0 - miss)) < 3.0 * sigma);
}

TEST_CASE("an injected identity switch lowers the tracking rate") {
  auto fx = clean_fixture(2, 100);
  // Agent 0 flips to a different track id for the second half of the run.
  for (auto& obs : fx.observations)
    if (obs.frame >= 50)
      for (auto& [agent, track] : obs.matched)
        if (agent == 0) track = 999;
  const auto r = eval::detection_tracking_rates(fx.truth, fx.observations, 0.8);
  CHECK(*r.tracking_rate == doctest::Approx(0.5));  // agent 0 has no 80% id
  CHECK(r.id_switches == 1);
}

TEST_CASE("condition breakdown micro-averages counts") {
  using sim::Condition;
  eval::ScenarioOutcome a;
  a.condition = Condition::kBaseline;
  a.confusion = {2, 1, 2, 1};
  eval::ScenarioOutcome b;
  b.condition = Condition::kScreenDisplay;
  b.confusion = {4, 0, 4, 0};

  const auto report = eval::condition_breakdown({a, b});
  REQUIRE(report.conditions.size() == 2);
  // Micro average pools counts: (6,1,6,1) -> accuracy 12/14.
  CHECK(report.average.confusion.tp == 6);
  CHECK(*report.average.metrics.accuracy == doctest::Approx(12.0 / 14.0));

  // Single condition: the average equals that condition.
  const auto solo = eval::condition_breakdown({a});
  CHECK(*solo.average.metrics.accuracy == *solo.conditions[0].metrics.accuracy);

  // Identical matrices in two conditions: the average equals either.
  eval::ScenarioOutcome c = a;
  c.condition = Condition::kTrafficLight;
  const auto twin = eval::condition_breakdown({a, c});
  CHECK(*twin.average.metrics.accuracy == *twin.conditions[0].metrics.accuracy);
}

TEST_CASE("micro-average lies between the per-condition extremes") {
  Rng rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<eval::ScenarioOutcome> outcomes;
    for (int c = 0; c < 3; ++c) {
      eval::ScenarioOutcome o;
      o.condition = static_cast<sim::Condition>(c);
      o.confusion = {1 + rng.uniform_int(20), 1 + rng.uniform_int(20), 1 + rng.uniform_int(20),
                     1 + rng.uniform_int(20)};
      outcomes.push_back(o);
    }
    const auto report = eval::condition_breakdown(outcomes);
    const auto check_between = [&](auto member) {
      double lo = 1.0, hi = 0.0;
      for (const auto& c : report.conditions) {
        lo = std::min(lo, *(c.metrics.*member));
        hi = std::max(hi, *(c.metrics.*member));
      }
      CHECK(*(report.average.metrics.*member) >= lo - 1e-12);
      CHECK(*(report.average.metrics.*member) <= hi + 1e-12);
    };
    check_between(&eval::MetricBlock::accuracy);
    check_between(&eval::MetricBlock::precision);
    check_between(&eval::MetricBlock::specificity);
    check_between(&eval::MetricBlock::cross_recall);
    check_between(&eval::MetricBlock::not_cross_recall);
  }
}

TEST_CASE("table layout lists every metric row and condition column") {
  eval::ScenarioOutcome a, b, c;
  a.condition = sim::Condition::kBaseline;
  a.confusion = {3, 1, 3, 1};
  b.condition = sim::Condition::kScreenDisplay;
  b.confusion = {2, 2, 2, 2};
  c.condition = sim::Condition::kTrafficLight;
  c.confusion = {4, 1, 2, 1};
  const auto table = eval::format_table(eval::condition_breakdown({a, b, c}));

  for (const char* needle :
       {"Baseline", "Traffic Lights", "Screen Display", "Average", "Accuracy", "Precision",
        "Specificity", "Cross Recall", "Not Cross Recall"})
    CHECK(table.find(needle) != std::string::npos);

  // Column order mirrors the reference layout.
  CHECK(table.find("Baseline") < table.find("Traffic Lights"));
  CHECK(table.find("Traffic Lights") < table.find("Screen Display"));
  CHECK(table.find("Screen Display") < table.find("Average"));
}

TEST_CASE("confusion csv is labeled") {
  const auto csv = eval::confusion_csv({3, 1, 4, 2});
  CHECK(csv.find("truth_cross,3,2") != std::string::npos);
  CHECK(csv.find("truth_not_cross,1,4") != std::string::npos);
}
