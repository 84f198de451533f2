#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pedcross/errors.hpp"
#include "pedcross/sim.hpp"

namespace pedcross::eval {

/// Cross is the positive class.
struct ConfusionMatrix {
  long tp = 0;
  long fp = 0;
  long tn = 0;
  long fn = 0;

  long total() const { return tp + fp + tn + fn; }

  ConfusionMatrix& operator+=(const ConfusionMatrix& o) {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }
};

/// Ratios with zero denominators are reported as absent, never as 0 or 1.
struct MetricBlock {
  std::optional<double> accuracy;
  std::optional<double> precision;
  std::optional<double> specificity;
  std::optional<double> cross_recall;
  std::optional<double> not_cross_recall;
};

/// One prediction resolved against simulator ground truth.
struct PredictionOutcome {
  int track_id = -1;
  bool predicted_cross = false;
  std::optional<int> truth_agent;
};

struct ConfusionResult {
  ConfusionMatrix matrix;
  long spurious = 0;  // predictions that resolve to no ground-truth agent
};

ConfusionResult compute_confusion(const std::vector<PredictionOutcome>& predictions,
                                  const std::map<int, bool>& agent_crossing_labels);

/// Throws InputError when the matrix is empty.
MetricBlock compute_metrics(const ConfusionMatrix& cm);

/// Ground-truth side of the rate computation: per agent, the frames where the
/// simulator says the agent was visible, detectable and in range.
struct AgentFrameTruth {
  int agent_id = 0;
  std::vector<int> visible_frames;
};

/// Tracking side: per frame, which agents had a (post-filter) detection and
/// which track each matched detection was assigned to.
struct FrameObservation {
  int frame = 0;
  std::vector<int> detected_agents;                  // truth-linked detections
  std::vector<std::pair<int, int>> matched;          // (agent_id, track_id)
};

struct Rates {
  std::optional<double> detection_rate;
  std::optional<double> tracking_rate;
  long id_switches = 0;
  // Raw counts, so callers can micro-average across scenarios.
  long visible_events = 0;
  long detected_events = 0;
  long detected_agents = 0;
  long tracked_agents = 0;
};

/// detection_rate: fraction of (agent, frame) visibility events with a
/// matching detection. tracking_rate: fraction of detected agents whose
/// dominant track id covers at least `coverage_threshold` of their matched
/// frames. id_switches: changes of assigned track id along an agent's
/// matched-frame sequence.
Rates detection_tracking_rates(const std::vector<AgentFrameTruth>& truth,
                               const std::vector<FrameObservation>& observations,
                               double coverage_threshold = 0.8);

struct ScenarioOutcome {
  sim::Condition condition = sim::Condition::kBaseline;
  ConfusionMatrix confusion;
  long spurious_predictions = 0;
  // Rate numerators/denominators so conditions aggregate by counts.
  long visible_events = 0;
  long detected_events = 0;
  long tracked_agents = 0;
  long detected_agents = 0;
  long id_switches = 0;
};

struct ConditionReport {
  std::string label;  // condition name or "average"
  ConfusionMatrix confusion;
  MetricBlock metrics;
  std::optional<double> detection_rate;
  std::optional<double> tracking_rate;
  long spurious_predictions = 0;
  long id_switches = 0;
};

struct MetricsReport {
  std::vector<ConditionReport> conditions;  // per condition present in input
  ConditionReport average;                  // micro-average over all input
};

/// Micro-averages confusion counts per condition before computing ratios.
MetricsReport condition_breakdown(const std::vector<ScenarioOutcome>& outcomes);

/// Table-style human-readable rendering (metric rows, condition columns).
std::string format_table(const MetricsReport& report);

std::string confusion_csv(const ConfusionMatrix& cm);

}  // namespace pedcross::eval
