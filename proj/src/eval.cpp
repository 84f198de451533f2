#include "pedcross/eval.hpp"

#include <algorithm>
#include <iomanip>
#include <set>
#include <sstream>
#include <unordered_map>

namespace pedcross::eval {

ConfusionResult compute_confusion(const std::vector<PredictionOutcome>& predictions,
                                  const std::map<int, bool>& agent_crossing_labels) {
  ConfusionResult result;
  for (const auto& p : predictions) {
    if (!p.truth_agent.has_value()) {
      ++result.spurious;
      continue;
    }
    const auto it = agent_crossing_labels.find(*p.truth_agent);
    if (it == agent_crossing_labels.end()) {
      ++result.spurious;
      continue;
    }
    const bool truth_cross = it->second;
    if (p.predicted_cross && truth_cross)
      ++result.matrix.tp;
    else if (p.predicted_cross && !truth_cross)
      ++result.matrix.fp;
    else if (!p.predicted_cross && !truth_cross)
      ++result.matrix.tn;
    else
      ++result.matrix.fn;
  }
  return result;
}

namespace {

std::optional<double> ratio(long num, long den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

MetricBlock compute_metrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw InputError("compute_metrics: empty confusion matrix");
  MetricBlock m;
  m.accuracy = ratio(cm.tp + cm.tn, cm.total());
  m.precision = ratio(cm.tp, cm.tp + cm.fp);
  m.specificity = ratio(cm.tn, cm.tn + cm.fp);
  m.cross_recall = ratio(cm.tp, cm.tp + cm.fn);
  m.not_cross_recall = ratio(cm.tn, cm.tn + cm.fn);
  return m;
}

Rates detection_tracking_rates(const std::vector<AgentFrameTruth>& truth,
                               const std::vector<FrameObservation>& observations,
                               double coverage_threshold) {
  long visible_events = 0;
  long detected_events = 0;

  std::unordered_map<int, std::set<int>> detected_frames;  // agent -> frames
  std::unordered_map<int, std::vector<std::pair<int, int>>> matched;  // agent -> (frame, track)
  for (const auto& obs : observations) {
    for (int agent : obs.detected_agents) detected_frames[agent].insert(obs.frame);
    for (const auto& [agent, track] : obs.matched) matched[agent].emplace_back(obs.frame, track);
  }

  for (const auto& at : truth) {
    const auto it = detected_frames.find(at.agent_id);
    for (int frame : at.visible_frames) {
      ++visible_events;
      if (it != detected_frames.end() && it->second.count(frame)) ++detected_events;
    }
  }

  long detected_agents = 0;
  long tracked_agents = 0;
  long id_switches = 0;
  for (auto& [agent, frames] : detected_frames) {
    (void)frames;
    ++detected_agents;
    auto it = matched.find(agent);
    if (it == matched.end() || it->second.empty()) continue;
    auto& seq = it->second;
    std::sort(seq.begin(), seq.end());
    std::unordered_map<int, long> counts;
    int prev_track = -1;
    for (const auto& [frame, track] : seq) {
      ++counts[track];
      if (prev_track != -1 && track != prev_track) ++id_switches;
      prev_track = track;
    }
    long dominant = 0;
    for (const auto& [track, c] : counts) {
      (void)track;
      dominant = std::max(dominant, c);
    }
    if (static_cast<double>(dominant) >=
        coverage_threshold * static_cast<double>(seq.size()))
      ++tracked_agents;
  }

  Rates r;
  r.detection_rate = ratio(detected_events, visible_events);
  r.tracking_rate = ratio(tracked_agents, detected_agents);
  r.id_switches = id_switches;
  r.visible_events = visible_events;
  r.detected_events = detected_events;
  r.detected_agents = detected_agents;
  r.tracked_agents = tracked_agents;
  return r;
}

MetricsReport condition_breakdown(const std::vector<ScenarioOutcome>& outcomes) {
  MetricsReport report;

  std::map<sim::Condition, std::vector<const ScenarioOutcome*>> grouped;
  for (const auto& o : outcomes) grouped[o.condition].push_back(&o);

  const auto aggregate = [](const std::string& label,
                            const std::vector<const ScenarioOutcome*>& group) {
    ConditionReport r;
    r.label = label;
    long visible = 0, detected = 0, tracked = 0, detectable = 0;
    for (const auto* o : group) {
      r.confusion += o->confusion;
      r.spurious_predictions += o->spurious_predictions;
      r.id_switches += o->id_switches;
      visible += o->visible_events;
      detected += o->detected_events;
      tracked += o->tracked_agents;
      detectable += o->detected_agents;
    }
    if (r.confusion.total() > 0) r.metrics = compute_metrics(r.confusion);
    if (visible > 0) r.detection_rate = static_cast<double>(detected) / visible;
    if (detectable > 0) r.tracking_rate = static_cast<double>(tracked) / detectable;
    return r;
  };

  std::vector<const ScenarioOutcome*> all;
  for (const auto& [condition, group] : grouped) {
    report.conditions.push_back(aggregate(sim::to_string(condition), group));
    all.insert(all.end(), group.begin(), group.end());
  }
  report.average = aggregate("average", all);
  return report;
}

namespace {

std::string cell(const std::optional<double>& v) {
  if (!v) return "-";
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << *v;
  return os.str();
}

}  // namespace

std::string format_table(const MetricsReport& report) {
  // Column order mirrors the reference layout: Baseline, Traffic Lights,
  // Screen Display, Average.
  const std::vector<std::pair<std::string, std::string>> column_order = {
      {"baseline", "Baseline"},
      {"traffic_light", "Traffic Lights"},
      {"screen_display", "Screen Display"},
  };
  std::vector<std::pair<std::string, const ConditionReport*>> columns;
  for (const auto& [key, title] : column_order)
    for (const auto& c : report.conditions)
      if (c.label == key) columns.emplace_back(title, &c);
  columns.emplace_back("Average", &report.average);

  const std::vector<std::pair<std::string, std::optional<double> MetricBlock::*>> rows = {
      {"Accuracy", &MetricBlock::accuracy},
      {"Precision", &MetricBlock::precision},
      {"Specificity", &MetricBlock::specificity},
      {"Cross Recall", &MetricBlock::cross_recall},
      {"Not Cross Recall", &MetricBlock::not_cross_recall},
  };

  std::ostringstream os;
  os << std::left << std::setw(18) << "";
  for (const auto& [title, rep] : columns) {
    (void)rep;
    os << std::setw(16) << title;
  }
  os << "\n";
  for (const auto& [name, member] : rows) {
    os << std::left << std::setw(18) << name;
    for (const auto& [title, rep] : columns) {
      (void)title;
      os << std::setw(16) << cell(rep->metrics.*member);
    }
    os << "\n";
  }
  os << std::left << std::setw(18) << "Detection Rate";
  for (const auto& [title, rep] : columns) os << std::setw(16) << cell(rep->detection_rate);
  os << "\n" << std::left << std::setw(18) << "Tracking Rate";
  for (const auto& [title, rep] : columns) os << std::setw(16) << cell(rep->tracking_rate);
  os << "\n";
  return os.str();
}

std::string confusion_csv(const ConfusionMatrix& cm) {
  std::ostringstream os;
  os << ",predicted_cross,predicted_not_cross\n";
  os << "truth_cross," << cm.tp << "," << cm.fn << "\n";
  os << "truth_not_cross," << cm.fp << "," << cm.tn << "\n";
  return os.str();
}

}  // namespace pedcross::eval
