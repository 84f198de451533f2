#include "pedcross/track.hpp"

#include <algorithm>
#include <cmath>

namespace pedcross::track {

void TrackerParams::validate() const {
  if (lambda < 0.0 || lambda > 1.0 || std::isnan(lambda))
    throw ConfigError("tracker.lambda must be in [0,1]");
  if (chi2_gate <= 0.0) throw ConfigError("tracker.chi2_gate must be > 0");
  if (appearance_gate <= 0.0) throw ConfigError("tracker.appearance_gate must be > 0");
  if (n_init < 1) throw ConfigError("tracker.n_init must be >= 1");
  if (max_age < 0) throw ConfigError("tracker.max_age must be >= 0");
  if (gallery_size < 1) throw ConfigError("tracker.gallery_size must be >= 1");
}

const char* to_string(TrackStatus s) {
  switch (s) {
    case TrackStatus::kTentative:
      return "tentative";
    case TrackStatus::kConfirmed:
      return "confirmed";
    case TrackStatus::kDeleted:
      return "deleted";
  }
  return "unknown";
}

double motion_cost(const Track& t, const Eigen::Vector4d& measurement,
                   const BoxMotionModel& model) {
  return model.gating_distance(t.state, measurement);
}

double appearance_cost(const Track& t, const Eigen::VectorXd& descriptor) {
  if (t.gallery.empty()) throw StateError("appearance_cost: track has an empty gallery");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& g : t.gallery) best = std::min(best, 1.0 - g.dot(descriptor));
  return best;
}

double combined_cost(double d1, double d2, double lambda) {
  if (lambda < 0.0 || lambda > 1.0 || std::isnan(lambda))
    throw ConfigError("tracker.lambda must be in [0,1]");
  return lambda * d1 + (1.0 - lambda) * d2;
}

bool gate(double d1, double d2, const TrackerParams& params) {
  return d1 <= params.chi2_gate && d2 <= params.appearance_gate;
}

Tracker::Tracker(const TrackerParams& params) : params_(params), model_(params.kalman) {
  params_.validate();
}

StepResult Tracker::step(const std::vector<TrackerDetection>& detections) {
  StepResult result;
  result.frame = ++frame_;

  for (auto& t : tracks_) t.state = model_.predict(t.state);

  const int n_tracks = static_cast<int>(tracks_.size());
  const int n_dets = static_cast<int>(detections.size());

  Eigen::MatrixXd d1 = Eigen::MatrixXd::Zero(n_tracks, n_dets);
  Eigen::MatrixXd d2 = Eigen::MatrixXd::Zero(n_tracks, n_dets);
  Eigen::MatrixXd feasible = Eigen::MatrixXd::Zero(n_tracks, n_dets);
  CostMatrix costs(n_tracks, n_dets);
  for (int i = 0; i < n_tracks; ++i) {
    for (int j = 0; j < n_dets; ++j) {
      const Eigen::Vector4d z = bbox_to_measurement(detections[j].bbox);
      d1(i, j) = motion_cost(tracks_[i], z, model_);
      d2(i, j) = appearance_cost(tracks_[i], detections[j].descriptor);
      if (gate(d1(i, j), d2(i, j), params_)) {
        feasible(i, j) = 1.0;
        costs.set(i, j, combined_cost(d1(i, j), d2(i, j), params_.lambda));
      }
    }
  }
  if (params_.debug_costs) {
    StepDebug dbg;
    for (const auto& t : tracks_) dbg.track_ids.push_back(t.id);
    dbg.d1 = d1;
    dbg.d2 = d2;
    dbg.feasible = feasible;
    result.debug = std::move(dbg);
  }

  const Assignment assignment = hungarian_solve(costs);

  std::vector<char> det_matched(n_dets, 0);
  for (const auto& [i, j] : assignment.matches) {
    Track& t = tracks_[i];
    const TrackerDetection& det = detections[j];
    t.state = model_.update(t.state, bbox_to_measurement(det.bbox));
    t.gallery.push_back(det.descriptor);
    while (static_cast<int>(t.gallery.size()) > params_.gallery_size) t.gallery.pop_front();
    t.last_pose = det.pose36;
    t.hits += 1;
    t.misses = 0;
    if (t.status == TrackStatus::kTentative && t.hits >= params_.n_init)
      t.status = TrackStatus::kConfirmed;
    t.history.push_back(t.bbox());
    while (static_cast<int>(t.history.size()) > params_.history_size) t.history.pop_front();
    det_matched[j] = 1;

    AssociationRecord rec;
    rec.frame = frame_;
    rec.track_id = t.id;
    rec.det_index = j;
    rec.d1 = d1(i, j);
    rec.d2 = d2(i, j);
    rec.cost = costs.at(i, j);
    result.matches.push_back(rec);
  }

  for (int i : assignment.unmatched_rows) {
    Track& t = tracks_[i];
    t.hits = 0;  // confirmation requires consecutive matches
    t.misses += 1;
    if (t.misses > params_.max_age) {
      t.status = TrackStatus::kDeleted;
    } else {
      t.history.push_back(t.bbox());
      while (static_cast<int>(t.history.size()) > params_.history_size) t.history.pop_front();
    }
    result.unmatched_track_ids.push_back(t.id);
  }

  for (int j = 0; j < n_dets; ++j) {
    if (det_matched[j]) continue;
    result.unmatched_detections.push_back(j);
    Track t;
    t.id = next_id_++;
    t.state = model_.initiate(bbox_to_measurement(detections[j].bbox));
    t.gallery.push_back(detections[j].descriptor);
    t.last_pose = detections[j].pose36;
    t.status = TrackStatus::kTentative;
    t.hits = 1;
    t.misses = 0;
    t.history.push_back(t.bbox());
    result.new_track_ids.push_back(t.id);
    tracks_.push_back(std::move(t));
  }

  for (const auto& t : tracks_)
    if (t.status == TrackStatus::kDeleted) result.deleted_track_ids.push_back(t.id);
  tracks_.erase(std::remove_if(tracks_.begin(), tracks_.end(),
                               [](const Track& t) { return t.status == TrackStatus::kDeleted; }),
                tracks_.end());

  return result;
}

}  // namespace pedcross::track
