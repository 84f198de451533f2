#pragma once

#include <Eigen/Dense>
#include <deque>
#include <optional>
#include <vector>

#include "pedcross/hungarian.hpp"
#include "pedcross/kalman.hpp"
#include "pedcross/pose.hpp"

namespace pedcross::track {

struct TrackerParams {
  double lambda = 0.5;           // weight between motion and appearance cost
  double chi2_gate = 9.4877;     // 95% chi-square quantile, 4 dof
  double appearance_gate = 0.4;  // max cosine distance considered feasible
  int n_init = 3;                // consecutive hits before a track confirms
  int max_age = 30;              // misses before deletion
  int gallery_size = 100;        // descriptor budget per track (FIFO)
  int history_size = 64;         // recent bboxes kept on the track
  bool debug_costs = false;      // capture per-frame gated d1/d2 matrices
  KalmanParams kalman;

  void validate() const;
};

/// A pose- and range-filtered detection, ready for association.
struct TrackerDetection {
  pose::BoundingBox bbox;
  Eigen::VectorXd descriptor;  // unit norm
  pose::PoseFeature36 pose36;
  std::optional<int> truth_agent;  // simulator linkage, carried through for evaluation
};

enum class TrackStatus { kTentative, kConfirmed, kDeleted };

const char* to_string(TrackStatus s);

struct Track {
  int id = 0;
  KalmanState state;
  std::deque<Eigen::VectorXd> gallery;  // newest at the back
  TrackStatus status = TrackStatus::kTentative;
  int hits = 0;    // consecutive matches
  int misses = 0;  // frames since last match
  pose::PoseFeature36 last_pose;
  std::deque<pose::BoundingBox> history;  // recent posterior bboxes

  pose::BoundingBox bbox() const { return measurement_to_bbox(state.mean.head<4>()); }
};

struct AssociationRecord {
  int frame = 0;
  int track_id = 0;
  int det_index = 0;
  double d1 = 0.0;    // squared Mahalanobis motion cost
  double d2 = 0.0;    // min-over-gallery cosine appearance cost
  double cost = 0.0;  // lambda*d1 + (1-lambda)*d2
};

struct StepDebug {
  std::vector<int> track_ids;  // row order of the matrices below
  Eigen::MatrixXd d1;          // motion costs before gating
  Eigen::MatrixXd d2;          // appearance costs before gating
  Eigen::MatrixXd feasible;    // 1.0 where the pair passed both gates
};

struct StepResult {
  int frame = 0;
  std::vector<AssociationRecord> matches;
  std::vector<int> unmatched_track_ids;
  std::vector<int> unmatched_detections;
  std::vector<int> new_track_ids;
  std::vector<int> deleted_track_ids;
  std::optional<StepDebug> debug;
};

/// Motion matching degree: squared Mahalanobis distance between the track's
/// predicted measurement and the detection.
double motion_cost(const Track& t, const Eigen::Vector4d& measurement, const BoxMotionModel& model);

/// Appearance matching degree: minimum cosine distance between the descriptor
/// and the track's gallery. Throws StateError on an empty gallery.
double appearance_cost(const Track& t, const Eigen::VectorXd& descriptor);

/// Weighted combination of the two matching degrees.
double combined_cost(double d1, double d2, double lambda);

/// Feasibility gate applied before assignment.
bool gate(double d1, double d2, const TrackerParams& params);

/// Tracking-by-detection with Kalman prediction, gated cost association and
/// Hungarian matching. Single-owner: one step() at a time per instance.
class Tracker {
 public:
  explicit Tracker(const TrackerParams& params = {});

  StepResult step(const std::vector<TrackerDetection>& detections);

  const std::vector<Track>& tracks() const { return tracks_; }
  const BoxMotionModel& motion_model() const { return model_; }
  const TrackerParams& params() const { return params_; }
  int frame() const { return frame_; }

 private:
  TrackerParams params_;
  BoxMotionModel model_;
  std::vector<Track> tracks_;
  int next_id_ = 1;
  int frame_ = -1;
};

}  // namespace pedcross::track
