#pragma once

#include <optional>
#include <unordered_set>
#include <vector>

#include "pedcross/gru.hpp"
#include "pedcross/image.hpp"
#include "pedcross/pose.hpp"
#include "pedcross/stereo.hpp"

namespace pedcross::intent {

/// Appearance features of the pedestrian crop plus features of the square
/// surroundings ROI with the pedestrian masked to gray (128).
struct LocalContextFeature {
  Eigen::VectorXd appearance;
  Eigen::VectorXd surroundings;
};

/// Deterministic feature stub over a crop: coarse block means, an intensity
/// histogram and a gradient-orientation summary, adapted to `dim` components.
LocalContextFeature extract_local_context(const GrayImage& image, const pose::BoundingBox& bbox,
                                          int dim = 64);

/// One frame of one track's stream data, as assembled by the tracking stage.
struct TrackFrameData {
  int frame = 0;
  pose::BoundingBox bbox;
  pose::PoseFeature36 pose36;
  Eigen::VectorXd appearance;
  Eigen::VectorXd surroundings;
  double speed_kmh = 0.0;
  std::optional<stereo::Point3D> range;
  std::optional<int> truth_agent;  // present on matched frames only
  bool matched = false;
  bool confirmed = true;  // track status when this frame was recorded
};

/// The four aligned input streams over the trailing observation window.
struct ObservationWindow {
  std::vector<Eigen::VectorXd> appearance;
  std::vector<Eigen::VectorXd> surroundings;
  std::vector<Eigen::VectorXd> pose;          // 36 components per frame
  std::vector<Eigen::Vector4d> displacement;  // bbox delta vs the first frame
  std::vector<double> speed_kmh;
  int track_id = -1;
  int end_frame = -1;

  int length() const { return static_cast<int>(appearance.size()); }
};

/// Window length in frames for a 1.5 s observation horizon.
int window_length(double frame_rate);

/// Assembles the window ending at the last entry of `history`; empty unless
/// the track has at least window_length consecutive frames of data.
std::optional<ObservationWindow> build_window(const std::vector<TrackFrameData>& history,
                                              double frame_rate);

/// Packs equal-length windows into per-layer stream matrices, applying the
/// model's displacement/speed scaling.
SequenceBatch make_batch(const StackedGruModel& model,
                         const std::vector<const ObservationWindow*>& windows);

/// Probability that the window's pedestrian will cross.
double stacked_forward(const StackedGruModel& model, const ObservationWindow& window);

struct IntentionScore {
  double probability = 0.5;
  bool cross = false;
  int track_id = -1;
  int trigger_frame = -1;
};

IntentionScore score_window(const StackedGruModel& model, const ObservationWindow& window,
                            double decision_threshold = 0.5);

/// Fires once per track when the estimated time-to-interaction (corridor-axis
/// distance over vehicle speed) enters the band around one second.
class TriggerPolicy {
 public:
  TriggerPolicy(double band_lo = 0.9, double band_hi = 1.1, double min_speed_mps = 0.1)
      : band_lo_(band_lo), band_hi_(band_hi), min_speed_mps_(min_speed_mps) {}

  bool should_trigger(int track_id, double corridor_distance_m, double vehicle_speed_kmh);

 private:
  double band_lo_;
  double band_hi_;
  double min_speed_mps_;
  std::unordered_set<int> fired_;
};

struct TrainHyperparams {
  double learning_rate = 0.05;
  int epochs = 200;
  int chunk = 128;  // windows per gradient-accumulation chunk
};

struct TrainResult {
  std::vector<double> loss_curve;  // mean BCE per epoch
  bool single_class = false;
};

/// Full-batch gradient descent through time on binary cross-entropy.
/// Deterministic given the model's initial parameters and the dataset order.
TrainResult train_toy(StackedGruModel& model, const std::vector<ObservationWindow>& windows,
                      const std::vector<int>& labels, const TrainHyperparams& hp);

}  // namespace pedcross::intent
