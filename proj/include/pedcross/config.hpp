#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pedcross/jsonl.hpp"
#include "pedcross/sim.hpp"
#include "pedcross/stereo.hpp"
#include "pedcross/track.hpp"

namespace pedcross {

struct SimSection {
  int n_pedestrians = 6;
  double duration_s = 10.0;
  double frame_rate = 30.0;
  std::map<sim::Condition, double> cross_probability = {
      {sim::Condition::kBaseline, 0.5},
      {sim::Condition::kScreenDisplay, 0.55},
      {sim::Condition::kTrafficLight, 0.6},
  };
  std::map<sim::Condition, double> hesitation_s = {
      {sim::Condition::kBaseline, 0.8},
      {sim::Condition::kScreenDisplay, 0.4},
      {sim::Condition::kTrafficLight, 0.2},
  };
  double detection_miss_rate = 0.05;
  double false_positive_rate = 0.1;
  double keypoint_noise_sigma = 1.0;
  double keypoint_miss_rate = 0.02;
  int descriptor_dim = 32;
  double descriptor_noise_sigma = 0.08;
  std::vector<sim::SpeedSegment> vehicle_speed_profile{{0.0, 12.0}};
  double corridor_width = 2.0;
  double corridor_length = 12.0;
  double camera_height = 1.5;
  double min_visible_z = 2.6;
  double walk_speed_mean = 1.2;
  double walk_speed_std = 0.15;
  double background_depth_m = 25.0;
};

struct StereoSection {
  stereo::CameraIntrinsics intrinsics;
  int image_width = 384;
  int image_height = 240;
  stereo::BlockMatchParams block;
  double min_valid_fraction = 0.10;
  double range_limit_m = 15.0;
  stereo::RangeGate range_gate = stereo::RangeGate::kEuclidean;
};

struct PoseSection {
  double bbox_margin = 0.10;
};

struct IntentSection {
  int hidden_size = 32;
  int appearance_dim = 64;
  double learning_rate = 0.05;
  int epochs = 200;
  int chunk = 128;
  std::string init = "random";  // or "zero"
  double init_scale = 0.5;
  double decision_threshold = 0.5;
  double trigger_band_lo = 0.9;
  double trigger_band_hi = 1.1;
  double trigger_min_speed_mps = 0.1;
  int window_stride = 15;  // frames between harvested training windows
  double displacement_scale = 0.01;
  double speed_scale = 0.05;
};

struct EvalSection {
  double tracking_coverage_threshold = 0.8;
};

struct RunSection {
  std::vector<sim::Condition> conditions = {
      sim::Condition::kBaseline,
      sim::Condition::kScreenDisplay,
      sim::Condition::kTrafficLight,
  };
  int train_scenarios_per_condition = 1;
  int eval_scenarios_per_condition = 1;
};

/// Whole-pipeline configuration: defaults, overridden by the config file,
/// overridden by CLI flags. Unknown keys anywhere are rejected.
struct RunConfig {
  std::uint64_t seed = 7;
  std::string out_dir = "out";
  SimSection sim;
  StereoSection stereo;
  PoseSection pose;
  track::TrackerParams tracker;
  IntentSection intent;
  EvalSection eval;
  RunSection run;

  /// Resolves the flattened per-scenario config for one condition.
  sim::ScenarioConfig scenario_config(sim::Condition condition, std::uint64_t scenario_seed) const;

  json to_json() const;
};

RunConfig config_from_json(const json& j);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace pedcross
