#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pedcross/errors.hpp"
#include "pedcross/image.hpp"
#include "pedcross/pose.hpp"
#include "pedcross/stereo.hpp"

namespace pedcross::sim {

enum class Condition { kBaseline, kScreenDisplay, kTrafficLight };

const char* to_string(Condition c);
Condition condition_from_string(const std::string& s);

/// Piecewise-constant vehicle speed: `kmh` applies from `t_s` onward.
struct SpeedSegment {
  double t_s = 0.0;
  double kmh = 12.0;
};

struct ScenarioConfig {
  int n_pedestrians = 6;
  double duration_s = 10.0;
  double frame_rate = 30.0;
  Condition condition = Condition::kBaseline;
  double cross_probability = 0.5;  // resolved for this scenario's condition
  double hesitation_s = 0.5;       // pre-walk pause for crossing agents
  double detection_miss_rate = 0.05;
  double false_positive_rate = 0.1;  // expected spurious detections per frame
  double keypoint_noise_sigma = 1.0;
  double keypoint_miss_rate = 0.02;
  int descriptor_dim = 32;
  double descriptor_noise_sigma = 0.08;
  std::uint64_t seed = 1;
  std::vector<SpeedSegment> vehicle_speed_profile{{0.0, 12.0}};

  // World geometry. Positions are in the ego/camera frame: x right, y down,
  // z forward; the vehicle corridor is the strip |x| <= corridor_width/2,
  // 0 < z <= corridor_length.
  double corridor_width = 2.0;
  double corridor_length = 12.0;
  double camera_height = 1.5;
  double range_limit_m = 15.0;  // visibility matches the downstream gate
  double min_visible_z = 2.6;
  double walk_speed_mean = 1.2;
  double walk_speed_std = 0.15;
  double background_depth_m = 25.0;

  int image_width = 384;
  int image_height = 240;
  stereo::CameraIntrinsics intrinsics;

  int n_frames() const { return static_cast<int>(duration_s * frame_rate); }
  double dt() const { return 1.0 / frame_rate; }

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

struct AgentState {
  stereo::Point3D pos;    // body center, ego frame
  double heading = 0.0;   // walk direction in the ground plane, radians
  double gait_phase = 0.0;
  bool visible = false;   // projectable, in range, in front of the camera
};

struct PedestrianAgent {
  int agent_id = 0;
  double height_m = 1.7;
  std::uint64_t texture_seed = 0;
  bool crossing_label = false;
  std::optional<int> crossing_frame;
  std::vector<AgentState> states;  // one per frame
};

struct VehicleState {
  int frame = 0;
  double speed_kmh = 0.0;
};

struct Scenario {
  ScenarioConfig config;
  std::vector<PedestrianAgent> agents;
  std::vector<VehicleState> vehicle;
};

/// One observed pedestrian in one frame.
struct Detection {
  int frame = 0;
  pose::Pose25 keypoints;
  pose::BoundingBox bbox;
  Eigen::VectorXd descriptor;      // unit norm
  std::optional<int> truth_agent;  // absent for simulator false positives
};

struct AgentRender {
  int agent_id = 0;
  int left_x0 = 0;
  int y0 = 0;
  int width = 0;
  int height = 0;
  int disparity_px = 0;  // horizontal offset between the left and right patch
};

struct StereoRender {
  GrayImage left;
  GrayImage right;
  std::vector<AgentRender> agents;
  std::vector<std::string> warnings;
};

double speed_at(const ScenarioConfig& config, double t_s);

/// True iff the position lies inside the vehicle corridor strip.
bool in_corridor(const ScenarioConfig& config, const stereo::Point3D& pos);

/// Deterministic under (config, seed); crossing labels are derived from the
/// generated geometry, so every labeled crosser really enters the corridor.
Scenario generate_scenario(const ScenarioConfig& config);

/// Noiseless projection of the canonical 25-keypoint skeleton for one agent.
pose::Pose25 project_agent_keypoints(const Scenario& scenario, int agent_index, int frame);

/// Fixed per-agent descriptor anchor; per-frame descriptors are drawn near it.
Eigen::VectorXd agent_descriptor_anchor(const ScenarioConfig& config, int agent_id);

/// Noisy detections for one frame: misses, keypoint noise, spurious
/// detections. Pure function of (config, seed, frame).
std::vector<Detection> render_detections(const Scenario& scenario, int frame);

/// Synthetic rectified pair: textured background plane plus one textured
/// rectangle per agent at its true disparity.
StereoRender render_stereo_pair(const Scenario& scenario, int frame,
                                const stereo::CameraIntrinsics& K);

}  // namespace pedcross::sim
