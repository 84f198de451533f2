#include "pedcross/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pedcross/random.hpp"

namespace pedcross::sim {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kBodyWidthRatio = 0.40;  // render rectangle width / body height
constexpr double kStrideLength = 0.9;     // meters per gait cycle

// Canonical body-25 skeleton in body units (height = 1): lateral and vertical
// offsets from the body center, plus sagittal gait swing.
struct KeypointOffset {
  double lat;
  double vert;
  double swing;
  double phase;
};

constexpr std::array<KeypointOffset, pose::kKeypointCount25> kSkeleton = {{
    {0.00, 0.44, 0.00, 0.0},    // 0 nose
    {0.00, 0.36, 0.00, 0.0},    // 1 neck
    {-0.10, 0.36, 0.00, 0.0},   // 2 right shoulder
    {-0.12, 0.22, 0.05, 0.0},   // 3 right elbow
    {-0.13, 0.10, 0.10, 0.0},   // 4 right wrist
    {0.10, 0.36, 0.00, 0.0},    // 5 left shoulder
    {0.12, 0.22, 0.05, kPi},    // 6 left elbow
    {0.13, 0.10, 0.10, kPi},    // 7 left wrist
    {0.00, 0.00, 0.00, 0.0},    // 8 mid hip
    {-0.06, 0.00, 0.00, 0.0},   // 9 right hip
    {-0.07, -0.25, 0.06, kPi},  // 10 right knee
    {-0.08, -0.46, 0.11, kPi},  // 11 right ankle
    {0.06, 0.00, 0.00, 0.0},    // 12 left hip
    {0.07, -0.25, 0.06, 0.0},   // 13 left knee
    {0.08, -0.46, 0.11, 0.0},   // 14 left ankle
    {-0.03, 0.45, 0.00, 0.0},   // 15 right eye
    {0.03, 0.45, 0.00, 0.0},    // 16 left eye
    {-0.05, 0.43, 0.00, 0.0},   // 17 right ear
    {0.05, 0.43, 0.00, 0.0},    // 18 left ear
    {0.09, -0.49, 0.12, 0.0},   // 19 left big toe
    {0.11, -0.49, 0.12, 0.0},   // 20 left small toe
    {0.06, -0.48, 0.10, 0.0},   // 21 left heel
    {-0.09, -0.49, 0.12, kPi},  // 22 right big toe
    {-0.11, -0.49, 0.12, kPi},  // 23 right small toe
    {-0.06, -0.48, 0.10, kPi},  // 24 right heel
}};

// Seed tags for the independent random streams.
constexpr std::uint64_t kTagAgent = 0x41674e74ull;
constexpr std::uint64_t kTagDescriptor = 0xde5c0000ull;
constexpr std::uint64_t kTagDetection = 0xde7ec700ull;
constexpr std::uint64_t kTagFalsePositive = 0xf4150000ull;
constexpr std::uint64_t kTagBackground = 0xb6000000ull;
constexpr std::uint64_t kTagTexture = 0x7e300000ull;

double ego_distance(const ScenarioConfig& config, double t_s) {
  // Integral of the piecewise-constant speed profile, km/h -> m/s.
  double s = 0.0;
  double t_prev = 0.0;
  double v_prev = config.vehicle_speed_profile.empty() ? 0.0
                                                       : config.vehicle_speed_profile.front().kmh;
  for (const auto& seg : config.vehicle_speed_profile) {
    if (seg.t_s >= t_s) break;
    s += (seg.t_s - t_prev) * v_prev / 3.6;
    t_prev = seg.t_s;
    v_prev = seg.kmh;
  }
  s += (t_s - t_prev) * v_prev / 3.6;
  return s;
}

struct HeadingSegment {
  double t_start;
  double jitter;
};

std::vector<HeadingSegment> make_heading_segments(Rng& rng, double duration_s) {
  std::vector<HeadingSegment> segments;
  double t = 0.0;
  while (t < duration_s) {
    segments.push_back({t, rng.gaussian(0.0, 0.06)});
    t += rng.uniform(1.0, 2.0);
  }
  return segments;
}

double jitter_at(const std::vector<HeadingSegment>& segments, double t) {
  double j = 0.0;
  for (const auto& s : segments) {
    if (s.t_start > t) break;
    j = s.jitter;
  }
  return j;
}

bool is_visible(const ScenarioConfig& config, const stereo::Point3D& pos, double height_m) {
  if (pos.z < config.min_visible_z) return false;
  if (pos.norm() > config.range_limit_m) return false;
  const auto& K = config.intrinsics;
  const double u = K.f * pos.x / pos.z + K.cx;
  const double v = K.f * pos.y / pos.z + K.cy;
  const double d = K.f * K.baseline / pos.z;
  const double h_px = K.f * height_m / pos.z;
  const double w_px = K.f * kBodyWidthRatio * height_m / pos.z;
  const double y0 = v - 0.5 * h_px, y1 = v + 0.5 * h_px;
  const double iy = std::max(0.0, std::min(y1, static_cast<double>(config.image_height)) -
                                      std::max(y0, 0.0));
  // The body rectangle must be in view in both cameras; near the left image
  // edge close agents fall into the stereo shadow where depth is unobtainable.
  for (const double shift : {0.0, d}) {
    const double x0 = u - shift - 0.5 * w_px, x1 = u - shift + 0.5 * w_px;
    const double ix = std::max(0.0, std::min(x1, static_cast<double>(config.image_width)) -
                                        std::max(x0, 0.0));
    if (ix * iy < 0.6 * w_px * h_px) return false;
  }
  return true;
}

}  // namespace

const char* to_string(Condition c) {
  switch (c) {
    case Condition::kBaseline:
      return "baseline";
    case Condition::kScreenDisplay:
      return "screen_display";
    case Condition::kTrafficLight:
      return "traffic_light";
  }
  return "unknown";
}

Condition condition_from_string(const std::string& s) {
  if (s == "baseline") return Condition::kBaseline;
  if (s == "screen_display") return Condition::kScreenDisplay;
  if (s == "traffic_light") return Condition::kTrafficLight;
  throw ConfigError("unknown condition: " + s);
}

void ScenarioConfig::validate() const {
  if (n_pedestrians < 0) throw ConfigError("sim.n_pedestrians must be >= 0");
  if (!(duration_s > 0.0)) throw ConfigError("sim.duration_s must be > 0");
  if (!(frame_rate > 0.0)) throw ConfigError("sim.frame_rate must be > 0");
  if (cross_probability < 0.0 || cross_probability > 1.0)
    throw ConfigError("sim.cross_probability must be in [0,1]");
  if (hesitation_s < 0.0) throw ConfigError("sim.hesitation_s must be >= 0");
  if (detection_miss_rate < 0.0 || detection_miss_rate > 1.0)
    throw ConfigError("sim.detection_miss_rate must be in [0,1]");
  if (false_positive_rate < 0.0) throw ConfigError("sim.false_positive_rate must be >= 0");
  if (keypoint_noise_sigma < 0.0) throw ConfigError("sim.keypoint_noise_sigma must be >= 0");
  if (keypoint_miss_rate < 0.0 || keypoint_miss_rate > 1.0)
    throw ConfigError("sim.keypoint_miss_rate must be in [0,1]");
  if (descriptor_dim < 2) throw ConfigError("sim.descriptor_dim must be >= 2");
  if (descriptor_noise_sigma < 0.0) throw ConfigError("sim.descriptor_noise_sigma must be >= 0");
  if (vehicle_speed_profile.empty()) throw ConfigError("sim.vehicle_speed_profile must be nonempty");
  for (const auto& seg : vehicle_speed_profile)
    if (seg.kmh < 0.0 || seg.kmh > 20.0)
      throw ConfigError("sim.vehicle_speed_profile speeds must be in [0,20] km/h");
  if (!(corridor_width > 0.0)) throw ConfigError("sim.corridor_width must be > 0");
  if (!(corridor_length > 0.0)) throw ConfigError("sim.corridor_length must be > 0");
  if (!(range_limit_m > 0.0)) throw ConfigError("sim.range_limit_m must be > 0");
  if (!(min_visible_z > 0.0)) throw ConfigError("sim.min_visible_z must be > 0");
  if (!(walk_speed_mean > 0.0)) throw ConfigError("sim.walk_speed_mean must be > 0");
  if (image_width < 32 || image_height < 32)
    throw ConfigError("sim.image dimensions must be at least 32x32");
  intrinsics.validate();
}

double speed_at(const ScenarioConfig& config, double t_s) {
  double v = config.vehicle_speed_profile.empty() ? 0.0 : config.vehicle_speed_profile.front().kmh;
  for (const auto& seg : config.vehicle_speed_profile) {
    if (seg.t_s > t_s) break;
    v = seg.kmh;
  }
  return v;
}

bool in_corridor(const ScenarioConfig& config, const stereo::Point3D& pos) {
  return std::abs(pos.x) <= 0.5 * config.corridor_width && pos.z > 0.0 &&
         pos.z <= config.corridor_length;
}

Scenario generate_scenario(const ScenarioConfig& config) {
  config.validate();
  Scenario scenario;
  scenario.config = config;

  const int n_frames = config.n_frames();
  const double dt = config.dt();
  scenario.vehicle.reserve(n_frames);
  for (int f = 0; f < n_frames; ++f)
    scenario.vehicle.push_back({f, speed_at(config, f * dt)});

  scenario.agents.reserve(config.n_pedestrians);
  for (int id = 0; id < config.n_pedestrians; ++id) {
    Rng rng(mix_seed(config.seed, kTagAgent + static_cast<std::uint64_t>(id)));
    PedestrianAgent agent;
    agent.agent_id = id;
    agent.height_m = rng.uniform(1.55, 1.90);
    agent.texture_seed = mix_seed(config.seed, kTagTexture + static_cast<std::uint64_t>(id));

    const bool wants_cross = rng.bernoulli(config.cross_probability);
    const double walk_speed = std::clamp(rng.gaussian(config.walk_speed_mean,
                                                      config.walk_speed_std),
                                         0.6, 2.0);
    const double half_w = 0.5 * config.corridor_width;

    double x_world, z_world, base_heading, pause_s = 0.0;
    bool standing = false;
    if (wants_cross) {
      const double side = rng.bernoulli(0.5) ? 1.0 : -1.0;
      pause_s = std::min(config.hesitation_s * rng.uniform(0.6, 1.4), 0.3 * config.duration_s);
      const double avail = std::max(config.duration_s - pause_s - 0.5, 0.5);
      const double lateral = std::clamp(half_w + walk_speed * avail * rng.uniform(0.35, 0.8),
                                        half_w + 1.0, 5.5);
      const double t_cross = pause_s + (lateral - half_w) / walk_speed;
      const double depth_at_cross =
          rng.uniform(3.2, std::max(3.4, std::min(9.5, config.corridor_length - 1.0)));
      x_world = side * lateral;
      z_world = ego_distance(config, t_cross) + depth_at_cross;
      base_heading = side > 0.0 ? kPi : 0.0;  // straight across, toward x = 0
    } else {
      standing = rng.bernoulli(0.15);
      const double side = rng.bernoulli(0.5) ? 1.0 : -1.0;
      const double lateral =
          rng.bernoulli(0.75) ? rng.uniform(half_w + 0.7, half_w + 1.6)
                              : rng.uniform(half_w + 1.6, half_w + 3.5);
      x_world = side * lateral;
      z_world = rng.uniform(6.0, 14.0);
      const double dir_z = rng.bernoulli(0.7) ? 1.0 : -1.0;
      base_heading = standing ? rng.uniform(0.0, 2.0 * kPi) : dir_z * 0.5 * kPi;
    }
    const auto segments = make_heading_segments(rng, config.duration_s);

    const double y_center = config.camera_height - 0.5 * agent.height_m;
    agent.states.resize(n_frames);
    double phase = rng.uniform(0.0, 2.0 * kPi);
    for (int f = 0; f < n_frames; ++f) {
      const double t = f * dt;
      const bool moving = !standing && t >= pause_s;
      const double heading = base_heading + (standing ? 0.0 : jitter_at(segments, t));

      AgentState& st = agent.states[f];
      st.pos = {x_world, y_center, z_world - ego_distance(config, t)};
      st.heading = heading;
      st.gait_phase = phase;
      st.visible = is_visible(config, st.pos, agent.height_m);

      if (moving) {
        x_world += walk_speed * std::cos(heading) * dt;
        z_world += walk_speed * std::sin(heading) * dt;
        phase += 2.0 * kPi * walk_speed * dt / kStrideLength;
      }
    }

    for (int f = 0; f < n_frames; ++f) {
      if (in_corridor(config, agent.states[f].pos)) {
        agent.crossing_frame = f;
        break;
      }
    }
    agent.crossing_label = agent.crossing_frame.has_value();
    scenario.agents.push_back(std::move(agent));
  }
  return scenario;
}

pose::Pose25 project_agent_keypoints(const Scenario& scenario, int agent_index, int frame) {
  const auto& config = scenario.config;
  if (agent_index < 0 || agent_index >= static_cast<int>(scenario.agents.size()))
    throw InputError("project_agent_keypoints: agent index out of range");
  if (frame < 0 || frame >= config.n_frames())
    throw InputError("project_agent_keypoints: frame out of range");

  const PedestrianAgent& agent = scenario.agents[agent_index];
  const AgentState& st = agent.states[frame];
  const auto& K = config.intrinsics;
  const double h = agent.height_m;
  // Movement direction in the ground (x, z) plane, and its perpendicular for
  // the shoulder axis.
  const double hx = std::cos(st.heading), hz = std::sin(st.heading);
  const double lx = -hz, lz = hx;

  pose::Pose25 out;
  for (int i = 0; i < pose::kKeypointCount25; ++i) {
    const KeypointOffset& o = kSkeleton[i];
    const double swing = o.swing * h * std::sin(st.gait_phase + o.phase);
    const double wx = st.pos.x + h * o.lat * lx + swing * hx;
    const double wz = st.pos.z + h * o.lat * lz + swing * hz;
    const double wy = st.pos.y - h * o.vert;
    if (wz <= 0.1) {
      out.keypoints[i] = {0.0, 0.0, 0.0};
      continue;
    }
    out.keypoints[i] = {K.f * wx / wz + K.cx, K.f * wy / wz + K.cy, 1.0};
  }
  return out;
}

Eigen::VectorXd agent_descriptor_anchor(const ScenarioConfig& config, int agent_id) {
  Rng rng(mix_seed(config.seed, kTagDescriptor + static_cast<std::uint64_t>(agent_id)));
  Eigen::VectorXd v(config.descriptor_dim);
  for (int i = 0; i < config.descriptor_dim; ++i) v(i) = rng.gaussian();
  v.normalize();
  return v;
}

std::vector<Detection> render_detections(const Scenario& scenario, int frame) {
  const auto& config = scenario.config;
  if (frame < 0 || frame >= config.n_frames())
    throw InputError("render_detections: frame out of range");

  std::vector<Detection> detections;
  const pose::ImageExtent extent{config.image_width, config.image_height};

  for (const auto& agent : scenario.agents) {
    const AgentState& st = agent.states[frame];
    if (!st.visible) continue;
    Rng rng(mix_seed(config.seed,
                     kTagDetection + static_cast<std::uint64_t>(frame) * 1000003ull +
                         static_cast<std::uint64_t>(agent.agent_id)));
    if (rng.bernoulli(config.detection_miss_rate)) continue;

    Detection det;
    det.frame = frame;
    det.keypoints = project_agent_keypoints(scenario, agent.agent_id, frame);
    for (auto& k : det.keypoints.keypoints) {
      if (!k.valid()) continue;
      if (rng.bernoulli(config.keypoint_miss_rate)) {
        k = {0.0, 0.0, 0.0};
        continue;
      }
      k.x += rng.gaussian(0.0, config.keypoint_noise_sigma);
      k.y += rng.gaussian(0.0, config.keypoint_noise_sigma);
      k.confidence = rng.uniform(0.7, 1.0);
    }
    if (det.keypoints.valid_count() < 2) continue;  // counts as a missed detection
    det.bbox = pose::bbox_from_pose(det.keypoints, extent);

    Eigen::VectorXd descriptor = agent_descriptor_anchor(config, agent.agent_id);
    for (int i = 0; i < config.descriptor_dim; ++i)
      descriptor(i) += rng.gaussian(0.0, config.descriptor_noise_sigma);
    descriptor.normalize();
    det.descriptor = std::move(descriptor);
    det.truth_agent = agent.agent_id;
    detections.push_back(std::move(det));
  }

  // Spurious detections, unlinked to any agent.
  Rng fp_rng(mix_seed(config.seed, kTagFalsePositive + static_cast<std::uint64_t>(frame)));
  const int n_fp = fp_rng.poisson(config.false_positive_rate);
  for (int s = 0; s < n_fp; ++s) {
    const double box_h = fp_rng.uniform(40.0, 120.0);
    const double box_w = box_h * fp_rng.uniform(0.30, 0.55);
    const double cx = fp_rng.uniform(0.1, 0.9) * config.image_width;
    const double cy = fp_rng.uniform(0.3, 0.8) * config.image_height;

    Detection det;
    det.frame = frame;
    for (auto& k : det.keypoints.keypoints) {
      if (fp_rng.bernoulli(0.85)) {
        k.x = cx + fp_rng.uniform(-0.5, 0.5) * box_w;
        k.y = cy + fp_rng.uniform(-0.5, 0.5) * box_h;
        k.confidence = fp_rng.uniform(0.2, 1.0);
      } else {
        k = {0.0, 0.0, 0.0};
      }
    }
    if (det.keypoints.valid_count() < 2) continue;
    det.bbox = pose::bbox_from_pose(det.keypoints, extent);
    Eigen::VectorXd descriptor(config.descriptor_dim);
    for (int i = 0; i < config.descriptor_dim; ++i) descriptor(i) = fp_rng.gaussian();
    descriptor.normalize();
    det.descriptor = std::move(descriptor);
    detections.push_back(std::move(det));
  }
  return detections;
}

StereoRender render_stereo_pair(const Scenario& scenario, int frame,
                                const stereo::CameraIntrinsics& K) {
  const auto& config = scenario.config;
  if (frame < 0 || frame >= config.n_frames())
    throw InputError("render_stereo_pair: frame out of range");
  K.validate();

  const int w = config.image_width;
  const int h = config.image_height;
  StereoRender out;
  out.left = GrayImage(w, h);
  out.right = GrayImage(w, h);

  // Background: a textured fronto-parallel plane at background_depth_m, so
  // block matching has a well-posed answer everywhere.
  const std::uint64_t bg_seed = mix_seed(config.seed, kTagBackground);
  const int d_bg = std::max(
      1, static_cast<int>(std::lround(K.f * K.baseline / config.background_depth_m)));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out.right.at(x, y) = static_cast<std::uint8_t>(hash01(bg_seed, x, y) * 255.0);
      out.left.at(x, y) = static_cast<std::uint8_t>(hash01(bg_seed, x - d_bg, y) * 255.0);
    }
  }

  // Agents far to near so closer ones overwrite.
  std::vector<int> order(scenario.agents.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return scenario.agents[a].states[frame].pos.z > scenario.agents[b].states[frame].pos.z;
  });

  for (int idx : order) {
    const PedestrianAgent& agent = scenario.agents[idx];
    const AgentState& st = agent.states[frame];
    if (st.pos.z <= 0.0) {
      out.warnings.push_back("agent " + std::to_string(agent.agent_id) +
                             " behind camera at frame " + std::to_string(frame) + ", skipped");
      continue;
    }
    if (st.pos.z < 0.2) {
      out.warnings.push_back("agent " + std::to_string(agent.agent_id) +
                             " too close to render at frame " + std::to_string(frame) +
                             ", skipped");
      continue;
    }
    const double u = K.f * st.pos.x / st.pos.z + K.cx;
    const double v = K.f * st.pos.y / st.pos.z + K.cy;
    const int rect_h = std::max(2, static_cast<int>(std::lround(K.f * agent.height_m / st.pos.z)));
    const int rect_w = std::max(
        2, static_cast<int>(std::lround(K.f * kBodyWidthRatio * agent.height_m / st.pos.z)));
    const int x0 = static_cast<int>(std::lround(u - 0.5 * rect_w));
    const int y0 = static_cast<int>(std::lround(v - 0.5 * rect_h));
    const int shift = static_cast<int>(std::lround(K.f * K.baseline / st.pos.z));

    for (int dy = 0; dy < rect_h; ++dy) {
      for (int dx = 0; dx < rect_w; ++dx) {
        const auto value =
            static_cast<std::uint8_t>(hash01(agent.texture_seed, dx, dy) * 255.0);
        const int xl = x0 + dx, y = y0 + dy;
        if (out.left.in_bounds(xl, y)) out.left.at(xl, y) = value;
        const int xr = xl - shift;
        if (out.right.in_bounds(xr, y)) out.right.at(xr, y) = value;
      }
    }
    out.agents.push_back({agent.agent_id, x0, y0, rect_w, rect_h, shift});
  }
  return out;
}

}  // namespace pedcross::sim
