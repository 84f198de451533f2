#include "pedcross/config.hpp"

#include <fstream>
#include <set>

namespace pedcross {

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& path) {
  if (!obj.is_object()) throw ConfigError(path + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!allowed.count(key)) throw ConfigError("unknown config key: " + path + "." + key);
  }
}

double get_num(const json& sec, const char* key, double dflt, const std::string& path) {
  if (!sec.contains(key)) return dflt;
  if (!sec[key].is_number()) throw ConfigError(path + "." + key + " must be a number");
  return sec[key].get<double>();
}

int get_int(const json& sec, const char* key, int dflt, const std::string& path) {
  if (!sec.contains(key)) return dflt;
  if (!sec[key].is_number_integer()) throw ConfigError(path + "." + key + " must be an integer");
  return sec[key].get<int>();
}

std::string get_str(const json& sec, const char* key, const std::string& dflt,
                    const std::string& path) {
  if (!sec.contains(key)) return dflt;
  if (!sec[key].is_string()) throw ConfigError(path + "." + key + " must be a string");
  return sec[key].get<std::string>();
}

/// A per-condition value may be a single number (all conditions) or an object
/// keyed by condition name.
std::map<sim::Condition, double> get_per_condition(const json& sec, const char* key,
                                                   const std::map<sim::Condition, double>& dflt,
                                                   const std::string& path) {
  if (!sec.contains(key)) return dflt;
  const json& v = sec[key];
  std::map<sim::Condition, double> out = dflt;
  if (v.is_number()) {
    for (auto& [cond, value] : out) value = v.get<double>();
    return out;
  }
  check_keys(v, {"baseline", "screen_display", "traffic_light"}, path + "." + key);
  for (const auto& [name, value] : v.items()) {
    if (!value.is_number()) throw ConfigError(path + "." + key + "." + name + " must be a number");
    out[sim::condition_from_string(name)] = value.get<double>();
  }
  return out;
}

json per_condition_json(const std::map<sim::Condition, double>& m) {
  json out = json::object();
  for (const auto& [cond, value] : m) out[sim::to_string(cond)] = value;
  return out;
}

}  // namespace

sim::ScenarioConfig RunConfig::scenario_config(sim::Condition condition,
                                               std::uint64_t scenario_seed) const {
  sim::ScenarioConfig c;
  c.n_pedestrians = sim.n_pedestrians;
  c.duration_s = sim.duration_s;
  c.frame_rate = sim.frame_rate;
  c.condition = condition;
  c.cross_probability = sim.cross_probability.at(condition);
  c.hesitation_s = sim.hesitation_s.at(condition);
  c.detection_miss_rate = sim.detection_miss_rate;
  c.false_positive_rate = sim.false_positive_rate;
  c.keypoint_noise_sigma = sim.keypoint_noise_sigma;
  c.keypoint_miss_rate = sim.keypoint_miss_rate;
  c.descriptor_dim = sim.descriptor_dim;
  c.descriptor_noise_sigma = sim.descriptor_noise_sigma;
  c.seed = scenario_seed;
  c.vehicle_speed_profile = sim.vehicle_speed_profile;
  c.corridor_width = sim.corridor_width;
  c.corridor_length = sim.corridor_length;
  c.camera_height = sim.camera_height;
  c.range_limit_m = stereo.range_limit_m;
  c.min_visible_z = sim.min_visible_z;
  c.walk_speed_mean = sim.walk_speed_mean;
  c.walk_speed_std = sim.walk_speed_std;
  c.background_depth_m = sim.background_depth_m;
  c.image_width = stereo.image_width;
  c.image_height = stereo.image_height;
  c.intrinsics = stereo.intrinsics;
  return c;
}

RunConfig config_from_json(const json& j) {
  RunConfig cfg;
  check_keys(j, {"seed", "out_dir", "sim", "stereo", "pose", "tracker", "intent", "eval", "run"},
             "config");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer()) throw ConfigError("config.seed must be an integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  cfg.out_dir = get_str(j, "out_dir", cfg.out_dir, "config");

  if (j.contains("sim")) {
    const json& s = j["sim"];
    check_keys(s,
               {"n_pedestrians", "duration_s", "frame_rate", "cross_probability", "hesitation_s",
                "detection_miss_rate", "false_positive_rate", "keypoint_noise_sigma",
                "keypoint_miss_rate", "descriptor_dim", "descriptor_noise_sigma",
                "vehicle_speed_profile", "corridor_width", "corridor_length", "camera_height",
                "min_visible_z", "walk_speed_mean", "walk_speed_std", "background_depth_m"},
               "sim");
    SimSection& c = cfg.sim;
    c.n_pedestrians = get_int(s, "n_pedestrians", c.n_pedestrians, "sim");
    c.duration_s = get_num(s, "duration_s", c.duration_s, "sim");
    c.frame_rate = get_num(s, "frame_rate", c.frame_rate, "sim");
    c.cross_probability = get_per_condition(s, "cross_probability", c.cross_probability, "sim");
    c.hesitation_s = get_per_condition(s, "hesitation_s", c.hesitation_s, "sim");
    c.detection_miss_rate = get_num(s, "detection_miss_rate", c.detection_miss_rate, "sim");
    c.false_positive_rate = get_num(s, "false_positive_rate", c.false_positive_rate, "sim");
    c.keypoint_noise_sigma = get_num(s, "keypoint_noise_sigma", c.keypoint_noise_sigma, "sim");
    c.keypoint_miss_rate = get_num(s, "keypoint_miss_rate", c.keypoint_miss_rate, "sim");
    c.descriptor_dim = get_int(s, "descriptor_dim", c.descriptor_dim, "sim");
    c.descriptor_noise_sigma =
        get_num(s, "descriptor_noise_sigma", c.descriptor_noise_sigma, "sim");
    if (s.contains("vehicle_speed_profile")) {
      if (!s["vehicle_speed_profile"].is_array())
        throw ConfigError("sim.vehicle_speed_profile must be an array");
      c.vehicle_speed_profile.clear();
      for (const auto& seg : s["vehicle_speed_profile"]) {
        check_keys(seg, {"t", "kmh"}, "sim.vehicle_speed_profile[]");
        c.vehicle_speed_profile.push_back({get_num(seg, "t", 0.0, "sim.vehicle_speed_profile"),
                                           get_num(seg, "kmh", 12.0, "sim.vehicle_speed_profile")});
      }
    }
    c.corridor_width = get_num(s, "corridor_width", c.corridor_width, "sim");
    c.corridor_length = get_num(s, "corridor_length", c.corridor_length, "sim");
    c.camera_height = get_num(s, "camera_height", c.camera_height, "sim");
    c.min_visible_z = get_num(s, "min_visible_z", c.min_visible_z, "sim");
    c.walk_speed_mean = get_num(s, "walk_speed_mean", c.walk_speed_mean, "sim");
    c.walk_speed_std = get_num(s, "walk_speed_std", c.walk_speed_std, "sim");
    c.background_depth_m = get_num(s, "background_depth_m", c.background_depth_m, "sim");
  }

  if (j.contains("stereo")) {
    const json& s = j["stereo"];
    check_keys(s,
               {"f", "cx", "cy", "baseline", "image_width", "image_height", "block_size",
                "max_disparity", "ratio_test", "min_valid_fraction", "range_limit_m",
                "range_gate"},
               "stereo");
    StereoSection& c = cfg.stereo;
    c.intrinsics.f = get_num(s, "f", c.intrinsics.f, "stereo");
    c.intrinsics.cx = get_num(s, "cx", c.intrinsics.cx, "stereo");
    c.intrinsics.cy = get_num(s, "cy", c.intrinsics.cy, "stereo");
    c.intrinsics.baseline = get_num(s, "baseline", c.intrinsics.baseline, "stereo");
    c.image_width = get_int(s, "image_width", c.image_width, "stereo");
    c.image_height = get_int(s, "image_height", c.image_height, "stereo");
    c.block.block_size = get_int(s, "block_size", c.block.block_size, "stereo");
    c.block.max_disparity = get_int(s, "max_disparity", c.block.max_disparity, "stereo");
    c.block.ratio_test = get_num(s, "ratio_test", c.block.ratio_test, "stereo");
    c.min_valid_fraction = get_num(s, "min_valid_fraction", c.min_valid_fraction, "stereo");
    c.range_limit_m = get_num(s, "range_limit_m", c.range_limit_m, "stereo");
    const std::string gate = get_str(s, "range_gate", "euclidean", "stereo");
    if (gate == "euclidean")
      c.range_gate = stereo::RangeGate::kEuclidean;
    else if (gate == "depth")
      c.range_gate = stereo::RangeGate::kDepth;
    else
      throw ConfigError("stereo.range_gate must be 'euclidean' or 'depth'");
  }

  if (j.contains("pose")) {
    check_keys(j["pose"], {"bbox_margin"}, "pose");
    cfg.pose.bbox_margin = get_num(j["pose"], "bbox_margin", cfg.pose.bbox_margin, "pose");
  }

  if (j.contains("tracker")) {
    const json& s = j["tracker"];
    check_keys(s,
               {"lambda", "chi2_gate", "appearance_gate", "n_init", "max_age", "gallery_size",
                "pos_std_weight", "vel_std_weight", "meas_std_weight"},
               "tracker");
    track::TrackerParams& c = cfg.tracker;
    c.lambda = get_num(s, "lambda", c.lambda, "tracker");
    c.chi2_gate = get_num(s, "chi2_gate", c.chi2_gate, "tracker");
    c.appearance_gate = get_num(s, "appearance_gate", c.appearance_gate, "tracker");
    c.n_init = get_int(s, "n_init", c.n_init, "tracker");
    c.max_age = get_int(s, "max_age", c.max_age, "tracker");
    c.gallery_size = get_int(s, "gallery_size", c.gallery_size, "tracker");
    c.kalman.pos_std_weight = get_num(s, "pos_std_weight", c.kalman.pos_std_weight, "tracker");
    c.kalman.vel_std_weight = get_num(s, "vel_std_weight", c.kalman.vel_std_weight, "tracker");
    c.kalman.meas_std_weight = get_num(s, "meas_std_weight", c.kalman.meas_std_weight, "tracker");
    c.validate();
  }

  if (j.contains("intent")) {
    const json& s = j["intent"];
    check_keys(s,
               {"hidden_size", "appearance_dim", "learning_rate", "epochs", "chunk", "init",
                "init_scale", "decision_threshold", "trigger_band_lo", "trigger_band_hi",
                "trigger_min_speed_mps", "window_stride", "displacement_scale", "speed_scale"},
               "intent");
    IntentSection& c = cfg.intent;
    c.hidden_size = get_int(s, "hidden_size", c.hidden_size, "intent");
    c.appearance_dim = get_int(s, "appearance_dim", c.appearance_dim, "intent");
    c.learning_rate = get_num(s, "learning_rate", c.learning_rate, "intent");
    c.epochs = get_int(s, "epochs", c.epochs, "intent");
    c.chunk = get_int(s, "chunk", c.chunk, "intent");
    c.init = get_str(s, "init", c.init, "intent");
    if (c.init != "random" && c.init != "zero")
      throw ConfigError("intent.init must be 'random' or 'zero'");
    c.init_scale = get_num(s, "init_scale", c.init_scale, "intent");
    c.decision_threshold = get_num(s, "decision_threshold", c.decision_threshold, "intent");
    c.trigger_band_lo = get_num(s, "trigger_band_lo", c.trigger_band_lo, "intent");
    c.trigger_band_hi = get_num(s, "trigger_band_hi", c.trigger_band_hi, "intent");
    c.trigger_min_speed_mps =
        get_num(s, "trigger_min_speed_mps", c.trigger_min_speed_mps, "intent");
    c.window_stride = get_int(s, "window_stride", c.window_stride, "intent");
    c.displacement_scale = get_num(s, "displacement_scale", c.displacement_scale, "intent");
    c.speed_scale = get_num(s, "speed_scale", c.speed_scale, "intent");
    if (c.hidden_size < 1) throw ConfigError("intent.hidden_size must be >= 1");
    if (c.window_stride < 1) throw ConfigError("intent.window_stride must be >= 1");
  }

  if (j.contains("eval")) {
    check_keys(j["eval"], {"tracking_coverage_threshold"}, "eval");
    cfg.eval.tracking_coverage_threshold = get_num(
        j["eval"], "tracking_coverage_threshold", cfg.eval.tracking_coverage_threshold, "eval");
  }

  if (j.contains("run")) {
    const json& s = j["run"];
    check_keys(s, {"conditions", "train_scenarios_per_condition", "eval_scenarios_per_condition"},
               "run");
    RunSection& c = cfg.run;
    if (s.contains("conditions")) {
      if (!s["conditions"].is_array()) throw ConfigError("run.conditions must be an array");
      c.conditions.clear();
      for (const auto& name : s["conditions"])
        c.conditions.push_back(sim::condition_from_string(name.get<std::string>()));
      if (c.conditions.empty()) throw ConfigError("run.conditions must be nonempty");
    }
    c.train_scenarios_per_condition =
        get_int(s, "train_scenarios_per_condition", c.train_scenarios_per_condition, "run");
    c.eval_scenarios_per_condition =
        get_int(s, "eval_scenarios_per_condition", c.eval_scenarios_per_condition, "run");
    if (c.train_scenarios_per_condition < 1)
      throw ConfigError("run.train_scenarios_per_condition must be >= 1");
    if (c.eval_scenarios_per_condition < 1)
      throw ConfigError("run.eval_scenarios_per_condition must be >= 1");
  }

  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config file is not valid JSON: " + path.string());
  return config_from_json(j);
}

json RunConfig::to_json() const {
  json speed = json::array();
  for (const auto& seg : sim.vehicle_speed_profile) speed.push_back({{"t", seg.t_s}, {"kmh", seg.kmh}});
  json conditions = json::array();
  for (const auto& c : run.conditions) conditions.push_back(sim::to_string(c));
  return json{
      {"seed", seed},
      {"out_dir", out_dir},
      {"sim",
       {{"n_pedestrians", sim.n_pedestrians},
        {"duration_s", sim.duration_s},
        {"frame_rate", sim.frame_rate},
        {"cross_probability", per_condition_json(sim.cross_probability)},
        {"hesitation_s", per_condition_json(sim.hesitation_s)},
        {"detection_miss_rate", sim.detection_miss_rate},
        {"false_positive_rate", sim.false_positive_rate},
        {"keypoint_noise_sigma", sim.keypoint_noise_sigma},
        {"keypoint_miss_rate", sim.keypoint_miss_rate},
        {"descriptor_dim", sim.descriptor_dim},
        {"descriptor_noise_sigma", sim.descriptor_noise_sigma},
        {"vehicle_speed_profile", speed},
        {"corridor_width", sim.corridor_width},
        {"corridor_length", sim.corridor_length},
        {"camera_height", sim.camera_height},
        {"min_visible_z", sim.min_visible_z},
        {"walk_speed_mean", sim.walk_speed_mean},
        {"walk_speed_std", sim.walk_speed_std},
        {"background_depth_m", sim.background_depth_m}}},
      {"stereo",
       {{"f", stereo.intrinsics.f},
        {"cx", stereo.intrinsics.cx},
        {"cy", stereo.intrinsics.cy},
        {"baseline", stereo.intrinsics.baseline},
        {"image_width", stereo.image_width},
        {"image_height", stereo.image_height},
        {"block_size", stereo.block.block_size},
        {"max_disparity", stereo.block.max_disparity},
        {"ratio_test", stereo.block.ratio_test},
        {"min_valid_fraction", stereo.min_valid_fraction},
        {"range_limit_m", stereo.range_limit_m},
        {"range_gate",
         stereo.range_gate == pedcross::stereo::RangeGate::kEuclidean ? "euclidean" : "depth"}}},
      {"pose", {{"bbox_margin", pose.bbox_margin}}},
      {"tracker",
       {{"lambda", tracker.lambda},
        {"chi2_gate", tracker.chi2_gate},
        {"appearance_gate", tracker.appearance_gate},
        {"n_init", tracker.n_init},
        {"max_age", tracker.max_age},
        {"gallery_size", tracker.gallery_size},
        {"pos_std_weight", tracker.kalman.pos_std_weight},
        {"vel_std_weight", tracker.kalman.vel_std_weight},
        {"meas_std_weight", tracker.kalman.meas_std_weight}}},
      {"intent",
       {{"hidden_size", intent.hidden_size},
        {"appearance_dim", intent.appearance_dim},
        {"learning_rate", intent.learning_rate},
        {"epochs", intent.epochs},
        {"chunk", intent.chunk},
        {"init", intent.init},
        {"init_scale", intent.init_scale},
        {"decision_threshold", intent.decision_threshold},
        {"trigger_band_lo", intent.trigger_band_lo},
        {"trigger_band_hi", intent.trigger_band_hi},
        {"trigger_min_speed_mps", intent.trigger_min_speed_mps},
        {"window_stride", intent.window_stride},
        {"displacement_scale", intent.displacement_scale},
        {"speed_scale", intent.speed_scale}}},
      {"eval", {{"tracking_coverage_threshold", eval.tracking_coverage_threshold}}},
      {"run",
       {{"conditions", conditions},
        {"train_scenarios_per_condition", run.train_scenarios_per_condition},
        {"eval_scenarios_per_condition", run.eval_scenarios_per_condition}}},
  };
}

}  // namespace pedcross
