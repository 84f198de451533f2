#include "pedcross/pipeline.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>

#include "pedcross/random.hpp"

namespace pedcross::pipeline {

namespace {

json bbox_to_json(const pose::BoundingBox& b) { return json::array({b.x, b.y, b.width, b.height}); }

pose::BoundingBox bbox_from_json(const json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>(),
          j.at(3).get<double>()};
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

void require_schema(const json& header, const char* kind, const std::string& file) {
  if (header.value("schema_version", -1) != kSchemaVersion)
    throw FormatError(file + ": unsupported schema_version");
  if (header.value("kind", "") != kind)
    throw FormatError(file + ": expected kind '" + std::string(kind) + "'");
}

}  // namespace

json scenario_config_to_json(const sim::ScenarioConfig& c) {
  json speed = json::array();
  for (const auto& seg : c.vehicle_speed_profile) speed.push_back({{"t", seg.t_s}, {"kmh", seg.kmh}});
  return json{{"n_pedestrians", c.n_pedestrians},
              {"duration_s", c.duration_s},
              {"frame_rate", c.frame_rate},
              {"condition", sim::to_string(c.condition)},
              {"cross_probability", c.cross_probability},
              {"hesitation_s", c.hesitation_s},
              {"detection_miss_rate", c.detection_miss_rate},
              {"false_positive_rate", c.false_positive_rate},
              {"keypoint_noise_sigma", c.keypoint_noise_sigma},
              {"keypoint_miss_rate", c.keypoint_miss_rate},
              {"descriptor_dim", c.descriptor_dim},
              {"descriptor_noise_sigma", c.descriptor_noise_sigma},
              {"seed", c.seed},
              {"vehicle_speed_profile", speed},
              {"corridor_width", c.corridor_width},
              {"corridor_length", c.corridor_length},
              {"camera_height", c.camera_height},
              {"range_limit_m", c.range_limit_m},
              {"min_visible_z", c.min_visible_z},
              {"walk_speed_mean", c.walk_speed_mean},
              {"walk_speed_std", c.walk_speed_std},
              {"background_depth_m", c.background_depth_m},
              {"image_width", c.image_width},
              {"image_height", c.image_height},
              {"intrinsics",
               {{"f", c.intrinsics.f},
                {"cx", c.intrinsics.cx},
                {"cy", c.intrinsics.cy},
                {"baseline", c.intrinsics.baseline}}}};
}

sim::ScenarioConfig scenario_config_from_json(const json& j) {
  sim::ScenarioConfig c;
  c.n_pedestrians = j.at("n_pedestrians").get<int>();
  c.duration_s = j.at("duration_s").get<double>();
  c.frame_rate = j.at("frame_rate").get<double>();
  c.condition = sim::condition_from_string(j.at("condition").get<std::string>());
  c.cross_probability = j.at("cross_probability").get<double>();
  c.hesitation_s = j.at("hesitation_s").get<double>();
  c.detection_miss_rate = j.at("detection_miss_rate").get<double>();
  c.false_positive_rate = j.at("false_positive_rate").get<double>();
  c.keypoint_noise_sigma = j.at("keypoint_noise_sigma").get<double>();
  c.keypoint_miss_rate = j.at("keypoint_miss_rate").get<double>();
  c.descriptor_dim = j.at("descriptor_dim").get<int>();
  c.descriptor_noise_sigma = j.at("descriptor_noise_sigma").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.vehicle_speed_profile.clear();
  for (const auto& seg : j.at("vehicle_speed_profile"))
    c.vehicle_speed_profile.push_back({seg.at("t").get<double>(), seg.at("kmh").get<double>()});
  c.corridor_width = j.at("corridor_width").get<double>();
  c.corridor_length = j.at("corridor_length").get<double>();
  c.camera_height = j.at("camera_height").get<double>();
  c.range_limit_m = j.at("range_limit_m").get<double>();
  c.min_visible_z = j.at("min_visible_z").get<double>();
  c.walk_speed_mean = j.at("walk_speed_mean").get<double>();
  c.walk_speed_std = j.at("walk_speed_std").get<double>();
  c.background_depth_m = j.at("background_depth_m").get<double>();
  c.image_width = j.at("image_width").get<int>();
  c.image_height = j.at("image_height").get<int>();
  const json& k = j.at("intrinsics");
  c.intrinsics.f = k.at("f").get<double>();
  c.intrinsics.cx = k.at("cx").get<double>();
  c.intrinsics.cy = k.at("cy").get<double>();
  c.intrinsics.baseline = k.at("baseline").get<double>();
  return c;
}

void write_scenario_files(const sim::Scenario& scenario, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto& config = scenario.config;
  const int n_frames = config.n_frames();

  {
    std::ostringstream os;
    json header{{"schema_version", kSchemaVersion},
                {"type", "header"},
                {"kind", "scenario"},
                {"condition", sim::to_string(config.condition)},
                {"seed", config.seed},
                {"n_frames", n_frames},
                {"frame_rate", config.frame_rate},
                {"n_pedestrians", config.n_pedestrians},
                {"descriptor_dim", config.descriptor_dim}};
    os << header.dump() << "\n";
    for (int f = 0; f < n_frames; ++f) {
      json dets = json::array();
      for (const auto& det : sim::render_detections(scenario, f)) {
        json kps = json::array();
        for (const auto& k : det.keypoints.keypoints)
          kps.push_back(json::array({k.x, k.y, k.confidence}));
        json d{{"bbox", bbox_to_json(det.bbox)},
               {"keypoints", std::move(kps)},
               {"descriptor", vector_to_json(det.descriptor)}};
        d["truth_agent"] = det.truth_agent ? json(*det.truth_agent) : json(nullptr);
        dets.push_back(std::move(d));
      }
      json frame{{"type", "frame"},
                 {"frame", f},
                 {"speed_kmh", scenario.vehicle[f].speed_kmh},
                 {"detections", std::move(dets)}};
      os << frame.dump() << "\n";
    }
    atomic_write(dir / "scenario.jsonl", os.str());
  }

  {
    std::ostringstream os;
    json header{{"schema_version", kSchemaVersion},
                {"type", "header"},
                {"kind", "truth"},
                {"n_agents", static_cast<int>(scenario.agents.size())},
                {"config", scenario_config_to_json(config)}};
    os << header.dump() << "\n";
    for (const auto& agent : scenario.agents) {
      json states = json::array();
      for (const auto& st : agent.states)
        states.push_back(json::array({st.pos.x, st.pos.y, st.pos.z, st.heading, st.gait_phase,
                                      st.visible ? 1 : 0}));
      json a{{"type", "agent"},
             {"agent_id", agent.agent_id},
             {"crossing_label", agent.crossing_label},
             {"height_m", agent.height_m},
             {"texture_seed", agent.texture_seed},
             {"states", std::move(states)}};
      a["crossing_frame"] = agent.crossing_frame ? json(*agent.crossing_frame) : json(nullptr);
      os << a.dump() << "\n";
    }
    atomic_write(dir / "truth.jsonl", os.str());
  }
}

LoadedScenario load_scenario_files(const std::filesystem::path& dir) {
  LoadedScenario out;

  // Ground truth first: it carries the full scenario config.
  {
    const auto path = dir / "truth.jsonl";
    bool have_header = false;
    for_each_jsonl(path, [&](std::size_t line, const json& j) {
      const std::string type = j.value("type", "");
      if (type == "header") {
        require_schema(j, "truth", path.string());
        out.scenario.config = scenario_config_from_json(j.at("config"));
        have_header = true;
      } else if (type == "agent") {
        if (!have_header)
          throw FormatError(path.string() + ": line " + std::to_string(line) +
                            ": agent record before header");
        sim::PedestrianAgent agent;
        agent.agent_id = j.at("agent_id").get<int>();
        agent.crossing_label = j.at("crossing_label").get<bool>();
        if (!j.at("crossing_frame").is_null())
          agent.crossing_frame = j.at("crossing_frame").get<int>();
        agent.height_m = j.at("height_m").get<double>();
        agent.texture_seed = j.at("texture_seed").get<std::uint64_t>();
        for (const auto& st : j.at("states")) {
          sim::AgentState s;
          s.pos = {st.at(0).get<double>(), st.at(1).get<double>(), st.at(2).get<double>()};
          s.heading = st.at(3).get<double>();
          s.gait_phase = st.at(4).get<double>();
          s.visible = st.at(5).get<int>() != 0;
          agent.states.push_back(s);
        }
        out.scenario.agents.push_back(std::move(agent));
      } else {
        throw FormatError(path.string() + ": line " + std::to_string(line) +
                          ": unknown record type");
      }
    });
    if (!have_header) throw FormatError(path.string() + ": missing header");
  }

  const int n_frames = out.scenario.config.n_frames();
  out.detections.assign(n_frames, {});
  out.scenario.vehicle.resize(n_frames);

  {
    const auto path = dir / "scenario.jsonl";
    bool have_header = false;
    for_each_jsonl(path, [&](std::size_t line, const json& j) {
      const std::string type = j.value("type", "");
      if (type == "header") {
        require_schema(j, "scenario", path.string());
        have_header = true;
        return;
      }
      if (type != "frame")
        throw FormatError(path.string() + ": line " + std::to_string(line) +
                          ": unknown record type");
      if (!have_header)
        throw FormatError(path.string() + ": line " + std::to_string(line) +
                          ": frame record before header");
      const int f = j.at("frame").get<int>();
      if (f < 0 || f >= n_frames)
        throw FormatError(path.string() + ": line " + std::to_string(line) +
                          ": frame index out of range");
      out.scenario.vehicle[f] = {f, j.at("speed_kmh").get<double>()};
      for (const auto& d : j.at("detections")) {
        sim::Detection det;
        det.frame = f;
        const auto& kps = d.at("keypoints");
        if (kps.size() != pose::kKeypointCount25)
          throw FormatError(path.string() + ": line " + std::to_string(line) +
                            ": detection must have 25 keypoints");
        for (int i = 0; i < pose::kKeypointCount25; ++i)
          det.keypoints.keypoints[i] = {kps[i].at(0).get<double>(), kps[i].at(1).get<double>(),
                                        kps[i].at(2).get<double>()};
        det.bbox = bbox_from_json(d.at("bbox"));
        det.descriptor = vector_from_json(d.at("descriptor"));
        if (!d.at("truth_agent").is_null()) det.truth_agent = d.at("truth_agent").get<int>();
        out.detections[f].push_back(std::move(det));
      }
    });
    if (!have_header) throw FormatError(path.string() + ": missing header");
  }
  return out;
}

// ---- model serialization ----

namespace {

constexpr char kModelMagic[4] = {'P', 'X', 'G', '1'};

}  // namespace

void save_model(const intent::StackedGruModel& model, const std::filesystem::path& path) {
  model.validate();
  json header{{"schema_version", kSchemaVersion},
              {"kind", "gru_model"},
              {"dims",
               {{"appearance", model.dims.appearance},
                {"surroundings", model.dims.surroundings},
                {"pose", model.dims.pose},
                {"displacement", model.dims.displacement},
                {"speed", model.dims.speed},
                {"hidden", model.dims.hidden}}},
              {"displacement_scale", model.displacement_scale},
              {"speed_scale", model.speed_scale}};

  json tensors = json::array();
  std::vector<const Eigen::MatrixXd*> order;
  std::vector<Eigen::MatrixXd> head_storage;
  head_storage.reserve(3 * intent::kNumLayers + 1);  // stable addresses for `order`
  const auto add = [&](const std::string& name, const Eigen::MatrixXd& m) {
    tensors.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
    order.push_back(&m);
  };
  for (int l = 0; l < intent::kNumLayers; ++l) {
    const auto& layer = model.layers[l];
    const std::string p = "layer" + std::to_string(l) + ".";
    add(p + "Wz", layer.Wz);
    add(p + "Wr", layer.Wr);
    add(p + "Wh", layer.Wh);
    add(p + "Uz", layer.Uz);
    add(p + "Ur", layer.Ur);
    add(p + "Uh", layer.Uh);
    head_storage.emplace_back(layer.bz);
    add(p + "bz", head_storage.back());
    head_storage.emplace_back(layer.br);
    add(p + "br", head_storage.back());
    head_storage.emplace_back(layer.bh);
    add(p + "bh", head_storage.back());
  }
  head_storage.emplace_back(model.head_w);
  add("head.w", head_storage.back());
  Eigen::MatrixXd head_b(1, 1);
  head_b(0, 0) = model.head_b;
  add("head.b", head_b);
  header["tensors"] = tensors;

  const std::string header_str = header.dump();
  std::ostringstream os(std::ios::binary);
  os.write(kModelMagic, 4);
  const std::uint32_t len = static_cast<std::uint32_t>(header_str.size());
  os.write(reinterpret_cast<const char*>(&len), sizeof(len));
  os << header_str;
  for (const auto* m : order)
    for (Eigen::Index j = 0; j < m->cols(); ++j)
      for (Eigen::Index i = 0; i < m->rows(); ++i) {
        const double v = (*m)(i, j);
        os.write(reinterpret_cast<const char*>(&v), sizeof(v));
      }
  atomic_write(path, os.str());
}

intent::StackedGruModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open model file: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kModelMagic, 4) != 0)
    throw FormatError(path.string() + ": not a model file (bad magic)");
  std::uint32_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || len == 0 || len > (1u << 24)) throw FormatError(path.string() + ": bad header length");
  std::string header_str(len, '\0');
  in.read(header_str.data(), len);
  if (!in) throw FormatError(path.string() + ": truncated header");
  json header = json::parse(header_str, nullptr, false);
  if (header.is_discarded()) throw FormatError(path.string() + ": malformed header JSON");
  if (header.value("schema_version", -1) != kSchemaVersion)
    throw FormatError(path.string() + ": unsupported schema_version");
  if (header.value("kind", "") != "gru_model")
    throw FormatError(path.string() + ": not a gru_model file");

  intent::GruDims dims;
  const json& d = header.at("dims");
  dims.appearance = d.at("appearance").get<int>();
  dims.surroundings = d.at("surroundings").get<int>();
  dims.pose = d.at("pose").get<int>();
  dims.displacement = d.at("displacement").get<int>();
  dims.speed = d.at("speed").get<int>();
  dims.hidden = d.at("hidden").get<int>();

  intent::StackedGruModel model = intent::StackedGruModel::zeros(dims);
  model.displacement_scale = header.at("displacement_scale").get<double>();
  model.speed_scale = header.at("speed_scale").get<double>();

  std::map<std::string, Eigen::MatrixXd*> slots;
  std::vector<Eigen::MatrixXd> bias_tmp;  // biases load via 1-col matrices
  for (int l = 0; l < intent::kNumLayers; ++l) {
    auto& layer = model.layers[l];
    const std::string p = "layer" + std::to_string(l) + ".";
    slots[p + "Wz"] = &layer.Wz;
    slots[p + "Wr"] = &layer.Wr;
    slots[p + "Wh"] = &layer.Wh;
    slots[p + "Uz"] = &layer.Uz;
    slots[p + "Ur"] = &layer.Ur;
    slots[p + "Uh"] = &layer.Uh;
  }

  for (const auto& t : header.at("tensors")) {
    const std::string name = t.at("name").get<std::string>();
    const Eigen::Index rows = t.at("rows").get<Eigen::Index>();
    const Eigen::Index cols = t.at("cols").get<Eigen::Index>();
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) {
        double v;
        in.read(reinterpret_cast<char*>(&v), sizeof(v));
        if (!in) throw FormatError(path.string() + ": truncated tensor data for " + name);
        m(i, j) = v;
      }

    const auto slot = slots.find(name);
    if (slot != slots.end()) {
      if (slot->second->rows() != rows || slot->second->cols() != cols)
        throw FormatError(path.string() + ": shape mismatch for tensor " + name);
      *slot->second = std::move(m);
      continue;
    }
    const auto expect_vec = [&](Eigen::VectorXd& dst) {
      if (cols != 1 || rows != dst.size())
        throw FormatError(path.string() + ": shape mismatch for tensor " + name);
      dst = m.col(0);
    };
    bool handled = true;
    if (name == "head.w")
      expect_vec(model.head_w);
    else if (name == "head.b") {
      if (rows != 1 || cols != 1)
        throw FormatError(path.string() + ": shape mismatch for tensor " + name);
      model.head_b = m(0, 0);
    } else {
      handled = false;
      for (int l = 0; l < intent::kNumLayers && !handled; ++l) {
        const std::string p = "layer" + std::to_string(l) + ".";
        if (name == p + "bz") {
          expect_vec(model.layers[l].bz);
          handled = true;
        } else if (name == p + "br") {
          expect_vec(model.layers[l].br);
          handled = true;
        } else if (name == p + "bh") {
          expect_vec(model.layers[l].bh);
          handled = true;
        }
      }
    }
    if (!handled) throw FormatError(path.string() + ": unknown tensor " + name);
  }
  model.validate();
  return model;
}

// ---- tracking stage ----

TrackStageOutput run_tracking(const RunConfig& cfg, const LoadedScenario& loaded) {
  const sim::Scenario& scenario = loaded.scenario;
  const sim::ScenarioConfig& scen = scenario.config;
  const int n_frames = scen.n_frames();

  TrackStageOutput out;
  out.frame_rate = scen.frame_rate;
  out.n_frames = n_frames;
  out.condition = scen.condition;

  track::Tracker tracker(cfg.tracker);
  const auto& K = scen.intrinsics;

  for (int f = 0; f < n_frames; ++f) {
    const auto render = sim::render_stereo_pair(scenario, f, K);
    const auto dmap = stereo::block_match(render.left, render.right, cfg.stereo.block);

    std::vector<track::TrackerDetection> kept;
    std::vector<std::optional<stereo::Point3D>> kept_range;
    for (const auto& det : loaded.detections[f]) {
      if (!pose::is_valid_pose(det.keypoints, cfg.pose.bbox_margin)) continue;
      const auto range =
          stereo::pedestrian_distance(det.bbox, dmap, K, cfg.stereo.min_valid_fraction);
      if (!range || !stereo::within_range(*range, cfg.stereo.range_limit_m, cfg.stereo.range_gate))
        continue;
      track::TrackerDetection td;
      td.bbox = det.bbox;
      td.descriptor = det.descriptor;
      td.pose36 = pose::normalize_pose(pose::reduce_to_18(det.keypoints), det.bbox);
      td.truth_agent = det.truth_agent;
      kept.push_back(std::move(td));
      kept_range.push_back(range);
    }

    const track::StepResult step = tracker.step(kept);
    out.tracks_created += static_cast<int>(step.new_track_ids.size());
    out.associations.insert(out.associations.end(), step.matches.begin(), step.matches.end());

    eval::FrameObservation obs;
    obs.frame = f;
    for (const auto& det : kept)
      if (det.truth_agent) obs.detected_agents.push_back(*det.truth_agent);
    std::map<int, int> matched_det;  // track_id -> detection index
    for (const auto& m : step.matches) {
      matched_det[m.track_id] = m.det_index;
      if (kept[m.det_index].truth_agent)
        obs.matched.emplace_back(*kept[m.det_index].truth_agent, m.track_id);
    }
    out.frame_observations.push_back(std::move(obs));

    const double speed = scenario.vehicle[f].speed_kmh;
    for (const auto& t : tracker.tracks()) {
      if (t.status == track::TrackStatus::kConfirmed) out.confirmed_ids.insert(t.id);

      intent::TrackFrameData fd;
      fd.frame = f;
      fd.bbox = t.bbox();
      fd.pose36 = t.last_pose;
      fd.speed_kmh = speed;
      fd.confirmed = t.status == track::TrackStatus::kConfirmed;

      const auto it = matched_det.find(t.id);
      fd.matched = it != matched_det.end();
      if (fd.matched) {
        fd.truth_agent = kept[it->second].truth_agent;
        fd.range = kept_range[it->second];
      } else {
        // Coasting: measure depth at the predicted box.
        fd.range = stereo::pedestrian_distance(fd.bbox, dmap, K, cfg.stereo.min_valid_fraction);
      }

      auto& frames = out.track_frames[t.id];
      try {
        const auto ctx =
            intent::extract_local_context(render.left, fd.bbox, cfg.intent.appearance_dim);
        fd.appearance = ctx.appearance;
        fd.surroundings = ctx.surroundings;
      } catch (const InputError&) {
        // Box drifted outside the image; freeze the last features.
        if (!frames.empty()) {
          fd.appearance = frames.back().appearance;
          fd.surroundings = frames.back().surroundings;
        } else {
          fd.appearance = Eigen::VectorXd::Zero(cfg.intent.appearance_dim);
          fd.surroundings = Eigen::VectorXd::Zero(cfg.intent.appearance_dim);
        }
      }
      frames.push_back(std::move(fd));
    }
  }
  return out;
}

void write_tracks_file(const TrackStageOutput& out, const RunConfig& cfg,
                       const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ostringstream os;
  json header{{"schema_version", kSchemaVersion},
              {"type", "header"},
              {"kind", "tracks"},
              {"condition", sim::to_string(out.condition)},
              {"frame_rate", out.frame_rate},
              {"n_frames", out.n_frames},
              {"lambda", cfg.tracker.lambda}};
  os << header.dump() << "\n";

  for (const auto& obs : out.frame_observations) {
    json matched = json::array();
    for (const auto& [agent, track] : obs.matched) matched.push_back(json::array({agent, track}));
    json rec{{"type", "frame_log"},
             {"frame", obs.frame},
             {"det_truth", obs.detected_agents},
             {"matched", std::move(matched)}};
    os << rec.dump() << "\n";
  }
  for (const auto& a : out.associations) {
    json rec{{"type", "assoc"}, {"frame", a.frame}, {"track_id", a.track_id},
             {"det", a.det_index}, {"d1", a.d1},     {"d2", a.d2},
             {"cost", a.cost}};
    os << rec.dump() << "\n";
  }
  for (const auto& [id, frames] : out.track_frames) {
    for (const auto& fd : frames) {
      json rec{{"type", "state"},
               {"frame", fd.frame},
               {"track_id", id},
               {"confirmed", fd.confirmed},
               {"matched", fd.matched},
               {"bbox", bbox_to_json(fd.bbox)},
               {"speed_kmh", fd.speed_kmh},
               {"app", vector_to_json(fd.appearance)},
               {"sur", vector_to_json(fd.surroundings)}};
      json p = json::array();
      for (double v : fd.pose36.values) p.push_back(v);
      rec["pose"] = std::move(p);
      rec["range"] = fd.range ? json::array({fd.range->x, fd.range->y, fd.range->z})
                              : json(nullptr);
      rec["truth_agent"] = fd.truth_agent ? json(*fd.truth_agent) : json(nullptr);
      os << rec.dump() << "\n";
    }
  }
  json summary{{"type", "summary"},
               {"frames", out.n_frames},
               {"tracks_created", out.tracks_created},
               {"confirmed_tracks", static_cast<int>(out.confirmed_ids.size())}};
  os << summary.dump() << "\n";
  atomic_write(dir / "tracks.jsonl", os.str());
}

TrackStageOutput load_tracks_file(const std::filesystem::path& dir) {
  TrackStageOutput out;
  const auto path = dir / "tracks.jsonl";
  bool have_header = false;
  std::map<int, eval::FrameObservation> observations;
  for_each_jsonl(path, [&](std::size_t line, const json& j) {
    const std::string type = j.value("type", "");
    if (type == "header") {
      require_schema(j, "tracks", path.string());
      out.frame_rate = j.at("frame_rate").get<double>();
      out.n_frames = j.at("n_frames").get<int>();
      out.condition = sim::condition_from_string(j.at("condition").get<std::string>());
      have_header = true;
    } else if (type == "frame_log") {
      eval::FrameObservation obs;
      obs.frame = j.at("frame").get<int>();
      for (const auto& a : j.at("det_truth")) obs.detected_agents.push_back(a.get<int>());
      for (const auto& m : j.at("matched"))
        obs.matched.emplace_back(m.at(0).get<int>(), m.at(1).get<int>());
      observations[obs.frame] = std::move(obs);
    } else if (type == "assoc") {
      track::AssociationRecord rec;
      rec.frame = j.at("frame").get<int>();
      rec.track_id = j.at("track_id").get<int>();
      rec.det_index = j.at("det").get<int>();
      rec.d1 = j.at("d1").get<double>();
      rec.d2 = j.at("d2").get<double>();
      rec.cost = j.at("cost").get<double>();
      out.associations.push_back(rec);
    } else if (type == "state") {
      intent::TrackFrameData fd;
      fd.frame = j.at("frame").get<int>();
      fd.confirmed = j.at("confirmed").get<bool>();
      fd.matched = j.at("matched").get<bool>();
      fd.bbox = bbox_from_json(j.at("bbox"));
      fd.speed_kmh = j.at("speed_kmh").get<double>();
      fd.appearance = vector_from_json(j.at("app"));
      fd.surroundings = vector_from_json(j.at("sur"));
      const auto& p = j.at("pose");
      if (p.size() != fd.pose36.values.size())
        throw FormatError(path.string() + ": line " + std::to_string(line) + ": bad pose length");
      for (std::size_t i = 0; i < fd.pose36.values.size(); ++i)
        fd.pose36.values[i] = p[i].get<double>();
      if (!j.at("range").is_null())
        fd.range = stereo::Point3D{j["range"].at(0).get<double>(), j["range"].at(1).get<double>(),
                                   j["range"].at(2).get<double>()};
      if (!j.at("truth_agent").is_null()) fd.truth_agent = j.at("truth_agent").get<int>();
      const int id = j.at("track_id").get<int>();
      out.track_frames[id].push_back(std::move(fd));
      if (j.at("confirmed").get<bool>()) out.confirmed_ids.insert(id);
    } else if (type == "summary") {
      out.tracks_created = j.at("tracks_created").get<int>();
    } else {
      throw FormatError(path.string() + ": line " + std::to_string(line) +
                        ": unknown record type");
    }
  });
  if (!have_header) throw FormatError(path.string() + ": missing header");
  for (auto& [frame, obs] : observations) out.frame_observations.push_back(std::move(obs));
  for (auto& [id, frames] : out.track_frames)
    std::sort(frames.begin(), frames.end(),
              [](const auto& a, const auto& b) { return a.frame < b.frame; });
  return out;
}

// ---- datasets ----

namespace {

std::optional<intent::ObservationWindow> window_ending_at(
    const std::vector<intent::TrackFrameData>& frames, int end_index, double frame_rate) {
  const int T = intent::window_length(frame_rate);
  if (end_index + 1 < T) return std::nullopt;
  const std::vector<intent::TrackFrameData> slice(frames.begin() + (end_index + 1 - T),
                                                  frames.begin() + (end_index + 1));
  return intent::build_window(slice, frame_rate);
}

/// Dominant truth agent over the matched frames in [begin, end]; requires a
/// clear majority so mixed-identity windows are not used for training.
std::optional<int> dominant_agent(const std::vector<intent::TrackFrameData>& frames, int begin,
                                  int end) {
  std::map<int, int> counts;
  int matched = 0;
  for (int i = begin; i <= end; ++i) {
    if (!frames[i].matched || !frames[i].truth_agent) continue;
    ++matched;
    ++counts[*frames[i].truth_agent];
  }
  if (matched < 3) return std::nullopt;
  int best_agent = -1, best = 0;
  for (const auto& [agent, c] : counts)
    if (c > best) {
      best = c;
      best_agent = agent;
    }
  if (best * 5 < matched * 4) return std::nullopt;  // < 80% dominance
  return best_agent;
}

}  // namespace

void harvest_training_windows(const RunConfig& cfg, const TrackStageOutput& tracks,
                              const std::map<int, bool>& agent_labels, WindowDataset& dataset) {
  const int T = intent::window_length(tracks.frame_rate);
  for (const auto& [id, frames] : tracks.track_frames) {
    for (int end = T - 1; end < static_cast<int>(frames.size());
         end += cfg.intent.window_stride) {
      auto window = window_ending_at(frames, end, tracks.frame_rate);
      if (!window) continue;
      const auto agent = dominant_agent(frames, end - T + 1, end);
      if (!agent) continue;
      const auto label = agent_labels.find(*agent);
      if (label == agent_labels.end()) continue;
      window->track_id = id;
      dataset.windows.push_back(std::move(*window));
      dataset.labels.push_back(label->second ? 1 : 0);
    }
  }
}

WindowDataset dataset_from_truth(const RunConfig& cfg, const sim::Scenario& scenario,
                                 int window_stride) {
  const auto& scen = scenario.config;
  const int n_frames = scen.n_frames();

  // Per agent, carry-forward streams over the frames where the agent is
  // visible; gaps (missed detections) reuse the last detection.
  std::map<int, std::vector<intent::TrackFrameData>> streams;
  for (int f = 0; f < n_frames; ++f) {
    const auto render = sim::render_stereo_pair(scenario, f, scen.intrinsics);
    std::map<int, const sim::Detection*> by_agent;
    const auto detections = sim::render_detections(scenario, f);
    for (const auto& det : detections)
      if (det.truth_agent) by_agent[*det.truth_agent] = &det;

    for (const auto& agent : scenario.agents) {
      if (!agent.states[f].visible) continue;
      auto& frames = streams[agent.agent_id];
      const auto it = by_agent.find(agent.agent_id);
      intent::TrackFrameData fd;
      fd.frame = f;
      fd.speed_kmh = scenario.vehicle[f].speed_kmh;
      fd.truth_agent = agent.agent_id;
      if (it != by_agent.end()) {
        fd.matched = true;
        fd.bbox = it->second->bbox;
        fd.pose36 = pose::normalize_pose(pose::reduce_to_18(it->second->keypoints),
                                         it->second->bbox);
      } else if (!frames.empty() && frames.back().frame == f - 1) {
        fd.matched = false;
        fd.bbox = frames.back().bbox;
        fd.pose36 = frames.back().pose36;
      } else {
        continue;  // no detection to seed the stream yet
      }
      try {
        const auto ctx =
            intent::extract_local_context(render.left, fd.bbox, cfg.intent.appearance_dim);
        fd.appearance = ctx.appearance;
        fd.surroundings = ctx.surroundings;
      } catch (const InputError&) {
        if (frames.empty()) continue;
        fd.appearance = frames.back().appearance;
        fd.surroundings = frames.back().surroundings;
      }
      // Reset the stream on a gap so windows stay frame-consecutive.
      if (!frames.empty() && frames.back().frame != f - 1) frames.clear();
      frames.push_back(std::move(fd));
    }
  }

  WindowDataset dataset;
  const int T = intent::window_length(scen.frame_rate);
  for (const auto& agent : scenario.agents) {
    const auto it = streams.find(agent.agent_id);
    if (it == streams.end()) continue;
    const auto& frames = it->second;
    for (int end = T - 1; end < static_cast<int>(frames.size()); end += window_stride) {
      auto window = window_ending_at(frames, end, scen.frame_rate);
      if (!window) continue;
      window->track_id = agent.agent_id;
      dataset.windows.push_back(std::move(*window));
      dataset.labels.push_back(agent.crossing_label ? 1 : 0);
    }
  }
  return dataset;
}

std::map<int, bool> load_agent_labels(const std::filesystem::path& dir) {
  std::map<int, bool> labels;
  for_each_jsonl(dir / "truth.jsonl", [&](std::size_t, const json& j) {
    if (j.value("type", "") == "agent")
      labels[j.at("agent_id").get<int>()] = j.at("crossing_label").get<bool>();
  });
  return labels;
}

// ---- prediction ----

std::vector<PredictionRecord> run_prediction(const RunConfig& cfg, const TrackStageOutput& tracks,
                                             const intent::StackedGruModel& model) {
  intent::TriggerPolicy policy(cfg.intent.trigger_band_lo, cfg.intent.trigger_band_hi,
                               cfg.intent.trigger_min_speed_mps);
  const int T = intent::window_length(tracks.frame_rate);

  // Frame-major iteration so triggers fire in chronological order.
  std::map<int, std::vector<std::pair<int, int>>> by_frame;  // frame -> (track, index)
  for (const auto& [id, frames] : tracks.track_frames)
    for (std::size_t i = 0; i < frames.size(); ++i)
      by_frame[frames[i].frame].emplace_back(id, static_cast<int>(i));

  std::vector<PredictionRecord> predictions;
  for (const auto& [frame, entries] : by_frame) {
    for (const auto& [id, index] : entries) {
      const auto& frames = tracks.track_frames.at(id);
      const intent::TrackFrameData& fd = frames[index];
      if (!fd.confirmed || !fd.range) continue;
      if (!policy.should_trigger(id, fd.range->z, fd.speed_kmh)) continue;
      auto window = window_ending_at(frames, index, tracks.frame_rate);
      if (!window) continue;
      window->track_id = id;
      const auto score = intent::score_window(model, *window, cfg.intent.decision_threshold);
      PredictionRecord rec;
      rec.track_id = id;
      rec.trigger_frame = frame;
      rec.probability = score.probability;
      rec.cross = score.cross;
      rec.truth_agent = dominant_agent(frames, index - T + 1, index);
      predictions.push_back(rec);
    }
  }
  return predictions;
}

void write_predictions_file(const std::vector<PredictionRecord>& predictions, const RunConfig& cfg,
                            sim::Condition condition, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ostringstream os;
  json header{{"schema_version", kSchemaVersion},
              {"type", "header"},
              {"kind", "predictions"},
              {"condition", sim::to_string(condition)},
              {"decision_threshold", cfg.intent.decision_threshold}};
  os << header.dump() << "\n";
  for (const auto& p : predictions) {
    json rec{{"type", "prediction"},
             {"track_id", p.track_id},
             {"trigger_frame", p.trigger_frame},
             {"probability", p.probability},
             {"label", p.cross ? "cross" : "not_cross"}};
    rec["truth_agent"] = p.truth_agent ? json(*p.truth_agent) : json(nullptr);
    os << rec.dump() << "\n";
  }
  atomic_write(dir / "predictions.jsonl", os.str());
}

std::vector<PredictionRecord> load_predictions_file(const std::filesystem::path& dir) {
  std::vector<PredictionRecord> out;
  const auto path = dir / "predictions.jsonl";
  bool have_header = false;
  for_each_jsonl(path, [&](std::size_t line, const json& j) {
    const std::string type = j.value("type", "");
    if (type == "header") {
      require_schema(j, "predictions", path.string());
      have_header = true;
      return;
    }
    if (type != "prediction")
      throw FormatError(path.string() + ": line " + std::to_string(line) +
                        ": unknown record type");
    PredictionRecord rec;
    rec.track_id = j.at("track_id").get<int>();
    rec.trigger_frame = j.at("trigger_frame").get<int>();
    rec.probability = j.at("probability").get<double>();
    rec.cross = j.at("label").get<std::string>() == "cross";
    if (!j.at("truth_agent").is_null()) rec.truth_agent = j.at("truth_agent").get<int>();
    out.push_back(rec);
  });
  if (!have_header) throw FormatError(path.string() + ": missing header");
  return out;
}

// ---- evaluation ----

eval::ScenarioOutcome evaluate_run_dir(const RunConfig& cfg, const std::filesystem::path& dir) {
  // Truth side: labels and per-agent visible frames.
  std::map<int, bool> labels;
  std::vector<eval::AgentFrameTruth> visibility;
  sim::Condition condition = sim::Condition::kBaseline;
  for_each_jsonl(dir / "truth.jsonl", [&](std::size_t, const json& j) {
    const std::string type = j.value("type", "");
    if (type == "header") {
      condition =
          sim::condition_from_string(j.at("config").at("condition").get<std::string>());
    } else if (type == "agent") {
      labels[j.at("agent_id").get<int>()] = j.at("crossing_label").get<bool>();
      eval::AgentFrameTruth at;
      at.agent_id = j.at("agent_id").get<int>();
      const auto& states = j.at("states");
      for (std::size_t f = 0; f < states.size(); ++f)
        if (states[f].at(5).get<int>() != 0) at.visible_frames.push_back(static_cast<int>(f));
      visibility.push_back(std::move(at));
    }
  });

  const TrackStageOutput tracks = load_tracks_file(dir);
  const auto predictions = load_predictions_file(dir);

  std::vector<eval::PredictionOutcome> outcomes;
  for (const auto& p : predictions)
    outcomes.push_back({p.track_id, p.cross, p.truth_agent});

  const auto confusion = eval::compute_confusion(outcomes, labels);
  const auto rates = eval::detection_tracking_rates(visibility, tracks.frame_observations,
                                                    cfg.eval.tracking_coverage_threshold);

  eval::ScenarioOutcome out;
  out.condition = condition;
  out.confusion = confusion.matrix;
  out.spurious_predictions = confusion.spurious;
  out.visible_events = rates.visible_events;
  out.detected_events = rates.detected_events;
  out.detected_agents = rates.detected_agents;
  out.tracked_agents = rates.tracked_agents;
  out.id_switches = rates.id_switches;
  return out;
}

eval::MetricsReport evaluate_dirs(const RunConfig& cfg,
                                  const std::vector<std::filesystem::path>& dirs) {
  std::vector<eval::ScenarioOutcome> outcomes;
  for (const auto& dir : dirs) outcomes.push_back(evaluate_run_dir(cfg, dir));
  return eval::condition_breakdown(outcomes);
}

namespace {

json metric_block_json(const eval::MetricBlock& m) {
  const auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return json{{"accuracy", opt(m.accuracy)},
              {"precision", opt(m.precision)},
              {"specificity", opt(m.specificity)},
              {"cross_recall", opt(m.cross_recall)},
              {"not_cross_recall", opt(m.not_cross_recall)}};
}

json condition_report_json(const eval::ConditionReport& r) {
  const auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return json{{"label", r.label},
              {"confusion",
               {{"tp", r.confusion.tp}, {"fp", r.confusion.fp}, {"tn", r.confusion.tn},
                {"fn", r.confusion.fn}}},
              {"metrics", metric_block_json(r.metrics)},
              {"detection_rate", opt(r.detection_rate)},
              {"tracking_rate", opt(r.tracking_rate)},
              {"spurious_predictions", r.spurious_predictions},
              {"id_switches", r.id_switches}};
}

}  // namespace

void write_report_files(const eval::MetricsReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  atomic_write(dir / "report.txt", eval::format_table(report));

  json j{{"schema_version", kSchemaVersion}, {"kind", "report"}};
  j["conditions"] = json::array();
  for (const auto& c : report.conditions) j["conditions"].push_back(condition_report_json(c));
  j["average"] = condition_report_json(report.average);
  atomic_write(dir / "report.json", j.dump(2) + "\n");

  for (const auto& c : report.conditions)
    atomic_write(dir / ("confusion_" + c.label + ".csv"), eval::confusion_csv(c.confusion));
  atomic_write(dir / "confusion_average.csv", eval::confusion_csv(report.average.confusion));
}

// ---- staging ----

namespace {

bool stage_fresh(const std::filesystem::path& manifest_path, const std::string& stage,
                 const std::string& params_checksum,
                 const std::map<std::string, std::string>& input_checksums,
                 const std::vector<std::filesystem::path>& outputs) {
  std::ifstream in(manifest_path);
  if (!in) return false;
  json m = json::parse(in, nullptr, false);
  if (m.is_discarded()) return false;
  if (m.value("schema_version", -1) != kSchemaVersion) return false;
  if (m.value("stage", "") != stage) return false;
  if (m.value("params_checksum", "") != params_checksum) return false;
  if (!m.contains("input_checksums") || m["input_checksums"] != json(input_checksums))
    return false;
  if (!m.contains("output_checksums")) return false;
  for (const auto& out : outputs) {
    const std::string name = out.filename().string();
    if (!m["output_checksums"].contains(name)) return false;
    if (!std::filesystem::exists(out)) return false;
    if (checksum_file(out) != m["output_checksums"][name].get<std::string>()) return false;
  }
  return true;
}

void write_manifest(const std::filesystem::path& manifest_path, const std::string& stage,
                    const std::string& params_checksum,
                    const std::map<std::string, std::string>& input_checksums,
                    const std::vector<std::filesystem::path>& outputs) {
  json outs = json::object();
  for (const auto& out : outputs) outs[out.filename().string()] = checksum_file(out);
  json m{{"schema_version", kSchemaVersion},
         {"stage", stage},
         {"params_checksum", params_checksum},
         {"input_checksums", input_checksums},
         {"output_checksums", outs}};
  atomic_write(manifest_path, m.dump(2) + "\n");
}

std::map<std::string, std::string> checksum_inputs(
    const std::vector<std::filesystem::path>& inputs) {
  std::map<std::string, std::string> out;
  for (const auto& p : inputs) out[p.string()] = checksum_file(p);
  return out;
}

}  // namespace

StageStatus stage_simulate(const RunConfig& cfg, const sim::ScenarioConfig& scen,
                           const std::filesystem::path& dir) {
  (void)cfg;
  const std::string params = checksum_string(scenario_config_to_json(scen).dump());
  const std::vector<std::filesystem::path> outputs = {dir / "scenario.jsonl", dir / "truth.jsonl"};
  const auto manifest = dir / "simulate.manifest.json";
  if (stage_fresh(manifest, "simulate", params, {}, outputs)) return {true};
  const sim::Scenario scenario = sim::generate_scenario(scen);
  write_scenario_files(scenario, dir);
  write_manifest(manifest, "simulate", params, {}, outputs);
  return {false};
}

namespace {

json track_stage_params(const RunConfig& cfg) {
  json j = cfg.to_json();
  return json{{"tracker", j["tracker"]},
              {"stereo", j["stereo"]},
              {"pose", j["pose"]},
              {"appearance_dim", cfg.intent.appearance_dim}};
}

json train_stage_params(const RunConfig& cfg) {
  json j = cfg.to_json();
  return json{{"intent", j["intent"]}, {"seed", cfg.seed}};
}

json predict_stage_params(const RunConfig& cfg) {
  return json{{"decision_threshold", cfg.intent.decision_threshold},
              {"trigger_band_lo", cfg.intent.trigger_band_lo},
              {"trigger_band_hi", cfg.intent.trigger_band_hi},
              {"trigger_min_speed_mps", cfg.intent.trigger_min_speed_mps}};
}

}  // namespace

StageStatus stage_track(const RunConfig& cfg, const std::filesystem::path& dir) {
  const std::string params = checksum_string(track_stage_params(cfg).dump());
  const auto inputs = checksum_inputs({dir / "scenario.jsonl", dir / "truth.jsonl"});
  const std::vector<std::filesystem::path> outputs = {dir / "tracks.jsonl"};
  const auto manifest = dir / "track.manifest.json";
  if (stage_fresh(manifest, "track", params, inputs, outputs)) return {true};
  const LoadedScenario loaded = load_scenario_files(dir);
  const TrackStageOutput out = run_tracking(cfg, loaded);
  write_tracks_file(out, cfg, dir);
  write_manifest(manifest, "track", params, inputs, outputs);
  return {false};
}

StageStatus stage_train(const RunConfig& cfg, const std::vector<std::filesystem::path>& run_dirs,
                        const std::filesystem::path& model_dir) {
  std::filesystem::create_directories(model_dir);
  const std::string params = checksum_string(train_stage_params(cfg).dump());
  std::vector<std::filesystem::path> input_paths;
  for (const auto& dir : run_dirs) {
    input_paths.push_back(dir / "tracks.jsonl");
    input_paths.push_back(dir / "truth.jsonl");
  }
  const auto inputs = checksum_inputs(input_paths);
  const std::vector<std::filesystem::path> outputs = {model_dir / "model.bin",
                                                      model_dir / "loss_curve.csv"};
  const auto manifest = model_dir / "train.manifest.json";
  if (stage_fresh(manifest, "train", params, inputs, outputs)) return {true};

  WindowDataset dataset;
  for (const auto& dir : run_dirs) {
    const TrackStageOutput tracks = load_tracks_file(dir);
    harvest_training_windows(cfg, tracks, load_agent_labels(dir), dataset);
  }
  if (dataset.windows.empty())
    throw InputError("stage_train: no training windows could be harvested");

  intent::GruDims dims;
  dims.appearance = cfg.intent.appearance_dim;
  dims.surroundings = cfg.intent.appearance_dim;
  dims.hidden = cfg.intent.hidden_size;
  intent::StackedGruModel model =
      cfg.intent.init == "zero"
          ? intent::StackedGruModel::zeros(dims)
          : intent::StackedGruModel::random_init(dims, mix_seed(cfg.seed, 0x6d0de1u),
                                                 cfg.intent.init_scale);
  model.displacement_scale = cfg.intent.displacement_scale;
  model.speed_scale = cfg.intent.speed_scale;

  intent::TrainHyperparams hp;
  hp.learning_rate = cfg.intent.learning_rate;
  hp.epochs = cfg.intent.epochs;
  hp.chunk = cfg.intent.chunk;
  const intent::TrainResult result = intent::train_toy(model, dataset.windows, dataset.labels, hp);

  save_model(model, model_dir / "model.bin");
  std::ostringstream csv;
  csv << "epoch,loss\n";
  for (std::size_t e = 0; e < result.loss_curve.size(); ++e)
    csv << e << "," << result.loss_curve[e] << "\n";
  atomic_write(model_dir / "loss_curve.csv", csv.str());
  write_manifest(manifest, "train", params, inputs, outputs);
  return {false};
}

StageStatus stage_predict(const RunConfig& cfg, const std::filesystem::path& run_dir,
                          const std::filesystem::path& model_path) {
  const std::string params = checksum_string(predict_stage_params(cfg).dump());
  const auto inputs = checksum_inputs({run_dir / "tracks.jsonl", model_path});
  const std::vector<std::filesystem::path> outputs = {run_dir / "predictions.jsonl"};
  const auto manifest = run_dir / "predict.manifest.json";
  if (stage_fresh(manifest, "predict", params, inputs, outputs)) return {true};
  const TrackStageOutput tracks = load_tracks_file(run_dir);
  const intent::StackedGruModel model = load_model(model_path);
  const auto predictions = run_prediction(cfg, tracks, model);
  write_predictions_file(predictions, cfg, tracks.condition, run_dir);
  write_manifest(manifest, "predict", params, inputs, outputs);
  return {false};
}

StageStatus stage_evaluate(const RunConfig& cfg, const std::vector<std::filesystem::path>& run_dirs,
                           const std::filesystem::path& report_dir) {
  std::filesystem::create_directories(report_dir);
  json params_json{{"eval", cfg.to_json()["eval"]}};
  const std::string params = checksum_string(params_json.dump());
  std::vector<std::filesystem::path> input_paths;
  for (const auto& dir : run_dirs) {
    input_paths.push_back(dir / "truth.jsonl");
    input_paths.push_back(dir / "tracks.jsonl");
    input_paths.push_back(dir / "predictions.jsonl");
  }
  const auto inputs = checksum_inputs(input_paths);
  const std::vector<std::filesystem::path> outputs = {report_dir / "report.txt",
                                                      report_dir / "report.json"};
  const auto manifest = report_dir / "evaluate.manifest.json";
  if (stage_fresh(manifest, "evaluate", params, inputs, outputs)) return {true};
  const auto report = evaluate_dirs(cfg, run_dirs);
  write_report_files(report, report_dir);
  write_manifest(manifest, "evaluate", params, inputs, outputs);
  return {false};
}

void run_all(const RunConfig& cfg, std::ostream& log) {
  const std::filesystem::path out_dir = cfg.out_dir;
  std::filesystem::create_directories(out_dir);
  atomic_write(out_dir / "config.resolved.json", cfg.to_json().dump(2) + "\n");

  struct RunDir {
    std::filesystem::path path;
    sim::Condition condition;
    bool is_eval;
  };
  std::vector<RunDir> runs;
  int condition_index = 0;
  for (const auto condition : cfg.run.conditions) {
    for (int k = 0; k < cfg.run.train_scenarios_per_condition; ++k)
      runs.push_back({out_dir / "runs" /
                          (std::string(sim::to_string(condition)) + "_train_" + std::to_string(k)),
                      condition, false});
    for (int k = 0; k < cfg.run.eval_scenarios_per_condition; ++k)
      runs.push_back({out_dir / "runs" /
                          (std::string(sim::to_string(condition)) + "_eval_" + std::to_string(k)),
                      condition, true});
    ++condition_index;
  }

  const auto log_stage = [&log](const std::string& name, const StageStatus& status) {
    log << (status.skipped ? "[skip] " : "[run]  ") << name << "\n";
  };

  condition_index = 0;
  int run_index = 0;
  for (const auto& run : runs) {
    const std::uint64_t scenario_seed =
        mix_seed(cfg.seed, 0x5ce0a100ull + static_cast<std::uint64_t>(run_index));
    const auto scen = cfg.scenario_config(run.condition, scenario_seed);
    log_stage("simulate " + run.path.string(), stage_simulate(cfg, scen, run.path));
    log_stage("track    " + run.path.string(), stage_track(cfg, run.path));
    ++run_index;
  }

  std::vector<std::filesystem::path> train_dirs, eval_dirs;
  for (const auto& run : runs) (run.is_eval ? eval_dirs : train_dirs).push_back(run.path);

  const auto model_dir = out_dir / "model";
  log_stage("train    " + model_dir.string(), stage_train(cfg, train_dirs, model_dir));

  for (const auto& dir : eval_dirs)
    log_stage("predict  " + dir.string(), stage_predict(cfg, dir, model_dir / "model.bin"));

  const auto report_dir = out_dir / "report";
  log_stage("evaluate " + report_dir.string(), stage_evaluate(cfg, eval_dirs, report_dir));

  std::ifstream table(report_dir / "report.txt");
  log << "\n" << table.rdbuf() << "\n";
}

}  // namespace pedcross::pipeline
