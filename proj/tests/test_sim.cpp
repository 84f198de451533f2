#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "pedcross/pipeline.hpp"
#include "pedcross/random.hpp"
#include "pedcross/sim.hpp"
#include "pedcross/stereo.hpp"

using namespace pedcross;
using sim::ScenarioConfig;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("config validation names the offending field") {
  ScenarioConfig c;
  c.duration_s = 0.0;
  try {
    sim::generate_scenario(c);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("duration") != std::string::npos);
  }

  ScenarioConfig bad_rate;
  bad_rate.detection_miss_rate = 1.5;
  CHECK_THROWS_AS(sim::generate_scenario(bad_rate), ConfigError);

  ScenarioConfig bad_dim;
  bad_dim.descriptor_dim = 1;
  CHECK_THROWS_AS(sim::generate_scenario(bad_dim), ConfigError);

  ScenarioConfig fast;
  fast.vehicle_speed_profile = {{0.0, 25.0}};  // above the 20 km/h cap
  CHECK_THROWS_AS(sim::generate_scenario(fast), ConfigError);
}

TEST_CASE("empty scenario has a vehicle trace and nothing else") {
  ScenarioConfig c;
  c.n_pedestrians = 0;
  c.false_positive_rate = 0.0;
  c.seed = 5;
  const auto s = sim::generate_scenario(c);
  CHECK(s.agents.empty());
  CHECK(static_cast<int>(s.vehicle.size()) == c.n_frames());
  for (int f = 0; f < c.n_frames(); ++f) CHECK(sim::render_detections(s, f).empty());
}

TEST_CASE("identical config and seed produce byte-identical files") {
  ScenarioConfig c;
  c.n_pedestrians = 4;
  c.duration_s = 3.0;
  c.seed = 99;
  const auto dir1 = std::filesystem::temp_directory_path() / "pedcross_det_a";
  const auto dir2 = std::filesystem::temp_directory_path() / "pedcross_det_b";
  pipeline::write_scenario_files(sim::generate_scenario(c), dir1);
  pipeline::write_scenario_files(sim::generate_scenario(c), dir2);
  CHECK(slurp(dir1 / "scenario.jsonl") == slurp(dir2 / "scenario.jsonl"));
  CHECK(slurp(dir1 / "truth.jsonl") == slurp(dir2 / "truth.jsonl"));
  std::filesystem::remove_all(dir1);
  std::filesystem::remove_all(dir2);
}

TEST_CASE("crossing fraction tracks the configured probability") {
  // 100 agents x 50 seeds of Bernoulli(0.5); the observed fraction must fall
  // inside [0.4, 0.6], far wider than the binomial 99% interval (~±0.018).
  ScenarioConfig c;
  c.n_pedestrians = 100;
  c.duration_s = 8.0;
  c.cross_probability = 0.5;
  long crossers = 0, total = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    c.seed = seed;
    const auto s = sim::generate_scenario(c);
    for (const auto& agent : s.agents) {
      ++total;
      crossers += agent.crossing_label ? 1 : 0;
    }
  }
  const double fraction = static_cast<double>(crossers) / total;
  CHECK(fraction > 0.4);
  CHECK(fraction < 0.6);
}

TEST_CASE("crossing labels are geometrically sound") {
  ScenarioConfig c;
  c.n_pedestrians = 30;
  c.duration_s = 8.0;
  c.seed = 1234;
  const auto s = sim::generate_scenario(c);
  for (const auto& agent : s.agents) {
    bool entered = false;
    for (const auto& st : agent.states) entered = entered || sim::in_corridor(c, st.pos);
    CHECK(agent.crossing_label == entered);
    CHECK(agent.crossing_label == agent.crossing_frame.has_value());
    if (agent.crossing_frame)
      CHECK(sim::in_corridor(c, agent.states[*agent.crossing_frame].pos));
  }
}

TEST_CASE("miss rate one silences every frame") {
  ScenarioConfig c;
  c.n_pedestrians = 5;
  c.duration_s = 2.0;
  c.detection_miss_rate = 1.0;
  c.false_positive_rate = 0.0;
  c.seed = 3;
  const auto s = sim::generate_scenario(c);
  for (int f = 0; f < c.n_frames(); ++f) CHECK(sim::render_detections(s, f).empty());
}

TEST_CASE("noiseless detections sit exactly on the projected keypoints") {
  ScenarioConfig c;
  c.n_pedestrians = 3;
  c.duration_s = 2.0;
  c.detection_miss_rate = 0.0;
  c.false_positive_rate = 0.0;
  c.keypoint_noise_sigma = 0.0;
  c.keypoint_miss_rate = 0.0;
  c.seed = 8;
  const auto s = sim::generate_scenario(c);
  for (int f = 0; f < c.n_frames(); f += 7) {
    for (const auto& det : sim::render_detections(s, f)) {
      REQUIRE(det.truth_agent.has_value());
      const auto projected = sim::project_agent_keypoints(s, *det.truth_agent, f);
      for (int i = 0; i < pose::kKeypointCount25; ++i) {
        CHECK(det.keypoints.keypoints[i].x == doctest::Approx(projected.keypoints[i].x));
        CHECK(det.keypoints.keypoints[i].y == doctest::Approx(projected.keypoints[i].y));
      }
      CHECK(det.descriptor.norm() == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("frame out of range is a bounds error") {
  ScenarioConfig c;
  c.n_pedestrians = 1;
  c.duration_s = 1.0;
  const auto s = sim::generate_scenario(c);
  CHECK_THROWS_AS(sim::render_detections(s, -1), InputError);
  CHECK_THROWS_AS(sim::render_detections(s, c.n_frames()), InputError);
  CHECK_THROWS_AS(sim::render_stereo_pair(s, c.n_frames(), c.intrinsics), InputError);
}

TEST_CASE("detection counts match the miss and false-positive rates") {
  ScenarioConfig c;
  c.n_pedestrians = 6;
  c.duration_s = 12.0;
  c.frame_rate = 30.0;
  c.detection_miss_rate = 0.2;
  c.false_positive_rate = 0.3;
  c.keypoint_miss_rate = 0.0;  // isolate the two counted processes
  c.seed = 71;
  const auto s = sim::generate_scenario(c);

  double expected = 0.0, variance = 0.0;
  long observed = 0;
  for (int f = 0; f < c.n_frames(); ++f) {
    int visible = 0;
    for (const auto& agent : s.agents) visible += agent.states[f].visible ? 1 : 0;
    expected += visible * (1.0 - c.detection_miss_rate) + c.false_positive_rate;
    variance += visible * c.detection_miss_rate * (1.0 - c.detection_miss_rate) +
                c.false_positive_rate;
    observed += static_cast<long>(sim::render_detections(s, f).size());
  }
  CHECK(std::abs(observed - expected) <= 3.0 * std::sqrt(variance));
}

TEST_CASE("per-agent descriptors separate identities") {
  ScenarioConfig c;
  c.n_pedestrians = 6;
  c.duration_s = 4.0;
  c.detection_miss_rate = 0.0;
  c.false_positive_rate = 0.0;
  c.seed = 97;
  const auto s = sim::generate_scenario(c);

  double intra = 0.0, inter = 0.0;
  long n_intra = 0, n_inter = 0;
  std::map<int, std::vector<Eigen::VectorXd>> per_agent;
  for (int f = 0; f < c.n_frames(); f += 5)
    for (const auto& det : sim::render_detections(s, f))
      per_agent[*det.truth_agent].push_back(det.descriptor);

  for (const auto& [a, da] : per_agent) {
    for (std::size_t i = 0; i < da.size(); ++i)
      for (std::size_t j = i + 1; j < da.size(); ++j) {
        intra += 1.0 - da[i].dot(da[j]);
        ++n_intra;
      }
    for (const auto& [b, db] : per_agent) {
      if (b <= a) continue;
      for (const auto& x : da)
        for (const auto& y : db) {
          inter += 1.0 - x.dot(y);
          ++n_inter;
        }
    }
  }
  REQUIRE(n_intra > 0);
  REQUIRE(n_inter > 0);
  CHECK(intra / n_intra < inter / n_inter);
}

TEST_CASE("stereo pair renders agents at their exact integer disparity") {
  ScenarioConfig c;
  c.n_pedestrians = 0;
  c.duration_s = 1.0;
  c.seed = 15;
  auto s = sim::generate_scenario(c);

  // One hand-placed agent at the depth whose disparity is exactly 40 px.
  const double depth = c.intrinsics.f * c.intrinsics.baseline / 40.0;
  sim::PedestrianAgent agent;
  agent.agent_id = 0;
  agent.height_m = 1.7;
  agent.texture_seed = 12345;
  agent.states.assign(c.n_frames(), {});
  agent.states[0].pos = {0.0, 0.5, depth};
  agent.states[0].visible = true;
  s.agents.push_back(agent);

  const auto render = sim::render_stereo_pair(s, 0, c.intrinsics);
  REQUIRE(render.agents.size() == 1);
  CHECK(render.agents[0].disparity_px == 40);

  // Pixel-exact: the right patch is the left patch shifted by 40 columns.
  const auto& r = render.agents[0];
  for (int dy = 1; dy + 1 < r.height; ++dy)
    for (int dx = 1; dx + 1 < r.width; ++dx) {
      const int xl = r.left_x0 + dx, y = r.y0 + dy;
      if (!render.left.in_bounds(xl, y) || !render.right.in_bounds(xl - 40, y)) continue;
      CHECK(render.left.at(xl, y) == render.right.at(xl - 40, y));
    }
}

TEST_CASE("empty scenario renders matched background texture") {
  ScenarioConfig c;
  c.n_pedestrians = 0;
  c.duration_s = 1.0;
  c.seed = 6;
  const auto s = sim::generate_scenario(c);
  const auto render = sim::render_stereo_pair(s, 0, c.intrinsics);
  CHECK(render.agents.empty());

  const int d_bg = static_cast<int>(
      std::lround(c.intrinsics.f * c.intrinsics.baseline / c.background_depth_m));
  REQUIRE(d_bg >= 1);
  int distinct = 0;
  for (int y = 0; y < render.left.height; ++y)
    for (int x = d_bg; x < render.left.width; ++x) {
      CHECK(render.left.at(x, y) == render.right.at(x - d_bg, y));
      if (render.left.at(x, y) != render.left.at(0, 0)) ++distinct;
    }
  CHECK(distinct > 0);  // textured, not constant
}

TEST_CASE("agents behind the camera are skipped with a warning") {
  ScenarioConfig c;
  c.n_pedestrians = 0;
  c.duration_s = 1.0;
  auto s = sim::generate_scenario(c);
  sim::PedestrianAgent agent;
  agent.agent_id = 7;
  agent.states.assign(c.n_frames(), {});
  agent.states[0].pos = {0.0, 0.5, -2.0};
  s.agents.push_back(agent);
  const auto render = sim::render_stereo_pair(s, 0, c.intrinsics);
  CHECK(render.agents.empty());
  REQUIRE(render.warnings.size() == 1);
  CHECK(render.warnings[0].find("behind camera") != std::string::npos);
}

TEST_CASE("rendered pairs round-trip through block matching") {
  ScenarioConfig c;
  c.n_pedestrians = 4;
  c.duration_s = 2.0;
  c.detection_miss_rate = 0.0;
  c.false_positive_rate = 0.0;
  c.seed = 120;
  const auto s = sim::generate_scenario(c);

  stereo::BlockMatchParams bm;
  int checked = 0;
  for (int f = 0; f < c.n_frames(); f += 10) {
    const auto render = sim::render_stereo_pair(s, f, c.intrinsics);
    const auto dmap = stereo::block_match(render.left, render.right, bm);
    for (const auto& r : render.agents) {
      if (r.disparity_px > bm.max_disparity) continue;
      // Skip agents partially covered by a nearer agent; their rectangle
      // legitimately carries the occluder's disparity.
      bool occluded = false;
      for (const auto& other : render.agents) {
        if (other.disparity_px <= r.disparity_px) continue;
        const int ox = std::max(0, std::min(r.left_x0 + r.width, other.left_x0 + other.width) -
                                       std::max(r.left_x0, other.left_x0));
        const int oy = std::max(0, std::min(r.y0 + r.height, other.y0 + other.height) -
                                       std::max(r.y0, other.y0));
        if (ox * oy > 0) occluded = true;
      }
      if (occluded) continue;
      std::vector<float> vals;
      for (int dy = 0; dy < r.height; ++dy)
        for (int dx = 0; dx < r.width; ++dx) {
          const int x = r.left_x0 + dx, y = r.y0 + dy;
          if (x >= 0 && x < dmap.width && y >= 0 && y < dmap.height && dmap.valid(x, y))
            vals.push_back(dmap.at(x, y));
        }
      if (vals.size() < 20) continue;
      std::nth_element(vals.begin(), vals.begin() + vals.size() / 2, vals.end());
      const double median = vals[vals.size() / 2];
      const double truth =
          c.intrinsics.f * c.intrinsics.baseline / s.agents[r.agent_id].states[f].pos.z;
      CHECK(std::abs(median - truth) <= 1.0);
      ++checked;
    }
  }
  CHECK(checked >= 5);
}

TEST_CASE("scenario files round-trip through the loader") {
  ScenarioConfig c;
  c.n_pedestrians = 3;
  c.duration_s = 2.0;
  c.seed = 321;
  const auto s = sim::generate_scenario(c);
  const auto dir = std::filesystem::temp_directory_path() / "pedcross_roundtrip";
  pipeline::write_scenario_files(s, dir);
  const auto loaded = pipeline::load_scenario_files(dir);

  CHECK(loaded.scenario.config.seed == c.seed);
  CHECK(loaded.scenario.agents.size() == s.agents.size());
  REQUIRE(static_cast<int>(loaded.detections.size()) == c.n_frames());
  for (std::size_t a = 0; a < s.agents.size(); ++a) {
    CHECK(loaded.scenario.agents[a].crossing_label == s.agents[a].crossing_label);
    CHECK(loaded.scenario.agents[a].states.size() == s.agents[a].states.size());
    for (std::size_t f = 0; f < s.agents[a].states.size(); f += 13) {
      CHECK(loaded.scenario.agents[a].states[f].pos.z ==
            doctest::Approx(s.agents[a].states[f].pos.z));
      CHECK(loaded.scenario.agents[a].states[f].visible == s.agents[a].states[f].visible);
    }
  }
  // Rendering from the reloaded scenario is bit-identical.
  const auto r1 = sim::render_stereo_pair(s, 0, c.intrinsics);
  const auto r2 = sim::render_stereo_pair(loaded.scenario, 0, c.intrinsics);
  CHECK(r1.left.pixels == r2.left.pixels);
  CHECK(r1.right.pixels == r2.right.pixels);
  std::filesystem::remove_all(dir);
}
