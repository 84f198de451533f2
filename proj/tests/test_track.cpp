#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <set>

#include "oracles.hpp"
#include "pedcross/random.hpp"
#include "pedcross/sim.hpp"
#include "pedcross/track.hpp"

using namespace pedcross;
using track::BoxMotionModel;
using track::KalmanState;
using track::Tracker;
using track::TrackerDetection;
using track::TrackerParams;

namespace {

Eigen::VectorXd unit_vector(Rng& rng, int dim) {
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = rng.gaussian();
  v.normalize();
  return v;
}

TrackerDetection detection_at(double cx, double cy, double w, double h,
                              const Eigen::VectorXd& descriptor) {
  TrackerDetection d;
  d.bbox = {cx - w / 2, cy - h / 2, w, h};
  d.descriptor = descriptor;
  return d;
}

}  // namespace

TEST_CASE("prediction advances the mean by the velocity") {
  BoxMotionModel model;
  KalmanState s = model.initiate({100.0, 50.0, 0.4, 80.0});

  const KalmanState still = model.predict(s);
  CHECK(still.mean.head<4>().isApprox(s.mean.head<4>()));
  CHECK(still.covariance.trace() > s.covariance.trace());

  s.mean(4) = 2.0;  // px per frame along u
  const KalmanState moved = model.predict(s);
  CHECK(moved.mean(0) == doctest::Approx(102.0));
  CHECK(moved.mean(1) == doctest::Approx(50.0));
}

TEST_CASE("repeated prediction never shrinks the covariance trace") {
  BoxMotionModel model;
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    KalmanState s = model.initiate({rng.uniform(0.0, 300.0), rng.uniform(0.0, 200.0),
                                    rng.uniform(0.2, 0.8), rng.uniform(30.0, 150.0)});
    double prev = s.covariance.trace();
    for (int k = 0; k < 30; ++k) {
      s = model.predict(s);
      const double trace = s.covariance.trace();
      CHECK(trace >= prev);
      prev = trace;
    }
  }
}

TEST_CASE("zero-innovation update leaves the mean unchanged") {
  BoxMotionModel model;
  KalmanState s = model.initiate({100.0, 50.0, 0.4, 80.0});
  s = model.predict(s);
  const auto [z_hat, S] = model.project(s);
  (void)S;
  const KalmanState post = model.update(s, z_hat);
  CHECK((post.mean - s.mean).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("uninformative measurement leaves the posterior at the prior") {
  Eigen::VectorXd mean(2);
  mean << 1.0, -2.0;
  Eigen::MatrixXd cov(2, 2);
  cov << 2.0, 0.3, 0.3, 1.0;
  Eigen::MatrixXd H(1, 2);
  H << 1.0, 0.0;
  const Eigen::MatrixXd R = Eigen::MatrixXd::Constant(1, 1, 1e12);
  Eigen::VectorXd z(1);
  z << 57.0;
  const auto [post_mean, post_cov] = track::kalman_update_generic(mean, cov, z, H, R);
  CHECK((post_mean - mean).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((post_cov - cov).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("scalar update matches the closed-form 1-D Kalman algebra") {
  // Prior N(0, 1), measurement z = 2 with R = 1:
  // gain = 1/2, posterior mean = 1, posterior variance = 1/2.
  const Eigen::VectorXd mean = Eigen::VectorXd::Zero(1);
  const Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(1, 1);
  const Eigen::MatrixXd H = Eigen::MatrixXd::Identity(1, 1);
  const Eigen::MatrixXd R = Eigen::MatrixXd::Identity(1, 1);
  Eigen::VectorXd z(1);
  z << 2.0;
  const auto [post_mean, post_cov] = track::kalman_update_generic(mean, cov, z, H, R);
  CHECK(post_mean(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(post_cov(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("non-finite measurement is rejected") {
  BoxMotionModel model;
  KalmanState s = model.initiate({10.0, 10.0, 0.5, 50.0});
  Eigen::Vector4d bad{1.0, std::numeric_limits<double>::quiet_NaN(), 0.5, 50.0};
  CHECK_THROWS_AS(model.update(s, bad), InputError);
}

TEST_CASE("motion cost reduces to squared Euclidean with identity innovation") {
  // Zero state covariance and unit measurement noise make S the identity.
  track::KalmanParams params;
  params.meas_std_weight = 1.0;
  params.aspect_meas_std = 1.0;
  BoxMotionModel model(params);
  track::Track t;
  t.state.mean = Eigen::VectorXd::Zero(8);
  t.state.mean(3) = 1.0;  // height 1 scales R to the identity
  t.state.covariance = Eigen::MatrixXd::Zero(8, 8);

  const Eigen::Vector4d z = t.state.mean.head<4>() + Eigen::Vector4d{3.0, 4.0, 0.0, 0.0};
  CHECK(track::motion_cost(t, z, model) == doctest::Approx(25.0).epsilon(1e-12));
  CHECK(track::motion_cost(t, t.state.mean.head<4>(), model) == doctest::Approx(0.0));
}

TEST_CASE("motion cost matches an explicit linear-solve oracle") {
  BoxMotionModel model;
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    KalmanState s = model.initiate({rng.uniform(0.0, 300.0), rng.uniform(0.0, 200.0),
                                    rng.uniform(0.2, 0.8), rng.uniform(30.0, 150.0)});
    for (int k = 0; k < 3; ++k) s = model.predict(s);
    track::Track t;
    t.state = s;
    const Eigen::Vector4d z{rng.uniform(0.0, 300.0), rng.uniform(0.0, 200.0),
                            rng.uniform(0.2, 0.8), rng.uniform(30.0, 150.0)};

    const auto [z_hat, S] = model.project(s);
    const Eigen::Vector4d r = z - z_hat;
    const double oracle = r.dot(S.fullPivLu().solve(r));
    CHECK(track::motion_cost(t, z, model) == doctest::Approx(oracle).epsilon(1e-9));
  }
}

TEST_CASE("appearance cost over the gallery") {
  Rng rng(23);
  track::Track t;
  const int dim = 16;
  for (int i = 0; i < 3; ++i) t.gallery.push_back(unit_vector(rng, dim));

  CHECK(track::appearance_cost(t, t.gallery[1]) == doctest::Approx(0.0));

  // Orthogonal to every gallery descriptor: distance exactly 1.
  Eigen::VectorXd g0 = t.gallery[0], g1 = t.gallery[1], g2 = t.gallery[2];
  Eigen::VectorXd probe = unit_vector(rng, dim);
  // Gram-Schmidt against the gallery.
  for (const auto& g : {g0, g1, g2}) probe -= probe.dot(g) * g;
  probe.normalize();
  CHECK(track::appearance_cost(t, probe) == doctest::Approx(1.0).epsilon(1e-9));

  // Brute-force minimum over the gallery.
  const Eigen::VectorXd r = unit_vector(rng, dim);
  double expected = 2.0;
  for (const auto& g : t.gallery) expected = std::min(expected, 1.0 - g.dot(r));
  CHECK(track::appearance_cost(t, r) == doctest::Approx(expected));

  track::Track empty;
  CHECK_THROWS_AS(track::appearance_cost(empty, r), StateError);
}

TEST_CASE("combined cost is the weighted sum") {
  CHECK(track::combined_cost(2.0, 0.4, 0.5) == doctest::Approx(1.2));
  CHECK(track::combined_cost(3.7, 0.9, 1.0) == 3.7);
  CHECK(track::combined_cost(3.7, 0.9, 0.0) == 0.9);
  CHECK_THROWS_AS(track::combined_cost(1.0, 1.0, 1.5), ConfigError);
  CHECK_THROWS_AS(track::combined_cost(1.0, 1.0, -0.1), ConfigError);
}

TEST_CASE("gating thresholds") {
  TrackerParams params;
  // 9.4877 is the 95% chi-square quantile at 4 dof; verified against the
  // closed-form CDF.
  CHECK(std::abs(oracles::chi2_cdf_4dof(params.chi2_gate) - 0.95) < 1e-3);

  CHECK(track::gate(9.4877, 0.0, params));  // boundary inclusive
  CHECK_FALSE(track::gate(20.0, 0.0, params));
  CHECK_FALSE(track::gate(0.0, 0.5, params));
  CHECK(track::gate(0.0, 0.4, params));
}

TEST_CASE("hungarian on hand-checked matrices") {
  {
    track::CostMatrix m(2, 2);
    m.set(0, 0, 1.0);
    m.set(0, 1, 2.0);
    m.set(1, 0, 2.0);
    m.set(1, 1, 1.0);
    const auto a = track::hungarian_solve(m);
    REQUIRE(a.matches.size() == 2);
    CHECK(a.matches[0] == std::pair{0, 0});
    CHECK(a.matches[1] == std::pair{1, 1});
    CHECK(a.total_cost == doctest::Approx(2.0));
  }
  {
    track::CostMatrix m(1, 1);
    m.set(0, 0, 5.0);
    const auto a = track::hungarian_solve(m);
    REQUIRE(a.matches.size() == 1);
    CHECK(a.total_cost == doctest::Approx(5.0));
  }
  {
    const auto a = track::hungarian_solve(track::CostMatrix(0, 3));
    CHECK(a.matches.empty());
    CHECK(a.unmatched_cols.size() == 3);
  }
  {
    // Maximum cardinality wins over a cheaper partial matching.
    track::CostMatrix m(2, 2);
    m.set(0, 0, 0.1);
    m.set(0, 1, 0.2);
    m.set(1, 1, 0.15);  // (1,0) infeasible
    const auto a = track::hungarian_solve(m);
    REQUIRE(a.matches.size() == 2);
    CHECK(a.matches[0] == std::pair{0, 0});
    CHECK(a.matches[1] == std::pair{1, 1});
  }
}

TEST_CASE("hungarian equals brute force on random rectangular matrices") {
  Rng rng(41);
  for (int trial = 0; trial < 300; ++trial) {
    const int rows = 1 + rng.uniform_int(7);
    const int cols = 1 + rng.uniform_int(7);
    track::CostMatrix m(rows, cols);
    std::vector<std::vector<double>> dense(rows, std::vector<double>(cols));
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        if (rng.bernoulli(0.2)) {
          dense[r][c] = std::numeric_limits<double>::infinity();
        } else {
          // Dyadic costs keep every brute-force sum exact in doubles.
          dense[r][c] = rng.uniform_int(1 << 20) * 0x1.0p-10;
          m.set(r, c, dense[r][c]);
        }
      }
    const auto fast = track::hungarian_solve(m);
    const auto brute = oracles::brute_force_assignment(dense);
    CHECK(static_cast<int>(fast.matches.size()) == brute.cardinality);
    CHECK(fast.total_cost == brute.total_cost);
    CHECK(fast.matches.size() + fast.unmatched_rows.size() == static_cast<std::size_t>(rows));
    CHECK(fast.matches.size() + fast.unmatched_cols.size() == static_cast<std::size_t>(cols));
  }
}

TEST_CASE("cold start spawns tentative tracks with distinct ids") {
  Rng rng(51);
  Tracker tracker;
  std::vector<TrackerDetection> dets;
  for (int i = 0; i < 3; ++i)
    dets.push_back(detection_at(50.0 + 100.0 * i, 100.0, 30.0, 80.0, unit_vector(rng, 8)));
  const auto result = tracker.step(dets);
  CHECK(result.new_track_ids.size() == 3);
  CHECK(tracker.tracks().size() == 3);
  std::set<int> ids;
  for (const auto& t : tracker.tracks()) {
    ids.insert(t.id);
    CHECK(t.status == track::TrackStatus::kTentative);
  }
  CHECK(ids.size() == 3);
}

TEST_CASE("tracks confirm after n_init hits and die after max_age misses") {
  Rng rng(52);
  TrackerParams params;
  params.n_init = 3;
  params.max_age = 5;
  Tracker tracker(params);
  const Eigen::VectorXd descriptor = unit_vector(rng, 8);

  for (int f = 0; f < 3; ++f)
    tracker.step({detection_at(100.0, 100.0 + f, 30.0, 80.0, descriptor)});
  REQUIRE(tracker.tracks().size() == 1);
  CHECK(tracker.tracks()[0].status == track::TrackStatus::kConfirmed);
  const int id = tracker.tracks()[0].id;

  for (int f = 0; f < params.max_age; ++f) {
    tracker.step({});
    REQUIRE(tracker.tracks().size() == 1);  // still coasting
  }
  const auto result = tracker.step({});  // miss number max_age + 1
  CHECK(tracker.tracks().empty());
  REQUIRE(result.deleted_track_ids.size() == 1);
  CHECK(result.deleted_track_ids[0] == id);
}

TEST_CASE("gallery is a bounded FIFO") {
  Rng rng(53);
  TrackerParams params;
  params.gallery_size = 5;
  params.appearance_gate = 2.0;  // keep matching even as descriptors drift
  Tracker tracker(params);

  std::vector<Eigen::VectorXd> descriptors;
  Eigen::VectorXd base = unit_vector(rng, 8);
  for (int f = 0; f < 8; ++f) {
    Eigen::VectorXd d = base + 0.01 * f * unit_vector(rng, 8);
    d.normalize();
    descriptors.push_back(d);
    tracker.step({detection_at(100.0, 100.0, 30.0, 80.0, d)});
    REQUIRE(tracker.tracks().size() == 1);
  }
  const auto& gallery = tracker.tracks()[0].gallery;
  REQUIRE(gallery.size() == 5);
  // Oldest evicted first: the gallery holds the last five descriptors.
  for (int i = 0; i < 5; ++i) CHECK(gallery[i].isApprox(descriptors[3 + i]));
}

TEST_CASE("ids strictly increase and deleted ids never reappear") {
  Rng rng(54);
  TrackerParams params;
  params.max_age = 0;  // any miss deletes
  Tracker tracker(params);
  std::set<int> seen;
  int last_id = 0;
  for (int f = 0; f < 20; ++f) {
    // Alternate between two far-apart locations so old tracks miss and die.
    const double cx = f % 2 == 0 ? 50.0 : 300.0;
    const auto result = tracker.step({detection_at(cx, 100.0, 30.0, 80.0, unit_vector(rng, 8))});
    for (int id : result.new_track_ids) {
      CHECK(id > last_id);
      last_id = id;
      CHECK_FALSE(seen.count(id));
      seen.insert(id);
    }
  }
}

TEST_CASE("clean two-agent scenario tracks with stable identities") {
  sim::ScenarioConfig scen;
  scen.n_pedestrians = 2;
  scen.duration_s = 5.0;
  scen.detection_miss_rate = 0.0;
  scen.false_positive_rate = 0.0;
  scen.keypoint_noise_sigma = 0.0;
  scen.keypoint_miss_rate = 0.0;
  scen.descriptor_noise_sigma = 0.0;
  scen.seed = 404;
  const auto scenario = sim::generate_scenario(scen);

  Tracker tracker;
  std::map<int, std::set<int>> agent_tracks;
  int frames_with_two = 0;
  for (int f = 0; f < scen.n_frames(); ++f) {
    std::vector<TrackerDetection> dets;
    std::vector<int> truth;
    for (const auto& det : sim::render_detections(scenario, f)) {
      TrackerDetection td;
      td.bbox = det.bbox;
      td.descriptor = det.descriptor;
      td.truth_agent = det.truth_agent;
      dets.push_back(td);
      truth.push_back(*det.truth_agent);
    }
    if (dets.size() == 2) ++frames_with_two;
    const auto result = tracker.step(dets);
    for (const auto& m : result.matches) agent_tracks[truth[m.det_index]].insert(m.track_id);
  }
  CHECK(frames_with_two > 60);  // both agents visible for a substantial stretch
  for (const auto& [agent, ids] : agent_tracks) {
    (void)agent;
    CHECK(ids.size() == 1);  // no identity switches
  }
}

TEST_CASE("covariance stays symmetric positive-definite through noisy updates") {
  BoxMotionModel model;
  Rng rng(55);
  for (int trial = 0; trial < 50; ++trial) {
    KalmanState s = model.initiate({rng.uniform(50.0, 250.0), rng.uniform(50.0, 150.0),
                                    rng.uniform(0.3, 0.6), rng.uniform(40.0, 120.0)});
    for (int k = 0; k < 30; ++k) {
      s = model.predict(s);
      if (rng.bernoulli(0.7)) {
        Eigen::Vector4d z = s.mean.head<4>();
        z(0) += rng.gaussian(0.0, 5.0);
        z(1) += rng.gaussian(0.0, 5.0);
        z(2) = std::max(0.05, z(2) + rng.gaussian(0.0, 0.02));
        z(3) = std::max(5.0, z(3) + rng.gaussian(0.0, 3.0));
        s = model.update(s, z);
      }
      const Eigen::MatrixXd& P = s.covariance;
      CHECK((P - P.transpose()).cwiseAbs().maxCoeff() < 1e-9);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(P);
      CHECK(eig.eigenvalues().minCoeff() > 0.0);
    }
  }
}

TEST_CASE("lambda endpoints reproduce single-cue assignments") {
  // Drive two trackers over the same noisy detections; at lambda=1 the
  // matches must equal a motion-only assignment recomputed from the debug
  // matrices, and at lambda=0 an appearance-only assignment.
  for (const double lambda : {1.0, 0.0}) {
    sim::ScenarioConfig scen;
    scen.n_pedestrians = 4;
    scen.duration_s = 3.0;
    scen.seed = 777;
    const auto scenario = sim::generate_scenario(scen);

    TrackerParams params;
    params.lambda = lambda;
    params.debug_costs = true;
    Tracker tracker(params);
    for (int f = 0; f < scen.n_frames(); ++f) {
      std::vector<TrackerDetection> dets;
      for (const auto& det : sim::render_detections(scenario, f)) {
        if (!pose::is_valid_pose(det.keypoints)) continue;
        TrackerDetection td;
        td.bbox = det.bbox;
        td.descriptor = det.descriptor;
        dets.push_back(td);
      }
      const auto result = tracker.step(dets);
      REQUIRE(result.debug.has_value());
      const auto& dbg = *result.debug;

      track::CostMatrix single(static_cast<int>(dbg.track_ids.size()),
                               static_cast<int>(dets.size()));
      for (int i = 0; i < single.rows(); ++i)
        for (int j = 0; j < single.cols(); ++j)
          if (dbg.feasible(i, j) > 0.0)
            single.set(i, j, lambda == 1.0 ? dbg.d1(i, j) : dbg.d2(i, j));
      const auto reference = track::hungarian_solve(single);

      std::set<std::pair<int, int>> got, want;
      for (const auto& m : result.matches) got.insert({m.track_id, m.det_index});
      for (const auto& [i, j] : reference.matches) want.insert({dbg.track_ids[i], j});
      CHECK(got == want);
    }
  }
}
