#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "pedcross/pose.hpp"
#include "pedcross/random.hpp"

using namespace pedcross;
using pose::Pose25;

namespace {

/// Pose with `n_valid` keypoints spread over a box of the given size.
Pose25 pose_in_box(int n_valid, double x0, double y0, double w, double h) {
  Pose25 p;
  for (int i = 0; i < n_valid; ++i) {
    const double fx = n_valid > 1 ? static_cast<double>(i) / (n_valid - 1) : 0.0;
    p.keypoints[i] = {x0 + fx * w, y0 + (i % 2 == 0 ? 0.0 : h), 0.9};
  }
  return p;
}

}  // namespace

TEST_CASE("pose filtering rules") {
  // Fewer than 20 valid keypoints is discarded; 20 is kept.
  CHECK_FALSE(pose::is_valid_pose(pose_in_box(19, 0, 0, 40, 120)));
  CHECK(pose::is_valid_pose(pose_in_box(20, 0, 0, 40, 120)));

  // Wider than tall is discarded even with a full set of keypoints.
  CHECK_FALSE(pose::is_valid_pose(pose_in_box(25, 0, 0, 150, 100)));

  // Square box is kept: only width strictly greater than height rejects.
  CHECK(pose::is_valid_pose(pose_in_box(25, 0, 0, 100, 100)));
}

TEST_CASE("bbox from two keypoints carries the 10% margin") {
  Pose25 p;
  p.keypoints[0] = {10.0, 10.0, 1.0};
  p.keypoints[1] = {20.0, 30.0, 1.0};
  const auto box = pose::bbox_from_pose(p);
  CHECK(box.x == doctest::Approx(9.0));
  CHECK(box.y == doctest::Approx(8.0));
  CHECK(box.x + box.width == doctest::Approx(21.0));
  CHECK(box.y + box.height == doctest::Approx(32.0));
}

TEST_CASE("bbox contains every valid keypoint") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    Pose25 p;
    for (auto& k : p.keypoints)
      k = {rng.uniform(0.0, 300.0), rng.uniform(0.0, 200.0), rng.uniform(0.1, 1.0)};
    const auto box = pose::bbox_from_pose(p);
    for (const auto& k : p.keypoints) {
      CHECK(k.x >= box.x);
      CHECK(k.x <= box.x + box.width);
      CHECK(k.y >= box.y);
      CHECK(k.y <= box.y + box.height);
    }
  }
}

TEST_CASE("bbox clips to image bounds") {
  Pose25 p;
  p.keypoints[0] = {2.0, 2.0, 1.0};
  p.keypoints[1] = {50.0, 80.0, 1.0};
  const auto box = pose::bbox_from_pose(p, pose::ImageExtent{40, 60});
  CHECK(box.x >= 0.0);
  CHECK(box.y >= 0.0);
  CHECK(box.x + box.width <= 40.0);
  CHECK(box.y + box.height <= 60.0);
}

TEST_CASE("bbox with fewer than two valid keypoints is an error") {
  Pose25 p;
  p.keypoints[3] = {5.0, 5.0, 1.0};
  CHECK_THROWS_AS(pose::bbox_from_pose(p), InputError);
}

TEST_CASE("25-to-18 reduction") {
  Pose25 p;
  for (int i = 0; i < pose::kKeypointCount25; ++i)
    p.keypoints[i] = {static_cast<double>(i), static_cast<double>(2 * i), 1.0};

  const auto reduced = pose::reduce_to_18(p);
  CHECK(reduced.size() == 18);

  // Dropped and retained indices partition 0..24.
  std::set<int> all;
  for (int i : pose::kDroppedIndices) all.insert(i);
  for (int i : pose::retained_indices()) all.insert(i);
  CHECK(pose::kDroppedIndices.size() == 7);
  CHECK(all.size() == 25);

  // Order preserved: x coordinates of the retained points stay ascending.
  for (std::size_t i = 1; i < reduced.size(); ++i) CHECK(reduced[i].x > reduced[i - 1].x);
}

TEST_CASE("invalid foot keypoints do not affect the reduced output") {
  Pose25 p;
  for (int i = 0; i < pose::kKeypointCount25; ++i)
    p.keypoints[i] = {static_cast<double>(i), 1.0, 1.0};
  for (int i : pose::kDroppedIndices) p.keypoints[i].confidence = 0.0;
  const auto reduced = pose::reduce_to_18(p);
  for (const auto& k : reduced) CHECK(k.valid());
}

TEST_CASE("pose normalization endpoints") {
  pose::BoundingBox box{100.0, 50.0, 40.0, 80.0};
  pose::Pose18 k18{};
  k18[0] = {100.0, 50.0, 1.0};   // top-left
  k18[1] = {140.0, 130.0, 1.0};  // bottom-right
  k18[2] = {120.0, 90.0, 1.0};   // center
  // Remaining keypoints invalid -> encode as (0,0).
  const auto f = pose::normalize_pose(k18, box);
  CHECK(f.values[0] == doctest::Approx(0.0));
  CHECK(f.values[1] == doctest::Approx(0.0));
  CHECK(f.values[2] == doctest::Approx(1.0));
  CHECK(f.values[3] == doctest::Approx(1.0));
  CHECK(f.values[4] == doctest::Approx(0.5));
  CHECK(f.values[5] == doctest::Approx(0.5));
  for (int i = 6; i < 36; ++i) CHECK(f.values[i] == 0.0);
}

TEST_CASE("pose normalization is invariant to joint translation and scaling") {
  Rng rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    Pose25 p;
    for (auto& k : p.keypoints)
      k = {rng.uniform(0.0, 100.0), rng.uniform(0.0, 150.0), rng.uniform(0.2, 1.0)};
    const auto box = pose::bbox_from_pose(p);
    const auto base = pose::normalize_pose(pose::reduce_to_18(p), box);

    const double dx = rng.uniform(-500.0, 500.0);
    const double dy = rng.uniform(-500.0, 500.0);
    const double s = rng.uniform(0.2, 5.0);
    Pose25 moved = p;
    for (auto& k : moved.keypoints) {
      k.x = k.x * s + dx;
      k.y = k.y * s + dy;
    }
    pose::BoundingBox moved_box{box.x * s + dx, box.y * s + dy, box.width * s, box.height * s};
    const auto shifted = pose::normalize_pose(pose::reduce_to_18(moved), moved_box);
    for (int i = 0; i < 36; ++i) CHECK(shifted.values[i] == doctest::Approx(base.values[i]));
  }
}

TEST_CASE("filtering a detection list is order independent") {
  Rng rng(13);
  std::vector<Pose25> poses;
  for (int i = 0; i < 20; ++i) {
    Pose25 p;
    const int n_valid = rng.uniform_int(26);
    for (int k = 0; k < n_valid; ++k)
      p.keypoints[k] = {rng.uniform(0.0, 100.0), rng.uniform(0.0, 200.0), 1.0};
    poses.push_back(p);
  }
  std::vector<bool> forward, backward;
  for (const auto& p : poses) forward.push_back(p.valid_count() >= 2 && pose::is_valid_pose(p));
  for (auto it = poses.rbegin(); it != poses.rend(); ++it)
    backward.push_back(it->valid_count() >= 2 && pose::is_valid_pose(*it));
  std::reverse(backward.begin(), backward.end());
  CHECK(forward == backward);
}
