#pragma once

#include <array>
#include <optional>

#include "pedcross/errors.hpp"

namespace pedcross::pose {

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double confidence = 0.0;  // 0 marks an undetected keypoint

  bool valid() const { return confidence > 0.0; }
};

inline constexpr int kKeypointCount25 = 25;
inline constexpr int kKeypointCount18 = 18;

// Body-25 keypoints absent from the 18-point model: mid-hip (8) and the six
// foot points (19-24). See docs/keypoints.md for the full index table.
inline constexpr std::array<int, 7> kDroppedIndices = {8, 19, 20, 21, 22, 23, 24};

/// Minimum valid keypoints for a pose to be kept.
inline constexpr int kMinValidKeypoints = 20;

struct Pose25 {
  std::array<Keypoint, kKeypointCount25> keypoints{};

  int valid_count() const {
    int n = 0;
    for (const auto& k : keypoints) n += k.valid() ? 1 : 0;
    return n;
  }
};

using Pose18 = std::array<Keypoint, kKeypointCount18>;

struct BoundingBox {
  double x = 0.0;  // top-left
  double y = 0.0;
  double width = 0.0;
  double height = 0.0;

  double cx() const { return x + 0.5 * width; }
  double cy() const { return y + 0.5 * height; }
  double aspect() const { return width / height; }
  double area() const { return width * height; }
};

struct ImageExtent {
  int width = 0;
  int height = 0;
};

/// 18 keypoints x (normalized x, y), concatenated in keypoint order.
struct PoseFeature36 {
  std::array<double, 2 * kKeypointCount18> values{};
};

/// Indices retained by the 25-to-18 reduction, in original order.
const std::array<int, kKeypointCount18>& retained_indices();

/// Axis-aligned box over valid keypoints, expanded by `margin` of its span on
/// each side and clipped to `clip` when given. Throws InputError with fewer
/// than 2 valid keypoints.
BoundingBox bbox_from_pose(const Pose25& p, std::optional<ImageExtent> clip = std::nullopt,
                           double margin = 0.10);

/// Keeps a pose iff it has at least 20 valid keypoints and its bounding box
/// is no wider than it is tall.
bool is_valid_pose(const Pose25& p, double margin = 0.10);

Pose18 reduce_to_18(const Pose25& p);

/// Maps each keypoint to bbox-relative coordinates in [0,1]^2; invalid
/// keypoints encode as (0,0).
PoseFeature36 normalize_pose(const Pose18& k18, const BoundingBox& bbox);

}  // namespace pedcross::pose
