#include "pedcross/pose.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pedcross::pose {

const std::array<int, kKeypointCount18>& retained_indices() {
  static const std::array<int, kKeypointCount18> kRetained = [] {
    std::array<int, kKeypointCount18> out{};
    int n = 0;
    for (int i = 0; i < kKeypointCount25; ++i) {
      if (std::find(kDroppedIndices.begin(), kDroppedIndices.end(), i) == kDroppedIndices.end())
        out[n++] = i;
    }
    return out;
  }();
  return kRetained;
}

BoundingBox bbox_from_pose(const Pose25& p, std::optional<ImageExtent> clip, double margin) {
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = std::numeric_limits<double>::infinity();
  double max_x = -std::numeric_limits<double>::infinity();
  double max_y = -std::numeric_limits<double>::infinity();
  int n_valid = 0;
  for (const auto& k : p.keypoints) {
    if (!k.valid()) continue;
    ++n_valid;
    min_x = std::min(min_x, k.x);
    min_y = std::min(min_y, k.y);
    max_x = std::max(max_x, k.x);
    max_y = std::max(max_y, k.y);
  }
  if (n_valid < 2) throw InputError("bbox_from_pose: fewer than 2 valid keypoints");

  double w = max_x - min_x;
  double h = max_y - min_y;
  // Guard against collinear keypoints producing a zero-area box.
  if (w <= 0.0) {
    min_x -= 0.5;
    w = 1.0;
  }
  if (h <= 0.0) {
    min_y -= 0.5;
    h = 1.0;
  }

  BoundingBox box;
  box.x = min_x - margin * w;
  box.y = min_y - margin * h;
  box.width = w * (1.0 + 2.0 * margin);
  box.height = h * (1.0 + 2.0 * margin);

  if (clip) {
    const double x1 = std::clamp(box.x + box.width, 0.0, static_cast<double>(clip->width));
    const double y1 = std::clamp(box.y + box.height, 0.0, static_cast<double>(clip->height));
    box.x = std::clamp(box.x, 0.0, static_cast<double>(clip->width));
    box.y = std::clamp(box.y, 0.0, static_cast<double>(clip->height));
    box.width = std::max(x1 - box.x, 1e-6);
    box.height = std::max(y1 - box.y, 1e-6);
  }
  return box;
}

bool is_valid_pose(const Pose25& p, double margin) {
  if (p.valid_count() < kMinValidKeypoints) return false;
  const BoundingBox box = bbox_from_pose(p, std::nullopt, margin);
  return box.width <= box.height;
}

Pose18 reduce_to_18(const Pose25& p) {
  Pose18 out{};
  const auto& keep = retained_indices();
  for (int i = 0; i < kKeypointCount18; ++i) out[i] = p.keypoints[keep[i]];
  return out;
}

PoseFeature36 normalize_pose(const Pose18& k18, const BoundingBox& bbox) {
  PoseFeature36 f;
  for (int i = 0; i < kKeypointCount18; ++i) {
    const Keypoint& k = k18[i];
    if (!k.valid() || bbox.width <= 0.0 || bbox.height <= 0.0) {
      f.values[2 * i] = 0.0;
      f.values[2 * i + 1] = 0.0;
      continue;
    }
    f.values[2 * i] = std::clamp((k.x - bbox.x) / bbox.width, 0.0, 1.0);
    f.values[2 * i + 1] = std::clamp((k.y - bbox.y) / bbox.height, 0.0, 1.0);
  }
  return f;
}

}  // namespace pedcross::pose
