#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pedcross/errors.hpp"
#include "pedcross/image.hpp"
#include "pedcross/pose.hpp"

namespace pedcross::stereo {

/// Rectified pinhole stereo rig: focal length and principal point in pixels,
/// baseline in meters.
struct CameraIntrinsics {
  double f = 240.0;
  double cx = 192.0;
  double cy = 120.0;
  double baseline = 0.6;

  void validate() const {
    if (!(f > 0.0)) throw ConfigError("stereo.f must be > 0");
    if (!(baseline > 0.0)) throw ConfigError("stereo.baseline must be > 0");
  }
};

/// Camera-frame point, z forward, y down, meters.
struct Point3D {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double norm() const;
};

struct DisparityMap {
  static constexpr float kInvalid = -1.0f;

  int width = 0;
  int height = 0;
  std::vector<float> values;  // kInvalid where no match

  DisparityMap() = default;
  DisparityMap(int w, int h)
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, kInvalid) {}

  float at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
  float& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
  bool valid(int x, int y) const { return at(x, y) > 0.0f; }
};

struct BlockMatchParams {
  int block_size = 9;       // odd, >= 3
  int max_disparity = 64;   // search range [1, max_disparity]
  double ratio_test = 0.95; // best/second-best SAD at or above this is ambiguous
};

/// Dense SAD block matching over rectified images; disparity is anchored to
/// the left image. Border pixels and ambiguous matches are invalid.
DisparityMap block_match(const GrayImage& left, const GrayImage& right,
                         const BlockMatchParams& params = {});

/// Rectified-stereo triangulation: z = f*B/d, x = (u-cx)*z/f, y = (v-cy)*z/f.
Point3D triangulate(double u, double v, double d, const CameraIntrinsics& K);

/// Inverse of triangulate; requires p.z > 0. Used by the simulator and by
/// round-trip oracles.
struct PixelDisparity {
  double u = 0.0;
  double v = 0.0;
  double d = 0.0;
};
PixelDisparity project(const Point3D& p, const CameraIntrinsics& K);

/// Triangulates the median valid disparity inside the box at the box center
/// pixel; empty when fewer than `min_valid_fraction` of the box carries valid
/// disparity.
std::optional<Point3D> pedestrian_distance(const pose::BoundingBox& bbox, const DisparityMap& dmap,
                                           const CameraIntrinsics& K,
                                           double min_valid_fraction = 0.10);

enum class RangeGate { kEuclidean, kDepth };

/// Relevance gate: keeps points within `limit` meters of the camera.
bool within_range(const Point3D& p, double limit = 15.0, RangeGate gate = RangeGate::kEuclidean);

/// Disparity map as a portable graymap (invalid = 0), for debugging.
void write_disparity_pgm(const DisparityMap& dmap, const std::string& path);

}  // namespace pedcross::stereo
