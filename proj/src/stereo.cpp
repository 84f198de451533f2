#include "pedcross/stereo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

namespace pedcross::stereo {

double Point3D::norm() const { return std::sqrt(x * x + y * y + z * z); }

namespace {

// Box-filtered absolute differences for one disparity candidate, written into
// `sad` (only columns where the full block fits in both images are defined).
void sad_for_disparity(const GrayImage& left, const GrayImage& right, int d, int half,
                       std::vector<int>& column_sums, std::vector<int>& sad) {
  const int w = left.width;
  const int h = left.height;
  // column_sums[x] = sum of |L-R| over a vertical window of block height at x.
  std::fill(column_sums.begin(), column_sums.end(), 0);
  for (int y = 0; y < 2 * half + 1 && y < h; ++y)
    for (int x = d; x < w; ++x)
      column_sums[x] += std::abs(static_cast<int>(left.at(x, y)) - right.at(x - d, y));

  for (int yc = half; yc + half < h; ++yc) {
    if (yc > half) {
      const int y_out = yc - half - 1;
      const int y_in = yc + half;
      for (int x = d; x < w; ++x) {
        column_sums[x] += std::abs(static_cast<int>(left.at(x, y_in)) - right.at(x - d, y_in)) -
                          std::abs(static_cast<int>(left.at(x, y_out)) - right.at(x - d, y_out));
      }
    }
    // Horizontal accumulation over the block width.
    int acc = 0;
    for (int x = d; x < d + 2 * half + 1 && x < w; ++x) acc += column_sums[x];
    for (int xc = d + half; xc + half < w; ++xc) {
      if (xc > d + half) acc += column_sums[xc + half] - column_sums[xc - half - 1];
      sad[static_cast<std::size_t>(yc) * w + xc] = acc;
    }
  }
}

}  // namespace

DisparityMap block_match(const GrayImage& left, const GrayImage& right,
                         const BlockMatchParams& params) {
  if (left.width != right.width || left.height != right.height)
    throw InputError("block_match: image dimensions differ");
  if (params.block_size < 3 || params.block_size % 2 == 0)
    throw InputError("block_match: block_size must be odd and >= 3");

  const int w = left.width;
  const int h = left.height;
  const int half = params.block_size / 2;
  const int max_d = std::min(params.max_disparity, w - params.block_size);
  DisparityMap out(w, h);
  if (max_d < 1) return out;

  const std::size_t n = static_cast<std::size_t>(w) * h;
  // Full cost volume so the ratio test can exclude neighbors of the best match.
  std::vector<int> volume(n * static_cast<std::size_t>(max_d), -1);
  std::vector<int> column_sums(w);
  std::vector<int> sad(n);
  for (int d = 1; d <= max_d; ++d) {
    std::fill(sad.begin(), sad.end(), -1);
    sad_for_disparity(left, right, d, half, column_sums, sad);
    std::copy(sad.begin(), sad.end(), volume.begin() + (d - 1) * n);
  }

  for (int y = half; y + half < h; ++y) {
    for (int x = half; x + half < w; ++x) {
      const std::size_t px = static_cast<std::size_t>(y) * w + x;
      int best_d = 0, best_sad = std::numeric_limits<int>::max();
      int n_candidates = 0;
      for (int d = 1; d <= max_d; ++d) {
        const int s = volume[(d - 1) * n + px];
        if (s < 0) continue;
        ++n_candidates;
        if (s < best_sad) {
          best_sad = s;
          best_d = d;
        }
      }
      if (best_d == 0 || n_candidates < 2) continue;

      int second = std::numeric_limits<int>::max();
      for (int d = 1; d <= max_d; ++d) {
        if (std::abs(d - best_d) <= 1) continue;
        const int s = volume[(d - 1) * n + px];
        if (s >= 0 && s < second) second = s;
      }
      // Ambiguous when the best is not clearly better than the runner-up, or
      // when the search range is too clipped to produce one.
      if (second == std::numeric_limits<int>::max() ||
          static_cast<double>(best_sad) >= params.ratio_test * static_cast<double>(second))
        continue;
      out.at(x, y) = static_cast<float>(best_d);
    }
  }
  return out;
}

Point3D triangulate(double u, double v, double d, const CameraIntrinsics& K) {
  if (!(d > 0.0)) throw InputError("triangulate: disparity must be > 0");
  Point3D p;
  p.z = K.f * K.baseline / d;
  p.x = (u - K.cx) * p.z / K.f;
  p.y = (v - K.cy) * p.z / K.f;
  return p;
}

PixelDisparity project(const Point3D& p, const CameraIntrinsics& K) {
  if (!(p.z > 0.0)) throw InputError("project: point must be in front of the camera");
  PixelDisparity out;
  out.u = K.f * p.x / p.z + K.cx;
  out.v = K.f * p.y / p.z + K.cy;
  out.d = K.f * K.baseline / p.z;
  return out;
}

std::optional<Point3D> pedestrian_distance(const pose::BoundingBox& bbox, const DisparityMap& dmap,
                                           const CameraIntrinsics& K, double min_valid_fraction) {
  const int x0 = std::max(0, static_cast<int>(std::floor(bbox.x)));
  const int y0 = std::max(0, static_cast<int>(std::floor(bbox.y)));
  const int x1 = std::min(dmap.width, static_cast<int>(std::ceil(bbox.x + bbox.width)));
  const int y1 = std::min(dmap.height, static_cast<int>(std::ceil(bbox.y + bbox.height)));
  if (x0 >= x1 || y0 >= y1) return std::nullopt;

  std::vector<float> disparities;
  disparities.reserve(static_cast<std::size_t>(x1 - x0) * (y1 - y0));
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x)
      if (dmap.valid(x, y)) disparities.push_back(dmap.at(x, y));

  const std::size_t total = static_cast<std::size_t>(x1 - x0) * (y1 - y0);
  if (disparities.empty() ||
      static_cast<double>(disparities.size()) < min_valid_fraction * static_cast<double>(total))
    return std::nullopt;

  const std::size_t mid = disparities.size() / 2;
  std::nth_element(disparities.begin(), disparities.begin() + mid, disparities.end());
  const double median = disparities[mid];
  return triangulate(bbox.cx(), bbox.cy(), median, K);
}

bool within_range(const Point3D& p, double limit, RangeGate gate) {
  if (gate == RangeGate::kDepth) return p.z <= limit;
  return p.norm() <= limit;
}

void write_disparity_pgm(const DisparityMap& dmap, const std::string& path) {
  GrayImage img(dmap.width, dmap.height, 0);
  float max_d = 1.0f;
  for (float v : dmap.values) max_d = std::max(max_d, v);
  for (int y = 0; y < dmap.height; ++y)
    for (int x = 0; x < dmap.width; ++x)
      if (dmap.valid(x, y))
        img.at(x, y) = static_cast<std::uint8_t>(std::lround(255.0f * dmap.at(x, y) / max_d));
  write_pgm(img, path);
}

}  // namespace pedcross::stereo
