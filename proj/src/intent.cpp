#include "pedcross/intent.hpp"

#include <algorithm>
#include <cmath>

namespace pedcross::intent {

namespace {

constexpr int kGrid = 16;  // resampling grid for the feature stub
constexpr double kPi = 3.14159265358979323846;

/// 64 raw components: 16 block means, 16 intensity-histogram bins, and a
/// 4-cell x 8-bin gradient-orientation histogram.
Eigen::VectorXd stub_features(const GrayImage& src, double x0, double y0, double w, double h) {
  double grid[kGrid][kGrid];
  for (int i = 0; i < kGrid; ++i)
    for (int j = 0; j < kGrid; ++j)
      grid[i][j] = src.sample(x0 + (j + 0.5) / kGrid * w, y0 + (i + 0.5) / kGrid * h);

  Eigen::VectorXd f = Eigen::VectorXd::Zero(64);
  // Block means over 4x4 cells, normalized to [0,1].
  for (int bi = 0; bi < 4; ++bi)
    for (int bj = 0; bj < 4; ++bj) {
      double sum = 0.0;
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) sum += grid[4 * bi + i][4 * bj + j];
      f(4 * bi + bj) = sum / (16.0 * 255.0);
    }
  // Intensity histogram, 16 bins.
  for (int i = 0; i < kGrid; ++i)
    for (int j = 0; j < kGrid; ++j) {
      const int bin = std::min(15, static_cast<int>(grid[i][j] / 16.0));
      f(16 + bin) += 1.0 / (kGrid * kGrid);
    }
  // Gradient orientations over 2x2 spatial cells, magnitude weighted.
  double total_mag = 0.0;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(32);
  for (int i = 1; i < kGrid - 1; ++i)
    for (int j = 1; j < kGrid - 1; ++j) {
      const double gx = grid[i][j + 1] - grid[i][j - 1];
      const double gy = grid[i + 1][j] - grid[i - 1][j];
      const double mag = std::hypot(gx, gy);
      if (mag <= 0.0) continue;
      const double angle = std::atan2(gy, gx);  // [-pi, pi]
      int bin = static_cast<int>((angle + kPi) / (2.0 * kPi) * 8.0);
      bin = std::clamp(bin, 0, 7);
      const int cell = (i < kGrid / 2 ? 0 : 2) + (j < kGrid / 2 ? 0 : 1);
      grad(8 * cell + bin) += mag;
      total_mag += mag;
    }
  if (total_mag > 0.0) grad /= total_mag;
  f.segment(32, 32) = grad;
  return f;
}

/// Adapts the raw 64 components to the configured dimension: fold for fewer,
/// tile for more.
Eigen::VectorXd adapt_dim(const Eigen::VectorXd& raw, int dim) {
  if (dim == raw.size()) return raw;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dim);
  if (dim < raw.size()) {
    for (int i = 0; i < raw.size(); ++i) out(i % dim) += raw(i);
  } else {
    for (int i = 0; i < dim; ++i) out(i) = raw(i % raw.size());
  }
  return out;
}

}  // namespace

LocalContextFeature extract_local_context(const GrayImage& image, const pose::BoundingBox& bbox,
                                          int dim) {
  if (dim < 1) throw InputError("extract_local_context: dim must be >= 1");
  if (bbox.width <= 0.0 || bbox.height <= 0.0)
    throw InputError("extract_local_context: degenerate bbox");
  if (bbox.x + bbox.width <= 0.0 || bbox.y + bbox.height <= 0.0 ||
      bbox.x >= image.width || bbox.y >= image.height)
    throw InputError("extract_local_context: bbox fully outside the image");

  const double cx0 = std::clamp(bbox.x, 0.0, static_cast<double>(image.width));
  const double cy0 = std::clamp(bbox.y, 0.0, static_cast<double>(image.height));
  const double cx1 = std::clamp(bbox.x + bbox.width, 0.0, static_cast<double>(image.width));
  const double cy1 = std::clamp(bbox.y + bbox.height, 0.0, static_cast<double>(image.height));

  LocalContextFeature out;
  out.appearance = adapt_dim(stub_features(image, cx0, cy0, cx1 - cx0, cy1 - cy0), dim);

  // Square surroundings ROI, side proportional to the bbox, pedestrian masked
  // to gray on the pixel grid before sampling.
  const double side = 2.0 * std::max(bbox.width, bbox.height);
  const double rx0 = bbox.cx() - 0.5 * side;
  const double ry0 = bbox.cy() - 0.5 * side;

  GrayImage masked = image;
  const int mx0 = std::max(0, static_cast<int>(std::ceil(bbox.x - 0.5)));
  const int my0 = std::max(0, static_cast<int>(std::ceil(bbox.y - 0.5)));
  const int mx1 = std::min(image.width, static_cast<int>(std::floor(bbox.x + bbox.width + 0.5)));
  const int my1 = std::min(image.height, static_cast<int>(std::floor(bbox.y + bbox.height + 0.5)));
  for (int y = my0; y < my1; ++y)
    for (int x = mx0; x < mx1; ++x) masked.at(x, y) = 128;

  out.surroundings = adapt_dim(stub_features(masked, rx0, ry0, side, side), dim);
  return out;
}

int window_length(double frame_rate) {
  return std::max(1, static_cast<int>(std::lround(1.5 * frame_rate)));
}

std::optional<ObservationWindow> build_window(const std::vector<TrackFrameData>& history,
                                              double frame_rate) {
  const int T = window_length(frame_rate);
  if (static_cast<int>(history.size()) < T) return std::nullopt;

  const std::size_t start = history.size() - static_cast<std::size_t>(T);
  for (std::size_t i = start + 1; i < history.size(); ++i)
    if (history[i].frame != history[i - 1].frame + 1) return std::nullopt;

  ObservationWindow w;
  w.track_id = -1;
  w.end_frame = history.back().frame;
  const pose::BoundingBox& first = history[start].bbox;
  for (std::size_t i = start; i < history.size(); ++i) {
    const TrackFrameData& d = history[i];
    w.appearance.push_back(d.appearance);
    w.surroundings.push_back(d.surroundings);
    Eigen::VectorXd p(36);
    for (int k = 0; k < 36; ++k) p(k) = d.pose36.values[k];
    w.pose.push_back(std::move(p));
    w.displacement.emplace_back(d.bbox.x - first.x, d.bbox.y - first.y,
                                d.bbox.width - first.width, d.bbox.height - first.height);
    w.speed_kmh.push_back(d.speed_kmh);
  }
  return w;
}

SequenceBatch make_batch(const StackedGruModel& model,
                         const std::vector<const ObservationWindow*>& windows) {
  if (windows.empty()) throw InputError("make_batch: empty window set");
  const int T = windows.front()->length();
  const int B = static_cast<int>(windows.size());
  const GruDims& dims = model.dims;

  if (dims.displacement != 4 || dims.speed != 1)
    throw InputError("make_batch: displacement/speed stream widths are fixed at 4 and 1");

  SequenceBatch batch;
  batch.steps = T;
  batch.batch = B;
  for (int l = 0; l < kNumLayers; ++l)
    batch.streams[l].assign(T, Eigen::MatrixXd::Zero(dims.stream_dim(l), B));

  for (int b = 0; b < B; ++b) {
    const ObservationWindow& w = *windows[b];
    if (w.length() != T || static_cast<int>(w.surroundings.size()) != T ||
        static_cast<int>(w.pose.size()) != T || static_cast<int>(w.displacement.size()) != T ||
        static_cast<int>(w.speed_kmh.size()) != T)
      throw InputError("make_batch: window stream lengths differ");
    for (int t = 0; t < T; ++t) {
      if (w.appearance[t].size() != dims.appearance ||
          w.surroundings[t].size() != dims.surroundings || w.pose[t].size() != dims.pose)
        throw InputError("make_batch: feature dimension mismatch");
      batch.streams[0][t].col(b) = w.appearance[t];
      batch.streams[1][t].col(b) = w.surroundings[t];
      batch.streams[2][t].col(b) = w.pose[t];
      batch.streams[3][t].col(b) = w.displacement[t] * model.displacement_scale;
      batch.streams[4][t](0, b) = w.speed_kmh[t] * model.speed_scale;
    }
  }
  return batch;
}

double stacked_forward(const StackedGruModel& model, const ObservationWindow& window) {
  if (window.length() == 0) throw InputError("stacked_forward: incomplete window");
  const std::vector<const ObservationWindow*> one{&window};
  return stacked_forward_batch(model, make_batch(model, one))(0);
}

IntentionScore score_window(const StackedGruModel& model, const ObservationWindow& window,
                            double decision_threshold) {
  IntentionScore s;
  s.probability = stacked_forward(model, window);
  s.cross = s.probability >= decision_threshold;
  s.track_id = window.track_id;
  s.trigger_frame = window.end_frame;
  return s;
}

bool TriggerPolicy::should_trigger(int track_id, double corridor_distance_m,
                                   double vehicle_speed_kmh) {
  if (fired_.count(track_id)) return false;
  const double speed = std::max(vehicle_speed_kmh / 3.6, min_speed_mps_);
  const double tti = corridor_distance_m / speed;
  if (tti < band_lo_ || tti > band_hi_) return false;
  fired_.insert(track_id);
  return true;
}

TrainResult train_toy(StackedGruModel& model, const std::vector<ObservationWindow>& windows,
                      const std::vector<int>& labels, const TrainHyperparams& hp) {
  if (windows.empty()) throw InputError("train_toy: empty dataset");
  if (windows.size() != labels.size()) throw InputError("train_toy: label count mismatch");
  if (hp.epochs < 0 || hp.chunk < 1) throw ConfigError("intent.training hyperparameters invalid");

  TrainResult result;
  const bool has_pos = std::find(labels.begin(), labels.end(), 1) != labels.end();
  const bool has_neg = std::find(labels.begin(), labels.end(), 0) != labels.end();
  result.single_class = !(has_pos && has_neg);

  const int n = static_cast<int>(windows.size());
  struct Chunk {
    SequenceBatch batch;
    Eigen::VectorXd labels;
  };
  std::vector<Chunk> chunks;
  for (int start = 0; start < n; start += hp.chunk) {
    const int size = std::min(hp.chunk, n - start);
    std::vector<const ObservationWindow*> ptrs;
    Eigen::VectorXd y(size);
    for (int i = 0; i < size; ++i) {
      ptrs.push_back(&windows[start + i]);
      y(i) = labels[start + i];
    }
    chunks.push_back({make_batch(model, ptrs), std::move(y)});
  }

  ForwardCache cache;
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    Gradients grads = Gradients::zeros(model.dims);
    double loss_sum = 0.0;
    for (const Chunk& chunk : chunks) {
      stacked_forward_batch(model, chunk.batch, &cache);
      loss_sum += stacked_backward_batch(model, chunk.batch, cache, chunk.labels, grads);
    }
    const double scale = hp.learning_rate / n;
    for (int l = 0; l < kNumLayers; ++l) {
      GruLayer& p = model.layers[l];
      const GruLayer& g = grads.layers[l];
      p.Wz -= scale * g.Wz;
      p.Wr -= scale * g.Wr;
      p.Wh -= scale * g.Wh;
      p.Uz -= scale * g.Uz;
      p.Ur -= scale * g.Ur;
      p.Uh -= scale * g.Uh;
      p.bz -= scale * g.bz;
      p.br -= scale * g.br;
      p.bh -= scale * g.bh;
    }
    model.head_w -= scale * grads.head_w;
    model.head_b -= scale * grads.head_b;
    result.loss_curve.push_back(loss_sum / n);
  }
  return result;
}

}  // namespace pedcross::intent
