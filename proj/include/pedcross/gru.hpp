#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <vector>

#include "pedcross/errors.hpp"

namespace pedcross::intent {

inline constexpr int kNumLayers = 5;

/// Input stream widths and the shared hidden size. Streams join the stack
/// bottom-up: appearance, surroundings, pose, displacement, speed.
struct GruDims {
  int appearance = 64;
  int surroundings = 64;
  int pose = 36;
  int displacement = 4;
  int speed = 1;
  int hidden = 32;

  int stream_dim(int layer) const {
    switch (layer) {
      case 0:
        return appearance;
      case 1:
        return surroundings;
      case 2:
        return pose;
      case 3:
        return displacement;
      case 4:
        return speed;
    }
    throw InputError("GruDims: layer out of range");
  }

  /// Layer 0 sees its stream alone; higher layers see [hidden below, stream].
  int layer_input(int layer) const {
    return (layer == 0 ? 0 : hidden) + stream_dim(layer);
  }

  bool operator==(const GruDims&) const = default;
};

struct GruLayer {
  Eigen::MatrixXd Wz, Wr, Wh;  // hidden x input
  Eigen::MatrixXd Uz, Ur, Uh;  // hidden x hidden
  Eigen::VectorXd bz, br, bh;  // hidden
};

/// z = sigmoid(Wz x + Uz h + bz), r = sigmoid(Wr x + Ur h + br),
/// c = tanh(Wh x + Uh (r.h) + bh), h' = (1-z).h + z.c
Eigen::VectorXd gru_cell_forward(const GruLayer& layer, const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& h);

struct StackedGruModel {
  GruDims dims;
  std::array<GruLayer, kNumLayers> layers;
  Eigen::VectorXd head_w;
  double head_b = 0.0;
  // Fixed input scalings applied to the raw pixel/velocity streams so the
  // gates operate in a sane range; serialized with the model.
  double displacement_scale = 0.01;
  double speed_scale = 0.05;

  static StackedGruModel zeros(const GruDims& dims);
  static StackedGruModel random_init(const GruDims& dims, std::uint64_t seed, double scale = 0.5);

  std::size_t parameter_count() const;
  void validate() const;  // FormatError on inconsistent shapes
};

/// Per-layer input streams for a batch of equal-length windows;
/// streams[layer][t] is stream_dim(layer) x batch, already scaled.
struct SequenceBatch {
  int steps = 0;
  int batch = 0;
  std::array<std::vector<Eigen::MatrixXd>, kNumLayers> streams;
};

struct ForwardCache {
  std::array<std::vector<Eigen::MatrixXd>, kNumLayers> z, r, c, h;
};

/// Probabilities for every window in the batch; fills `cache` when given.
Eigen::VectorXd stacked_forward_batch(const StackedGruModel& model, const SequenceBatch& batch,
                                      ForwardCache* cache = nullptr);

struct Gradients {
  std::array<GruLayer, kNumLayers> layers;  // same shapes as the model
  Eigen::VectorXd head_w;
  double head_b = 0.0;

  static Gradients zeros(const GruDims& dims);
};

/// Backpropagation through time for the summed binary cross-entropy of the
/// batch against labels in {0,1}. Adds into `grads`; returns the summed loss.
double stacked_backward_batch(const StackedGruModel& model, const SequenceBatch& batch,
                              const ForwardCache& cache, const Eigen::VectorXd& labels,
                              Gradients& grads);

}  // namespace pedcross::intent
