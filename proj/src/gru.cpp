#include "pedcross/gru.hpp"

#include <cmath>

#include "pedcross/random.hpp"

namespace pedcross::intent {

namespace {

Eigen::ArrayXXd sigmoid(const Eigen::ArrayXXd& a) { return 1.0 / (1.0 + (-a).exp()); }

void check_layer(const GruLayer& l, int input, int hidden) {
  const auto bad = [&](const Eigen::MatrixXd& m, int r, int c) {
    return m.rows() != r || m.cols() != c;
  };
  if (bad(l.Wz, hidden, input) || bad(l.Wr, hidden, input) || bad(l.Wh, hidden, input) ||
      bad(l.Uz, hidden, hidden) || bad(l.Ur, hidden, hidden) || bad(l.Uh, hidden, hidden) ||
      l.bz.size() != hidden || l.br.size() != hidden || l.bh.size() != hidden)
    throw FormatError("gru layer shape mismatch");
}

}  // namespace

Eigen::VectorXd gru_cell_forward(const GruLayer& layer, const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& h) {
  if (layer.Wz.cols() != x.size() || layer.Uz.cols() != h.size() || layer.Wz.rows() != h.size())
    throw InputError("gru_cell_forward: shape mismatch");
  const Eigen::ArrayXd z = sigmoid((layer.Wz * x + layer.Uz * h + layer.bz).array());
  const Eigen::ArrayXd r = sigmoid((layer.Wr * x + layer.Ur * h + layer.br).array());
  const Eigen::ArrayXd c =
      ((layer.Wh * x + layer.Uh * (r * h.array()).matrix() + layer.bh).array()).tanh();
  return ((1.0 - z) * h.array() + z * c).matrix();
}

StackedGruModel StackedGruModel::zeros(const GruDims& dims) {
  StackedGruModel m;
  m.dims = dims;
  for (int l = 0; l < kNumLayers; ++l) {
    const int in = dims.layer_input(l);
    GruLayer& layer = m.layers[l];
    layer.Wz = Eigen::MatrixXd::Zero(dims.hidden, in);
    layer.Wr = Eigen::MatrixXd::Zero(dims.hidden, in);
    layer.Wh = Eigen::MatrixXd::Zero(dims.hidden, in);
    layer.Uz = Eigen::MatrixXd::Zero(dims.hidden, dims.hidden);
    layer.Ur = Eigen::MatrixXd::Zero(dims.hidden, dims.hidden);
    layer.Uh = Eigen::MatrixXd::Zero(dims.hidden, dims.hidden);
    layer.bz = Eigen::VectorXd::Zero(dims.hidden);
    layer.br = Eigen::VectorXd::Zero(dims.hidden);
    layer.bh = Eigen::VectorXd::Zero(dims.hidden);
  }
  m.head_w = Eigen::VectorXd::Zero(dims.hidden);
  m.head_b = 0.0;
  return m;
}

StackedGruModel StackedGruModel::random_init(const GruDims& dims, std::uint64_t seed,
                                             double scale) {
  StackedGruModel m = zeros(dims);
  Rng rng(mix_seed(seed, 0x6d0de1ull));
  const auto fill = [&](Eigen::MatrixXd& w) {
    const double bound = scale / std::sqrt(static_cast<double>(w.cols()));
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = rng.uniform(-bound, bound);
  };
  for (auto& layer : m.layers) {
    fill(layer.Wz);
    fill(layer.Wr);
    fill(layer.Wh);
    fill(layer.Uz);
    fill(layer.Ur);
    fill(layer.Uh);
  }
  Eigen::MatrixXd head(m.head_w.size(), 1);
  fill(head);
  m.head_w = head.col(0);
  return m;
}

std::size_t StackedGruModel::parameter_count() const {
  std::size_t n = static_cast<std::size_t>(head_w.size()) + 1;
  for (const auto& l : layers)
    n += static_cast<std::size_t>(3 * l.Wz.size() + 3 * l.Uz.size() + 3 * l.bz.size());
  return n;
}

void StackedGruModel::validate() const {
  for (int l = 0; l < kNumLayers; ++l) check_layer(layers[l], dims.layer_input(l), dims.hidden);
  if (head_w.size() != dims.hidden) throw FormatError("gru head shape mismatch");
  for (const auto& l : layers)
    if (!l.Wz.allFinite() || !l.Wr.allFinite() || !l.Wh.allFinite() || !l.Uz.allFinite() ||
        !l.Ur.allFinite() || !l.Uh.allFinite() || !l.bz.allFinite() || !l.br.allFinite() ||
        !l.bh.allFinite())
      throw FormatError("gru parameters must be finite");
  if (!head_w.allFinite() || !std::isfinite(head_b))
    throw FormatError("gru parameters must be finite");
}

Eigen::VectorXd stacked_forward_batch(const StackedGruModel& model, const SequenceBatch& batch,
                                      ForwardCache* cache) {
  model.validate();
  const int T = batch.steps;
  const int B = batch.batch;
  const int H = model.dims.hidden;
  if (T <= 0 || B <= 0) throw InputError("stacked_forward: empty batch");
  for (int l = 0; l < kNumLayers; ++l) {
    if (static_cast<int>(batch.streams[l].size()) != T)
      throw InputError("stacked_forward: stream length mismatch");
    for (const auto& s : batch.streams[l])
      if (s.rows() != model.dims.stream_dim(l) || s.cols() != B)
        throw InputError("stacked_forward: stream shape mismatch");
  }

  if (cache)
    for (int l = 0; l < kNumLayers; ++l) {
      cache->z[l].assign(T, Eigen::MatrixXd());
      cache->r[l].assign(T, Eigen::MatrixXd());
      cache->c[l].assign(T, Eigen::MatrixXd());
      cache->h[l].assign(T, Eigen::MatrixXd());
    }

  std::array<Eigen::MatrixXd, kNumLayers> hidden;
  hidden.fill(Eigen::MatrixXd::Zero(H, B));

  Eigen::MatrixXd x;
  for (int t = 0; t < T; ++t) {
    for (int l = 0; l < kNumLayers; ++l) {
      const GruLayer& layer = model.layers[l];
      const Eigen::MatrixXd& stream = batch.streams[l][t];
      if (l == 0) {
        x = stream;
      } else {
        x.resize(H + stream.rows(), B);
        x.topRows(H) = hidden[l - 1];
        x.bottomRows(stream.rows()) = stream;
      }
      const Eigen::MatrixXd& h_prev = hidden[l];
      Eigen::ArrayXXd z =
          sigmoid(((layer.Wz * x + layer.Uz * h_prev).colwise() + layer.bz).array());
      Eigen::ArrayXXd r =
          sigmoid(((layer.Wr * x + layer.Ur * h_prev).colwise() + layer.br).array());
      Eigen::ArrayXXd c =
          (((layer.Wh * x + layer.Uh * (r * h_prev.array()).matrix()).colwise() + layer.bh)
               .array())
              .tanh();
      Eigen::MatrixXd h_next = ((1.0 - z) * h_prev.array() + z * c).matrix();
      if (cache) {
        cache->z[l][t] = z.matrix();
        cache->r[l][t] = r.matrix();
        cache->c[l][t] = c.matrix();
        cache->h[l][t] = h_next;
      }
      hidden[l] = std::move(h_next);
    }
  }

  const Eigen::RowVectorXd logits =
      (model.head_w.transpose() * hidden[kNumLayers - 1]).array() + model.head_b;
  return sigmoid(logits.array().transpose()).matrix();
}

Gradients Gradients::zeros(const GruDims& dims) {
  Gradients g;
  StackedGruModel z = StackedGruModel::zeros(dims);
  g.layers = z.layers;
  g.head_w = z.head_w;
  g.head_b = 0.0;
  return g;
}

double stacked_backward_batch(const StackedGruModel& model, const SequenceBatch& batch,
                              const ForwardCache& cache, const Eigen::VectorXd& labels,
                              Gradients& grads) {
  const int T = batch.steps;
  const int B = batch.batch;
  const int H = model.dims.hidden;
  if (labels.size() != B) throw InputError("stacked_backward: label count mismatch");

  const Eigen::MatrixXd& h_final = cache.h[kNumLayers - 1][T - 1];
  const Eigen::RowVectorXd logits =
      (model.head_w.transpose() * h_final).array() + model.head_b;

  // Summed BCE via the numerically stable logit form:
  // loss = softplus(a) - y*a, dloss/da = sigmoid(a) - y.
  double loss = 0.0;
  Eigen::RowVectorXd dlogit(B);
  for (int i = 0; i < B; ++i) {
    const double a = logits(i);
    const double y = labels(i);
    loss += (a > 0.0 ? a + std::log1p(std::exp(-a)) : std::log1p(std::exp(a))) - y * a;
    dlogit(i) = 1.0 / (1.0 + std::exp(-a)) - y;
  }

  grads.head_w += h_final * dlogit.transpose();
  grads.head_b += dlogit.sum();

  std::array<Eigen::MatrixXd, kNumLayers> dh;
  dh.fill(Eigen::MatrixXd::Zero(H, B));
  dh[kNumLayers - 1] = model.head_w * dlogit;

  Eigen::MatrixXd x;
  for (int t = T - 1; t >= 0; --t) {
    for (int l = kNumLayers - 1; l >= 0; --l) {
      const GruLayer& layer = model.layers[l];
      GruLayer& g = grads.layers[l];
      const Eigen::MatrixXd& stream = batch.streams[l][t];
      if (l == 0) {
        x = stream;
      } else {
        x.resize(H + stream.rows(), B);
        x.topRows(H) = cache.h[l - 1][t];
        x.bottomRows(stream.rows()) = stream;
      }
      const Eigen::MatrixXd h_prev =
          t > 0 ? cache.h[l][t - 1] : Eigen::MatrixXd::Zero(H, B);
      const Eigen::ArrayXXd z = cache.z[l][t].array();
      const Eigen::ArrayXXd r = cache.r[l][t].array();
      const Eigen::ArrayXXd c = cache.c[l][t].array();
      const Eigen::ArrayXXd dH = dh[l].array();

      const Eigen::ArrayXXd dc = dH * z;
      const Eigen::ArrayXXd dz = dH * (c - h_prev.array());
      Eigen::ArrayXXd dh_prev = dH * (1.0 - z);

      const Eigen::MatrixXd da_c = (dc * (1.0 - c.square())).matrix();
      const Eigen::MatrixXd da_z = (dz * z * (1.0 - z)).matrix();

      const Eigen::MatrixXd drh = layer.Uh.transpose() * da_c;
      const Eigen::MatrixXd da_r =
          (drh.array() * h_prev.array() * r * (1.0 - r)).matrix();
      dh_prev += drh.array() * r;

      g.Wh += da_c * x.transpose();
      g.Uh += da_c * (r * h_prev.array()).matrix().transpose();
      g.bh += da_c.rowwise().sum();
      g.Wz += da_z * x.transpose();
      g.Uz += da_z * h_prev.transpose();
      g.bz += da_z.rowwise().sum();
      g.Wr += da_r * x.transpose();
      g.Ur += da_r * h_prev.transpose();
      g.br += da_r.rowwise().sum();

      dh_prev += (layer.Uz.transpose() * da_z).array() + (layer.Ur.transpose() * da_r).array();
      dh[l] = dh_prev.matrix();

      if (l > 0) {
        const Eigen::MatrixXd dx =
            layer.Wz.transpose() * da_z + layer.Wr.transpose() * da_r +
            layer.Wh.transpose() * da_c;
        dh[l - 1] += dx.topRows(H);
      }
    }
  }
  return loss;
}

}  // namespace pedcross::intent
