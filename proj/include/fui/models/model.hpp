#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fui/error.hpp"
#include "fui/models/dataset.hpp"
#include "fui/vecnum/param_vector.hpp"
#include "fui/vecnum/rng.hpp"

namespace fui::models {

using vecnum::ParamVector;
using vecnum::RngStream;

enum class ModelKind { kSoftmaxRegression, kMlp };

inline const char* to_string(ModelKind k) {
  return k == ModelKind::kSoftmaxRegression ? "softmax" : "mlp";
}

/// Shape and regularization of a classifier.
///
/// Parameter layout (all matrices row-major, weights first, then biases):
///   softmax: W[num_classes x input_dim], b[num_classes]
///   mlp:     W1[hidden x input_dim], W2[num_classes x hidden], b1[hidden], b2[num_classes]
/// The mlp uses a ReLU hidden layer.
struct ModelSpec {
  ModelKind kind = ModelKind::kSoftmaxRegression;
  std::size_t input_dim = 1;
  int num_classes = 2;
  std::size_t hidden_dim = 0;
  double l2_reg = 1e-3;

  std::size_t param_dim() const {
    const std::size_t k = static_cast<std::size_t>(num_classes);
    if (kind == ModelKind::kSoftmaxRegression) return k * input_dim + k;
    return hidden_dim * input_dim + k * hidden_dim + hidden_dim + k;
  }

  void validate() const {
    if (input_dim == 0) throw ParameterError("ModelSpec: input_dim must be >= 1");
    if (num_classes < 2) throw ParameterError("ModelSpec: num_classes must be >= 2");
    if (kind == ModelKind::kMlp && hidden_dim == 0)
      throw ParameterError("ModelSpec: mlp requires hidden_dim >= 1");
    if (!(l2_reg >= 0.0) || !std::isfinite(l2_reg)) throw ParameterError("ModelSpec: l2_reg must be >= 0");
  }

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

namespace detail {

inline void check_shapes(const ModelSpec& spec, const ParamVector& w, const LabeledDataset& data,
                         const char* op) {
  spec.validate();
  if (w.dim() != spec.param_dim())
    throw ParameterError(std::string(op) + ": parameter dimension " + std::to_string(w.dim()) +
                         " does not match model (" + std::to_string(spec.param_dim()) + ")");
  if (!data.empty() && data.input_dim() != spec.input_dim)
    throw ParameterError(std::string(op) + ": dataset input_dim does not match model");
  if (!data.empty() && data.num_classes() > spec.num_classes)
    throw ParameterError(std::string(op) + ": dataset has more classes than the model");
}

// Writes class logits for x into `logits` (size num_classes). For the mlp the
// hidden activations are stored in `hidden` (size hidden_dim).
inline void forward(const ModelSpec& spec, std::span<const double> w, std::span<const double> x,
                    std::vector<double>& hidden, std::vector<double>& logits) {
  const std::size_t d = spec.input_dim;
  const std::size_t k = static_cast<std::size_t>(spec.num_classes);
  logits.assign(k, 0.0);
  if (spec.kind == ModelKind::kSoftmaxRegression) {
    const double* bias = w.data() + k * d;
    for (std::size_t c = 0; c < k; ++c) {
      const double* row = w.data() + c * d;
      double z = bias[c];
      for (std::size_t j = 0; j < d; ++j) z += row[j] * x[j];
      logits[c] = z;
    }
    return;
  }
  const std::size_t h = spec.hidden_dim;
  const double* w1 = w.data();
  const double* w2 = w1 + h * d;
  const double* b1 = w2 + k * h;
  const double* b2 = b1 + h;
  hidden.assign(h, 0.0);
  for (std::size_t u = 0; u < h; ++u) {
    double a = b1[u];
    const double* row = w1 + u * d;
    for (std::size_t j = 0; j < d; ++j) a += row[j] * x[j];
    hidden[u] = a > 0.0 ? a : 0.0;
  }
  for (std::size_t c = 0; c < k; ++c) {
    double z = b2[c];
    const double* row = w2 + c * h;
    for (std::size_t u = 0; u < h; ++u) z += row[u] * hidden[u];
    logits[c] = z;
  }
}

// logits -> probabilities in place; returns log-sum-exp of the logits.
inline double softmax_inplace(std::vector<double>& z) {
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - zmax);
    sum += v;
  }
  for (double& v : z) v /= sum;
  return zmax + std::log(sum);
}

// Sums cross-entropy over the selected rows; if `grad` is non-null the summed
// gradient is added into it.
inline double accumulate(const ModelSpec& spec, std::span<const double> w, const LabeledDataset& data,
                         std::span<const std::size_t> rows, double* grad) {
  const std::size_t d = spec.input_dim;
  const std::size_t k = static_cast<std::size_t>(spec.num_classes);
  const std::size_t h = spec.hidden_dim;
  std::vector<double> hidden, z, dh;
  double total = 0.0;
  for (std::size_t idx : rows) {
    const auto x = data.row(idx);
    const int y = data.label(idx);
    forward(spec, w, x, hidden, z);
    const double zy = z[static_cast<std::size_t>(y)];
    const double lse = softmax_inplace(z);
    total += lse - zy;
    if (grad == nullptr) continue;
    z[static_cast<std::size_t>(y)] -= 1.0;  // z now holds dL/dlogits
    if (spec.kind == ModelKind::kSoftmaxRegression) {
      for (std::size_t c = 0; c < k; ++c) {
        double* row = grad + c * d;
        const double dz = z[c];
        for (std::size_t j = 0; j < d; ++j) row[j] += dz * x[j];
      }
      double* gb = grad + k * d;
      for (std::size_t c = 0; c < k; ++c) gb[c] += z[c];
      continue;
    }
    const double* w2 = w.data() + h * d;
    double* gw1 = grad;
    double* gw2 = gw1 + h * d;
    double* gb1 = gw2 + k * h;
    double* gb2 = gb1 + h;
    dh.assign(h, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
      const double dz = z[c];
      gb2[c] += dz;
      double* grow = gw2 + c * h;
      const double* wrow = w2 + c * h;
      for (std::size_t u = 0; u < h; ++u) {
        grow[u] += dz * hidden[u];
        dh[u] += dz * wrow[u];
      }
    }
    for (std::size_t u = 0; u < h; ++u) {
      if (hidden[u] <= 0.0) continue;
      gb1[u] += dh[u];
      double* grow = gw1 + u * d;
      for (std::size_t j = 0; j < d; ++j) grow[j] += dh[u] * x[j];
    }
  }
  return total;
}

inline std::vector<std::size_t> all_rows(const LabeledDataset& data) {
  std::vector<std::size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

}  // namespace detail

/// Mean cross-entropy plus (l2_reg / 2) |w|^2.
inline double loss(const ModelSpec& spec, const ParamVector& w, const LabeledDataset& data) {
  detail::check_shapes(spec, w, data, "loss");
  if (data.empty()) throw ParameterError("loss: empty dataset");
  const auto rows = detail::all_rows(data);
  const double ce = detail::accumulate(spec, w.values(), data, rows, nullptr);
  return ce / static_cast<double>(data.size()) + 0.5 * spec.l2_reg * w.squared_norm();
}

/// Analytic gradient of `loss`.
inline ParamVector grad(const ModelSpec& spec, const ParamVector& w, const LabeledDataset& data) {
  detail::check_shapes(spec, w, data, "grad");
  if (data.empty()) throw ParameterError("grad: empty dataset");
  const auto rows = detail::all_rows(data);
  std::vector<double> g(w.dim(), 0.0);
  detail::accumulate(spec, w.values(), data, rows, g.data());
  const double inv_n = 1.0 / static_cast<double>(data.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = g[i] * inv_n + spec.l2_reg * w[i];
  return ParamVector(std::move(g));
}

/// Summed cross-entropy without the regularizer.
inline double summed_cross_entropy(const ModelSpec& spec, const ParamVector& w, const LabeledDataset& data) {
  detail::check_shapes(spec, w, data, "summed_cross_entropy");
  const auto rows = detail::all_rows(data);
  return detail::accumulate(spec, w.values(), data, rows, nullptr);
}

/// Class probabilities for one input row.
inline std::vector<double> predict_proba(const ModelSpec& spec, const ParamVector& w,
                                         std::span<const double> x) {
  std::vector<double> hidden, z;
  detail::forward(spec, w.values(), x, hidden, z);
  detail::softmax_inplace(z);
  return z;
}

/// Per-example cross-entropy and maximum predicted probability.
struct ExampleScore {
  double loss;
  double max_prob;
};

inline std::vector<ExampleScore> example_scores(const ModelSpec& spec, const ParamVector& w,
                                                const LabeledDataset& data) {
  detail::check_shapes(spec, w, data, "example_scores");
  std::vector<ExampleScore> out;
  out.reserve(data.size());
  std::vector<double> hidden, z;
  for (std::size_t i = 0; i < data.size(); ++i) {
    detail::forward(spec, w.values(), data.row(i), hidden, z);
    const double zy = z[static_cast<std::size_t>(data.label(i))];
    const double lse = detail::softmax_inplace(z);
    out.push_back({lse - zy, *std::max_element(z.begin(), z.end())});
  }
  return out;
}

/// Fraction of rows whose argmax prediction equals the label (ties go to the lowest class id).
inline double accuracy(const ModelSpec& spec, const ParamVector& w, const LabeledDataset& data) {
  detail::check_shapes(spec, w, data, "accuracy");
  if (data.empty()) throw ParameterError("accuracy: empty dataset");
  std::vector<double> hidden, z;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    detail::forward(spec, w.values(), data.row(i), hidden, z);
    const auto best = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
    if (best == data.label(i)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

struct SgdOptions {
  double learning_rate = 0.001;
  std::size_t batch_size = 100;
  int epochs = 1;
};

/// Shuffled mini-batch SGD on `loss`. A batch size larger than the dataset is
/// clamped to the dataset size; the last batch of an epoch may be short.
inline ParamVector local_sgd(const ModelSpec& spec, const ParamVector& w0, const LabeledDataset& data,
                             const SgdOptions& opt, const RngStream& rng) {
  detail::check_shapes(spec, w0, data, "local_sgd");
  if (data.empty()) throw ParameterError("local_sgd: empty dataset");
  if (!(opt.learning_rate > 0.0) || opt.batch_size == 0 || opt.epochs < 0)
    throw ParameterError("local_sgd: invalid options");
  const std::size_t batch = std::min(opt.batch_size, data.size());
  std::vector<double> w(w0.raw());
  std::vector<double> g(w.size());
  std::vector<std::size_t> order = detail::all_rows(data);
  auto eng = rng.engine();
  for (int e = 0; e < opt.epochs; ++e) {
    std::shuffle(order.begin(), order.end(), eng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t len = std::min(batch, order.size() - start);
      std::fill(g.begin(), g.end(), 0.0);
      detail::accumulate(spec, w, data, std::span(order).subspan(start, len), g.data());
      const double inv = 1.0 / static_cast<double>(len);
      for (std::size_t i = 0; i < w.size(); ++i)
        w[i] -= opt.learning_rate * (g[i] * inv + spec.l2_reg * w[i]);
    }
  }
  return ParamVector(std::move(w));
}

/// Starting parameters: zeros for softmax regression; He-scaled Gaussian
/// weights with zero biases for the mlp (an all-zero mlp has no gradient
/// through its ReLU layer).
inline ParamVector initial_parameters(const ModelSpec& spec, const RngStream& rng) {
  spec.validate();
  if (spec.kind == ModelKind::kSoftmaxRegression) return ParamVector(spec.param_dim());
  std::vector<double> w(spec.param_dim(), 0.0);
  auto eng = rng.engine();
  const std::size_t d = spec.input_dim, h = spec.hidden_dim;
  const std::size_t k = static_cast<std::size_t>(spec.num_classes);
  std::normal_distribution<double> n1(0.0, std::sqrt(2.0 / static_cast<double>(d)));
  std::normal_distribution<double> n2(0.0, std::sqrt(1.0 / static_cast<double>(h)));
  for (std::size_t i = 0; i < h * d; ++i) w[i] = n1(eng);
  for (std::size_t i = h * d; i < h * d + k * h; ++i) w[i] = n2(eng);
  return ParamVector(std::move(w));
}

}  // namespace fui::models
