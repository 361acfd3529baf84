#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "fui/error.hpp"
#include "fui/models/model.hpp"

namespace fui::eval {

using models::LabeledDataset;
using models::ModelSpec;
using vecnum::ParamVector;

struct EvalReport {
  std::string method;  // original, retrain or fui
  std::string dataset;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  double prediction_loss = 0.0;
  double runtime_s = 0.0;
  double mia_precision = 0.0;
  double mia_recall = 0.0;
};

/// Summed cross-entropy over the test set, no regularizer.
inline double prediction_loss(const ModelSpec& spec, const ParamVector& w, const LabeledDataset& test) {
  if (test.empty()) throw ParameterError("prediction_loss: empty test set");
  return models::summed_cross_entropy(spec, w, test);
}

/// Accuracy and prediction loss of w on the test set.
inline EvalReport evaluate(const std::string& method, const ModelSpec& spec, const ParamVector& w,
                           const LabeledDataset& test) {
  EvalReport r;
  r.method = method;
  r.accuracy = models::accuracy(spec, w, test);
  r.prediction_loss = prediction_loss(spec, w, test);
  return r;
}

/// Average ranks, ties sharing the mean of the positions they occupy.
inline std::vector<double> ranks(const std::vector<double>& xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> r(xs.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

/// Spearman rank correlation (Pearson correlation of tie-averaged ranks).
/// Returns 0 when either side is constant.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ParameterError("spearman: need two equal-length series of size >= 2");
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

inline double median(std::vector<double> xs) {
  if (xs.empty()) throw ParameterError("median: empty input");
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

}  // namespace fui::eval
