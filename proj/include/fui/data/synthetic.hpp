#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "fui/error.hpp"
#include "fui/models/dataset.hpp"
#include "fui/vecnum/rng.hpp"

namespace fui::data {

using models::LabeledDataset;
using vecnum::RngStream;

/// Isotropic Gaussian blobs centred on the vertices of a scaled standard
/// simplex: class k < input_dim sits at scale * e_k, class input_dim (if
/// present) at the origin.
struct BlobGenerator {
  int num_classes = 2;
  std::size_t input_dim = 2;
  double spread = 1.0;
  double scale = 1.0;

  void validate() const {
    if (num_classes < 2) throw ParameterError("gen_synthetic: num_classes must be >= 2");
    if (input_dim == 0) throw ParameterError("gen_synthetic: input_dim must be >= 1");
    if (static_cast<std::size_t>(num_classes) > input_dim + 1)
      throw ParameterError("gen_synthetic: num_classes must be <= input_dim + 1 (simplex vertices)");
    if (!(spread > 0.0) || !(scale > 0.0)) throw ParameterError("gen_synthetic: spread and scale must be > 0");
  }

  /// n samples; sample i has class i mod num_classes, so class counts differ by at most one.
  LabeledDataset sample(std::size_t n, const RngStream& rng) const {
    validate();
    if (n < static_cast<std::size_t>(num_classes))
      throw ParameterError("gen_synthetic: n must be >= num_classes");
    std::vector<double> features(n * input_dim);
    std::vector<int> labels(n);
    auto eng = rng.engine();
    std::normal_distribution<double> noise(0.0, spread);
    for (std::size_t i = 0; i < n; ++i) {
      const int y = static_cast<int>(i % static_cast<std::size_t>(num_classes));
      labels[i] = y;
      for (std::size_t j = 0; j < input_dim; ++j) {
        const double mean = (static_cast<std::size_t>(y) == j) ? scale : 0.0;
        features[i * input_dim + j] = mean + noise(eng);
      }
    }
    return LabeledDataset(input_dim, num_classes, std::move(features), std::move(labels));
  }
};

inline LabeledDataset gen_synthetic(int num_classes, std::size_t input_dim, std::size_t n, double spread,
                                    const RngStream& rng, double scale = 1.0) {
  return BlobGenerator{num_classes, input_dim, spread, scale}.sample(n, rng);
}

}  // namespace fui::data
