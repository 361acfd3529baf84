#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fui/error.hpp"

namespace fui::models {

/// Row-major feature matrix with integer class labels.
class LabeledDataset {
 public:
  LabeledDataset() = default;

  LabeledDataset(std::size_t input_dim, int num_classes, std::vector<double> features,
                 std::vector<int> labels)
      : input_dim_(input_dim),
        num_classes_(num_classes),
        features_(std::move(features)),
        labels_(std::move(labels)) {
    if (input_dim_ == 0) throw ParameterError("LabeledDataset: input_dim must be >= 1");
    if (num_classes_ < 2) throw ParameterError("LabeledDataset: num_classes must be >= 2");
    if (features_.size() != labels_.size() * input_dim_)
      throw ParameterError("LabeledDataset: feature matrix does not match label count");
    for (double v : features_)
      if (!std::isfinite(v)) throw ParameterError("LabeledDataset: non-finite feature");
    for (int y : labels_)
      if (y < 0 || y >= num_classes_)
        throw ParameterError("LabeledDataset: label " + std::to_string(y) + " outside [0, " +
                             std::to_string(num_classes_) + ")");
  }

  std::size_t size() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }
  std::size_t input_dim() const noexcept { return input_dim_; }
  int num_classes() const noexcept { return num_classes_; }

  std::span<const double> row(std::size_t i) const {
    return {features_.data() + i * input_dim_, input_dim_};
  }
  int label(std::size_t i) const { return labels_[i]; }

  const std::vector<double>& features() const noexcept { return features_; }
  const std::vector<int>& labels() const noexcept { return labels_; }

  /// Rows selected by `indices`, in the given order.
  LabeledDataset subset(std::span<const std::size_t> indices) const {
    std::vector<double> f;
    std::vector<int> l;
    f.reserve(indices.size() * input_dim_);
    l.reserve(indices.size());
    for (std::size_t idx : indices) {
      if (idx >= size()) throw ParameterError("LabeledDataset::subset: index out of range");
      const auto r = row(idx);
      f.insert(f.end(), r.begin(), r.end());
      l.push_back(labels_[idx]);
    }
    return LabeledDataset(input_dim_, num_classes_, std::move(f), std::move(l));
  }

  /// Concatenation of rows; both sets must share input_dim and num_classes.
  static LabeledDataset concat(const LabeledDataset& a, const LabeledDataset& b) {
    if (a.input_dim_ != b.input_dim_ || a.num_classes_ != b.num_classes_)
      throw ParameterError("LabeledDataset::concat: incompatible shapes");
    std::vector<double> f = a.features_;
    f.insert(f.end(), b.features_.begin(), b.features_.end());
    std::vector<int> l = a.labels_;
    l.insert(l.end(), b.labels_.begin(), b.labels_.end());
    return LabeledDataset(a.input_dim_, a.num_classes_, std::move(f), std::move(l));
  }

  friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;

 private:
  std::size_t input_dim_ = 0;
  int num_classes_ = 0;
  std::vector<double> features_;
  std::vector<int> labels_;
};

}  // namespace fui::models
