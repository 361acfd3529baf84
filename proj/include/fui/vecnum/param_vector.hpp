#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fui/error.hpp"

namespace fui::vecnum {

/// Flat, finite-valued model parameter vector.
///
/// Every public operation either returns a vector whose entries are all
/// finite or throws NumericalError. Binary operations require equal
/// dimensions and throw ParameterError otherwise.
class ParamVector {
 public:
  ParamVector() = default;

  /// Zero vector of the given dimension.
  explicit ParamVector(std::size_t dim) : values_(dim, 0.0) {}

  explicit ParamVector(std::vector<double> values) : values_(std::move(values)) {
    require_finite("ParamVector");
  }

  ParamVector(std::initializer_list<double> values) : values_(values) {
    require_finite("ParamVector");
  }

  std::size_t dim() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& raw() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  double dot(const ParamVector& other) const {
    require_same_dim(other, "dot");
    double acc = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) acc += values_[i] * other.values_[i];
    return acc;
  }

  double squared_norm() const noexcept {
    double acc = 0.0;
    for (double v : values_) acc += v * v;
    return acc;
  }

  double norm() const noexcept { return std::sqrt(squared_norm()); }

  double distance(const ParamVector& other) const {
    require_same_dim(other, "distance");
    double acc = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) {
      const double d = values_[i] - other.values_[i];
      acc += d * d;
    }
    return std::sqrt(acc);
  }

  /// this += a * x
  ParamVector& axpy(double a, const ParamVector& x) {
    require_same_dim(x, "axpy");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += a * x.values_[i];
    require_finite("axpy");
    return *this;
  }

  ParamVector& operator+=(const ParamVector& other) { return axpy(1.0, other); }
  ParamVector& operator-=(const ParamVector& other) { return axpy(-1.0, other); }

  ParamVector& operator*=(double a) {
    for (double& v : values_) v *= a;
    require_finite("scale");
    return *this;
  }

  friend ParamVector operator+(ParamVector a, const ParamVector& b) { return a += b; }
  friend ParamVector operator-(ParamVector a, const ParamVector& b) { return a -= b; }
  friend ParamVector operator*(ParamVector a, double s) { return a *= s; }
  friend ParamVector operator*(double s, ParamVector a) { return a *= s; }

  /// Bitwise equality of dimension and entries.
  friend bool operator==(const ParamVector& a, const ParamVector& b) {
    return a.values_ == b.values_;
  }

  bool all_finite() const noexcept {
    for (double v : values_)
      if (!std::isfinite(v)) return false;
    return true;
  }

 private:
  void require_same_dim(const ParamVector& other, const char* op) const {
    if (other.dim() != dim()) {
      throw ParameterError(std::string("ParamVector::") + op + ": dimension mismatch (" +
                           std::to_string(dim()) + " vs " + std::to_string(other.dim()) + ")");
    }
  }

  void require_finite(const char* op) const {
    if (!all_finite()) throw NumericalError(std::string(op) + ": non-finite entry");
  }

  std::vector<double> values_;
};

/// Linear combination sum_k weights[k] * vectors[k]; all vectors share one dimension.
inline ParamVector weighted_sum(std::span<const ParamVector> vectors, std::span<const double> weights) {
  if (vectors.empty()) throw ParameterError("weighted_sum: empty input");
  if (vectors.size() != weights.size()) throw ParameterError("weighted_sum: weight count mismatch");
  ParamVector out(vectors.front().dim());
  for (std::size_t k = 0; k < vectors.size(); ++k) out.axpy(weights[k], vectors[k]);
  return out;
}

}  // namespace fui::vecnum
