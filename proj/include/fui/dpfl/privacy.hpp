#pragma once

#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "fui/error.hpp"
#include "fui/vecnum/param_vector.hpp"

namespace fui::dpfl {

using vecnum::ParamVector;

/// Inputs of the uplink/downlink Gaussian noise scales.
struct PrivacyParams {
  double eta = 5.0;         // DP budget
  double clip = 1.0;        // C, bound on each local model's l2 norm
  std::size_t m = 1;        // smallest client dataset
  int rounds = 1;           // T, number of aggregations
  int exposures = 1;        // L, exposures of each local model
  std::size_t clients = 1;  // N

  void validate() const {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw ParameterError("PrivacyParams: eta must be > 0");
    if (!(clip >= 0.0) || !std::isfinite(clip)) throw ParameterError("PrivacyParams: clip must be >= 0");
    if (m == 0 || clients == 0 || exposures <= 0 || rounds < 0)
      throw ParameterError("PrivacyParams: m, N, L must be >= 1 and T >= 0");
  }
};

/// sigma_U = (2C/m) / eta.
inline double uplink_sigma(const PrivacyParams& pp) {
  pp.validate();
  return (2.0 * pp.clip / static_cast<double>(pp.m)) / pp.eta;
}

/// sigma_D = 2C(T^2 - L^2 N) / (m N eta) when T > L sqrt(N), else 0.
///
/// The branch is decided on integers (T^2 > L^2 N), so T == L sqrt(N) for a
/// perfect-square N lands on the zero branch exactly.
inline double downlink_sigma(const PrivacyParams& pp) {
  pp.validate();
  const long long t = pp.rounds;
  const long long l = pp.exposures;
  const long long n = static_cast<long long>(pp.clients);
  const long long excess = t * t - l * l * n;
  if (excess <= 0) return 0.0;
  return 2.0 * pp.clip * static_cast<double>(excess) /
         (static_cast<double>(pp.m) * static_cast<double>(n) * pp.eta);
}

/// w scaled onto the C-ball if |w| > C.
inline ParamVector clip(const ParamVector& w, double c) {
  if (!(c > 0.0)) throw ParameterError("clip: threshold must be > 0");
  const double norm = w.norm();
  if (norm <= c) return w;
  return w * (c / norm);
}

/// Dataset-size weighted average; submissions are combined in the given order.
inline ParamVector aggregate(std::span<const ParamVector> models, std::span<const std::size_t> sizes) {
  if (models.empty()) throw ParameterError("aggregate: no submissions");
  if (models.size() != sizes.size()) throw ParameterError("aggregate: size list does not match submissions");
  double total = 0.0;
  for (std::size_t s : sizes) {
    if (s == 0) throw ParameterError("aggregate: dataset sizes must be positive");
    total += static_cast<double>(s);
  }
  std::vector<double> weights;
  weights.reserve(sizes.size());
  for (std::size_t s : sizes) weights.push_back(static_cast<double>(s) / total);
  return vecnum::weighted_sum(models, weights);
}

}  // namespace fui::dpfl
