#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "fui/dpfl/engine.hpp"
#include "fui/error.hpp"
#include "fui/vecnum/param_vector.hpp"
#include "fui/vecnum/rng.hpp"

namespace fui::unlearning {

using vecnum::ParamVector;
using vecnum::RngStream;

/// Indistinguishability level eta^2 / 2 already delivered by eta-DP.
inline double indistinguishability_level(double eta) {
  if (!(eta > 0.0)) throw ParameterError("indistinguishability_level: eta must be > 0");
  return eta * eta / 2.0;
}

/// Noise scale sqrt(2) d / (2 eta) matching eta^2/2-indistinguishability.
inline double sigma_tilde1(double d, double eta) {
  if (!(d > 0.0) || !(eta > 0.0)) throw ParameterError("sigma_tilde1: d and eta must be > 0");
  return std::sqrt(2.0) * d / (2.0 * eta);
}

/// Noise scale d / sqrt(epsilon) required for epsilon-indistinguishability.
inline double sigma_tilde2(double d, double epsilon) {
  if (!(d > 0.0) || !(epsilon > 0.0)) throw ParameterError("sigma_tilde2: d and epsilon must be > 0");
  return d / std::sqrt(epsilon);
}

enum class DistancePolicy { kClipDiameter, kHistoryMax };

inline const char* to_string(DistancePolicy p) {
  return p == DistancePolicy::kClipDiameter ? "2C" : "history-max";
}

inline DistancePolicy parse_distance_policy(const std::string& s) {
  if (s == "2C" || s == "2c") return DistancePolicy::kClipDiameter;
  if (s == "history-max") return DistancePolicy::kHistoryMax;
  throw ParameterError("unknown d policy '" + s + "' (expected 2C or history-max)");
}

struct CalibrationReport {
  double d = 0.0;
  std::string d_policy;
  double eta = 0.0;
  double epsilon = 0.0;
  double sigma1 = 0.0;
  double sigma2 = 0.0;
  double gap = 0.0;
  double sigma_cali = 0.0;
  bool noise_added = false;
};

/// Bound on the parameter distance used by calibration.
///
/// kClipDiameter returns 2C, the diameter of the clipped parameter ball.
/// kHistoryMax returns the largest round-to-round move max_t |w^t - w^{t-1}|
/// of the recorded aggregate, falling back to 2C when that is zero.
inline double bound_d(const dpfl::RunHistory& history, DistancePolicy policy) {
  const double diameter = 2.0 * history.privacy.clip;
  if (!(diameter > 0.0)) throw ParameterError("bound_d: clip threshold must be > 0");
  if (policy == DistancePolicy::kClipDiameter) return diameter;
  double drift = 0.0;
  for (int t = 1; t <= history.num_rounds(); ++t)
    drift = std::max(drift, history.global(t).distance(history.global(t - 1)));
  return drift > 0.0 ? drift : diameter;
}

/// Noise gap and calibration scale without sampling.
inline CalibrationReport calibration_plan(double d, double eta, double epsilon) {
  CalibrationReport r;
  r.d = d;
  r.eta = eta;
  r.epsilon = epsilon;
  r.sigma1 = sigma_tilde1(d, eta);
  r.sigma2 = sigma_tilde2(d, epsilon);
  r.gap = r.sigma1 - r.sigma2;
  r.noise_added = r.gap < 0.0;
  if (r.noise_added) r.sigma_cali = std::sqrt(r.sigma2 * r.sigma2 - r.sigma1 * r.sigma1);
  return r;
}

/// Global noise calibration: returns w^LR unchanged when the gap is
/// non-negative, otherwise w^LR + N(0, sigma_cali^2) per coordinate.
inline std::pair<ParamVector, CalibrationReport> calibrate(const ParamVector& w_lr, double d, double eta,
                                                           double epsilon, const RngStream& rng) {
  CalibrationReport r = calibration_plan(d, eta, epsilon);
  if (!r.noise_added) return {w_lr, r};
  return {w_lr + vecnum::gaussian_sample(r.sigma_cali, w_lr.dim(), rng), r};
}

}  // namespace fui::unlearning
