#pragma once

#include <chrono>
#include <string>

#include "fui/data/partition.hpp"
#include "fui/dpfl/engine.hpp"
#include "fui/error.hpp"
#include "fui/models/model.hpp"
#include "fui/unlearning/calibration.hpp"
#include "fui/vecnum/lbfgs.hpp"

namespace fui::unlearning {

/// Raised when the requested epsilon is not below eta^2/2: the eta-DP run
/// already delivers that level of indistinguishability.
class AlreadyGuaranteedError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

struct UnlearnRequest {
  std::size_t target = 0;
  double epsilon = 5.0;
  double delta = 1.0;  // retraction radius
  int round = -1;      // history round to unlearn from; -1 selects the last round

  /// Requires eps_min <= epsilon < eta^2/2 and delta >= 0.
  void validate(double eta, double eps_min) const {
    const double upper = indistinguishability_level(eta);
    if (!(epsilon < upper))
      throw AlreadyGuaranteedError("epsilon " + std::to_string(epsilon) + " must be < eta^2/2 = " +
                                   std::to_string(upper) + ": larger values are already guaranteed by eta-DP");
    if (!(epsilon >= eps_min))
      throw ParameterError("epsilon " + std::to_string(epsilon) + " is below eps_min = " + std::to_string(eps_min));
    if (!(delta >= 0.0)) throw ParameterError("retraction radius delta must be >= 0");
  }

  int resolved_round(const dpfl::RunHistory& h) const { return round < 0 ? h.num_rounds() : round; }
};

/// w_ref = (N w^t - w_i^t) / (N - 1), using the pre-downlink-noise aggregate.
inline ParamVector reference_model(const dpfl::RunHistory& history, int t, std::size_t client) {
  const std::size_t n = history.num_clients();
  if (n < 2) throw UnlearningError("reference_model: unlearning is undefined for a single-client run");
  if (client >= n) throw ParameterError("reference_model: unknown client " + std::to_string(client));
  const auto& rec = history.round(t);
  ParamVector out = rec.global * static_cast<double>(n);
  out -= rec.submissions.at(client);
  out *= 1.0 / static_cast<double>(n - 1);
  return out;
}

struct RetractionResult {
  ParamVector reference;
  ParamVector retracted;  // w^LR
  vecnum::LbfgsResult search;
};

/// Local model retraction: maximize the target client's loss over the
/// delta-ball around the reference model.
inline RetractionResult local_model_retraction(const dpfl::RunHistory& history, const UnlearnRequest& req,
                                               const models::ModelSpec& spec,
                                               const models::LabeledDataset& target_data,
                                               const vecnum::LbfgsOptions& opt = {}) {
  RetractionResult out;
  out.reference = reference_model(history, req.resolved_round(history), req.target);
  if (req.delta == 0.0) {
    out.retracted = out.reference;
    out.search.point = out.reference;
    out.search.value = models::loss(spec, out.reference, target_data);
    out.search.status = vecnum::LbfgsStatus::kConverged;
    return out;
  }
  auto objective = [&](const ParamVector& w) { return models::loss(spec, w, target_data); };
  auto gradient = [&](const ParamVector& w) { return models::grad(spec, w, target_data); };
  out.search = vecnum::lbfgs_maximize(objective, gradient, vecnum::BallConstraint{out.reference, req.delta}, opt);
  out.retracted = out.search.point;
  return out;
}

struct FuiOptions {
  vecnum::LbfgsOptions lbfgs;
  DistancePolicy d_policy = DistancePolicy::kClipDiameter;
  double eps_min = 0.1;
};

struct UnlearnResult {
  RetractionResult retraction;
  ParamVector unlearned;  // w^UN
  CalibrationReport report;
  double retraction_seconds = 0.0;
  double calibration_seconds = 0.0;

  double runtime_seconds() const { return retraction_seconds + calibration_seconds; }
};

/// Full FUI: retraction at the target client, then calibration at the server
/// with noise drawn from rng/calibration.
inline UnlearnResult unlearn(const dpfl::RunHistory& history, const UnlearnRequest& req,
                             const models::ModelSpec& spec, const models::LabeledDataset& target_data,
                             const FuiOptions& opt, const RngStream& rng) {
  req.validate(history.privacy.eta, opt.eps_min);
  using clock = std::chrono::steady_clock;
  UnlearnResult out;
  const auto t0 = clock::now();
  out.retraction = local_model_retraction(history, req, spec, target_data, opt.lbfgs);
  const auto t1 = clock::now();
  const double d = bound_d(history, opt.d_policy);
  auto [w_un, report] = calibrate(out.retraction.retracted, d, history.privacy.eta, req.epsilon, rng.child("calibration"));
  report.d_policy = to_string(opt.d_policy);
  const auto t2 = clock::now();
  out.unlearned = std::move(w_un);
  out.report = report;
  out.retraction_seconds = std::chrono::duration<double>(t1 - t0).count();
  out.calibration_seconds = std::chrono::duration<double>(t2 - t1).count();
  return out;
}

struct RetrainResult {
  dpfl::RunHistory history;
  double runtime_seconds = 0.0;
};

/// Exact retraining baseline: a fresh DPFL run over every client except the
/// target, with the same privacy parameters (m recomputed from the rest).
inline RetrainResult retrain_baseline(const dpfl::DpflConfig& cfg, const models::LabeledDataset& data,
                                      const data::PartitionPlan& plan, std::size_t target, const RngStream& rng) {
  if (plan.num_clients() < 2) throw UnlearningError("retrain_baseline: needs at least two clients");
  const auto rest = plan.without(target);
  auto clients = data::split_by_plan(data, rest);
  RetrainResult out;
  const auto t0 = std::chrono::steady_clock::now();
  out.history = dpfl::run_dpfl(cfg, clients, rng);
  out.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace fui::unlearning
