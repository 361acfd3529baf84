#pragma once

#include <string>
#include <vector>

#include "fui/eval/pipeline.hpp"

namespace fui::eval {

struct SweepRow {
  double eta = 0.0;
  double epsilon = 0.0;
  double accuracy_fui = 0.0;
  double accuracy_retrain = 0.0;
  bool noise_added = false;
};

/// Accuracy of FUI and of retraining over an (eta, epsilon) grid.
///
/// Every grid point uses the random streams of a direct `run_pipeline` with
/// the same seed, so a single point reproduces that run exactly. Training,
/// retraining and retraction depend only on eta and are computed once per
/// eta; calibration is redone per epsilon. Epsilon values at or above
/// eta^2/2 are evaluated with the calibration formula as is (no noise once
/// epsilon >= 2 eta^2), which is what exposes the flat region of the curve.
inline std::vector<SweepRow> privacy_sweep(const Config& base, const std::vector<double>& etas,
                                           const std::vector<double>& epsilons) {
  if (etas.empty() || epsilons.empty()) throw ParameterError("privacy_sweep: empty grid");
  for (double v : etas)
    if (!(v > 0.0)) throw ParameterError("privacy_sweep: eta values must be > 0");
  for (double v : epsilons)
    if (!(v > 0.0)) throw ParameterError("privacy_sweep: epsilon values must be > 0");

  const RngStream root(base.seed);
  const PreparedData data = prepare_data(base, root);
  const ModelSpec spec = model_spec(base, data.train);
  const auto target = static_cast<std::size_t>(base.target);
  const auto opt = fui_options(base);

  std::vector<SweepRow> rows;
  for (double eta : etas) {
    const std::string ctx = "privacy_sweep eta=" + harness::detail::format_double(eta);
    try {
      Config cfg = base;
      cfg.eta = eta;
      const auto dcfg = dpfl_config(cfg, spec);
      const auto history = dpfl::run_dpfl(dcfg, data.clients, root.child("train"));
      const auto retrained = unlearning::retrain_baseline(dcfg, data.train, data.plan, target, root.child("retrain"));
      const double acc_re = models::accuracy(spec, retrained.history.final_broadcast(), data.test);
      unlearning::UnlearnRequest req = unlearn_request(cfg);
      const auto retraction = unlearning::local_model_retraction(history, req, spec, data.client(target), opt.lbfgs);
      const double d = unlearning::bound_d(history, opt.d_policy);
      for (double eps : epsilons) {
        auto [w_un, report] =
            unlearning::calibrate(retraction.retracted, d, eta, eps, root.child("unlearn").child("calibration"));
        rows.push_back({eta, eps, models::accuracy(spec, w_un, data.test), acc_re, report.noise_added});
      }
    } catch (const NumericalError& e) {
      throw NumericalError(ctx + ": " + e.what());
    } catch (const ParameterError& e) {
      throw ParameterError(ctx + ": " + e.what());
    } catch (const std::exception& e) {
      throw Error(ctx + ": " + e.what());
    }
  }
  return rows;
}

}  // namespace fui::eval
