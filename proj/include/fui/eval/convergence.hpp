#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "fui/dpfl/engine.hpp"
#include "fui/error.hpp"
#include "fui/models/model.hpp"
#include "fui/vecnum/lbfgs.hpp"
#include "fui/vecnum/rng.hpp"

namespace fui::eval {

struct ConvergenceOptions {
  int local_updates = 1;         // K: SGD steps per client per round
  int curvature_probes = 20;     // random directions for mu / Upsilon
  double probe_step = 1e-3;      // second-difference spacing
  int variance_probes = 50;      // minibatches for sigma^2
  std::size_t batch_size = 100;  // minibatch size of the variance probes
};

struct ConvergenceDiag {
  vecnum::ParamVector w_star;
  double f_star = 0.0;
  std::vector<double> gaps;   // F(w^t) - F(w*), t = 0..T
  std::vector<double> bound;  // bound at t = 0..T with the estimates below
  double mu = 0.0;
  double upsilon = 0.0;
  double sigma2 = 0.0;
};

/// Empirical optimality-gap diagnostic for a strongly convex run.
///
/// w* minimizes the regularized mean loss F on `full_data` (L-BFGS to a
/// gradient norm of 1e-8 or the round-off floor). mu and Upsilon are the smallest and largest
/// random-direction curvatures (F(w*+hu) - 2F(w*) + F(w*-hu)) / h^2 over unit
/// directions u; sigma^2 is the mean squared deviation of minibatch gradients
/// from the full gradient at w*. The bound at round t is
///   Upsilon / (2 mu (t+1)) * ((1/K) sum_i |w_i^0 - w*|^2 + 2 sigma^2 / (mu^2 K)).
inline ConvergenceDiag convergence_report(const dpfl::RunHistory& history, const models::ModelSpec& spec,
                                          const models::LabeledDataset& full_data, const ConvergenceOptions& opt,
                                          const vecnum::RngStream& rng) {
  if (spec.kind != models::ModelKind::kSoftmaxRegression || !(spec.l2_reg > 0.0))
    throw ParameterError("convergence_report: requires softmax regression with l2_reg > 0 (strongly convex loss)");
  if (full_data.empty()) throw ParameterError("convergence_report: empty dataset");
  if (opt.local_updates < 1 || opt.curvature_probes < 1 || opt.variance_probes < 1 || !(opt.probe_step > 0.0))
    throw ParameterError("convergence_report: invalid options");

  auto f = [&](const vecnum::ParamVector& w) { return models::loss(spec, w, full_data); };
  auto g = [&](const vecnum::ParamVector& w) { return models::grad(spec, w, full_data); };

  ConvergenceDiag out;
  vecnum::MinimizeOptions mopt;
  mopt.max_iterations = 5000;
  const auto opt_res = vecnum::lbfgs_minimize(f, g, history.initial, mopt);
  out.w_star = opt_res.point;
  out.f_star = opt_res.value;

  for (int t = 0; t <= history.num_rounds(); ++t) out.gaps.push_back(f(history.global(t)) - out.f_star);

  auto eng = rng.child("curvature").engine();
  std::normal_distribution<double> normal(0.0, 1.0);
  out.mu = std::numeric_limits<double>::infinity();
  out.upsilon = 0.0;
  const double h = opt.probe_step;
  for (int k = 0; k < opt.curvature_probes; ++k) {
    std::vector<double> u(out.w_star.dim());
    for (double& v : u) v = normal(eng);
    vecnum::ParamVector dir(std::move(u));
    dir *= 1.0 / dir.norm();
    const double c = (f(out.w_star + dir * h) - 2.0 * out.f_star + f(out.w_star - dir * h)) / (h * h);
    out.mu = std::min(out.mu, c);
    out.upsilon = std::max(out.upsilon, c);
  }
  out.mu = std::max(out.mu, spec.l2_reg);  // the regularizer alone guarantees this much curvature
  out.upsilon = std::max(out.upsilon, out.mu);

  const vecnum::ParamVector full_grad = g(out.w_star);
  const std::size_t batch = std::min(opt.batch_size, full_data.size());
  std::vector<std::size_t> idx(full_data.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto beng = rng.child("variance").engine();
  double acc = 0.0;
  for (int k = 0; k < opt.variance_probes; ++k) {
    std::shuffle(idx.begin(), idx.end(), beng);
    const auto mb = full_data.subset({idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(batch)});
    acc += (models::grad(spec, out.w_star, mb) - full_grad).squared_norm();
  }
  out.sigma2 = acc / opt.variance_probes;

  // Every client starts from the same initial model.
  const double spread = static_cast<double>(history.num_clients()) * (history.initial - out.w_star).squared_norm();
  const double kk = static_cast<double>(opt.local_updates);
  const double inner = spread / kk + 2.0 * out.sigma2 / (out.mu * out.mu * kk);
  for (int t = 0; t <= history.num_rounds(); ++t)
    out.bound.push_back(out.upsilon / (2.0 * out.mu * (t + 1)) * inner);
  return out;
}

}  // namespace fui::eval
