#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>
#include <utility>
#include <vector>

#include "fui/error.hpp"
#include "fui/vecnum/param_vector.hpp"

namespace fui::vecnum {

/// Closed l2 ball { v : |v - center| <= radius }.
struct BallConstraint {
  ParamVector center;
  double radius = 0.0;

  bool contains(const ParamVector& v, double slack = 1e-12) const {
    return v.distance(center) <= radius * (1.0 + slack) + slack;
  }

  /// Radial projection of v onto the ball.
  ParamVector project(const ParamVector& v) const {
    const double dist = v.distance(center);
    if (dist <= radius) return v;
    ParamVector out = v - center;
    out *= radius / dist;
    out += center;
    return out;
  }
};

struct LbfgsOptions {
  double step = 0.1;           // fixed step size alpha
  double tolerance = 1e-6;     // stop when |w_{k+1} - w_k| <= tolerance
  int max_iterations = 500;
  double initial_scale = 1.0;  // H_0 = initial_scale * I
  int memory = 0;              // 0: dense inverse-Hessian; > 0: two-loop with this history
};

enum class LbfgsStatus { kConverged, kBoundary, kMaxIterations };

inline const char* to_string(LbfgsStatus s) {
  switch (s) {
    case LbfgsStatus::kConverged: return "converged";
    case LbfgsStatus::kBoundary: return "boundary";
    case LbfgsStatus::kMaxIterations: return "max_iterations";
  }
  return "unknown";
}

struct LbfgsResult {
  ParamVector point;
  double value = 0.0;
  LbfgsStatus status = LbfgsStatus::kMaxIterations;
  int iterations = 0;
  int skipped_updates = 0;
};

namespace detail {

constexpr double kCurvatureGuard = 1e-12;

// Explicit dim x dim inverse-Hessian approximation.
class DenseInverseHessian {
 public:
  DenseInverseHessian(std::size_t n, double scale) : n_(n), h_(n * n, 0.0) {
    for (std::size_t i = 0; i < n; ++i) h_[i * n + i] = scale;
  }

  std::vector<double> apply(std::span<const double> g) const {
    std::vector<double> out(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      double acc = 0.0;
      const double* row = &h_[i * n_];
      for (std::size_t j = 0; j < n_; ++j) acc += row[j] * g[j];
      out[i] = acc;
    }
    return out;
  }

  // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T, expanded for symmetric H.
  void update(std::span<const double> s, std::span<const double> y, double rho) {
    const std::vector<double> hy = apply(y);
    double yhy = 0.0;
    for (std::size_t i = 0; i < n_; ++i) yhy += y[i] * hy[i];
    const double coef = rho * rho * yhy + rho;
    for (std::size_t i = 0; i < n_; ++i) {
      double* row = &h_[i * n_];
      for (std::size_t j = 0; j < n_; ++j)
        row[j] += -rho * (s[i] * hy[j] + hy[i] * s[j]) + coef * s[i] * s[j];
    }
  }

 private:
  std::size_t n_;
  std::vector<double> h_;
};

// Limited-memory representation applied with the two-loop recursion.
class TwoLoopInverseHessian {
 public:
  TwoLoopInverseHessian(std::size_t n, double scale, int memory)
      : n_(n), scale_(scale), memory_(static_cast<std::size_t>(memory)) {}

  std::vector<double> apply(std::span<const double> g) const {
    std::vector<double> q(g.begin(), g.end());
    std::vector<double> alpha(pairs_.size(), 0.0);
    for (std::size_t k = pairs_.size(); k-- > 0;) {
      const auto& p = pairs_[k];
      double a = 0.0;
      for (std::size_t i = 0; i < n_; ++i) a += p.s[i] * q[i];
      a *= p.rho;
      alpha[k] = a;
      for (std::size_t i = 0; i < n_; ++i) q[i] -= a * p.y[i];
    }
    for (double& v : q) v *= scale_;
    for (std::size_t k = 0; k < pairs_.size(); ++k) {
      const auto& p = pairs_[k];
      double b = 0.0;
      for (std::size_t i = 0; i < n_; ++i) b += p.y[i] * q[i];
      b *= p.rho;
      for (std::size_t i = 0; i < n_; ++i) q[i] += (alpha[k] - b) * p.s[i];
    }
    return q;
  }

  void update(std::span<const double> s, std::span<const double> y, double rho) {
    pairs_.push_back({{s.begin(), s.end()}, {y.begin(), y.end()}, rho});
    if (pairs_.size() > memory_) pairs_.pop_front();
  }

 private:
  struct Pair {
    std::vector<double> s, y;
    double rho;
  };
  std::size_t n_;
  double scale_;
  std::size_t memory_;
  std::deque<Pair> pairs_;
};

template <class Hessian, class Objective, class Gradient>
LbfgsResult lbfgs_ascent(Objective&& objective, Gradient&& gradient, const BallConstraint& ball,
                         const LbfgsOptions& opt, Hessian hess) {
  auto eval = [&](const ParamVector& w, long k) {
    const double f = objective(w);
    if (!std::isfinite(f)) throw NumericalError("lbfgs_maximize: non-finite objective", k);
    ParamVector g = gradient(w);
    if (g.dim() != w.dim()) throw ParameterError("lbfgs_maximize: gradient dimension mismatch");
    if (!g.all_finite()) throw NumericalError("lbfgs_maximize: non-finite gradient", k);
    return std::pair<double, ParamVector>(f, std::move(g));
  };

  LbfgsResult res;
  ParamVector w = ball.center;
  auto [f, g] = eval(w, 0);

  for (int k = 0; k < opt.max_iterations; ++k) {
    const std::vector<double> dir = hess.apply(g.values());
    std::vector<double> next_raw(w.raw());
    for (std::size_t i = 0; i < next_raw.size(); ++i) next_raw[i] += opt.step * dir[i];
    for (double v : next_raw)
      if (!std::isfinite(v)) throw NumericalError("lbfgs_maximize: non-finite iterate", k + 1);
    ParamVector next(std::move(next_raw));
    res.iterations = k + 1;

    if (next.distance(ball.center) > ball.radius) {
      res.point = ball.project(next);
      res.value = objective(res.point);
      if (!std::isfinite(res.value)) throw NumericalError("lbfgs_maximize: non-finite objective", k + 1);
      res.status = LbfgsStatus::kBoundary;
      return res;
    }
    if (next.distance(w) <= opt.tolerance) {
      res.point = std::move(next);
      res.value = objective(res.point);
      res.status = LbfgsStatus::kConverged;
      return res;
    }

    auto [f_next, g_next] = eval(next, k + 1);
    std::vector<double> s(w.dim()), y(w.dim());
    double ys = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = next[i] - w[i];
      y[i] = g_next[i] - g[i];
      ys += y[i] * s[i];
    }
    if (std::abs(ys) < kCurvatureGuard) {
      ++res.skipped_updates;
    } else {
      // Fold the curvature sign into y so H stays positive definite on both
      // convex (ys > 0) and concave (ys < 0) stretches; H g is then always an
      // ascent direction.
      if (ys < 0.0)
        for (double& v : y) v = -v;
      hess.update(s, y, 1.0 / std::abs(ys));
    }
    w = std::move(next);
    f = f_next;
    g = std::move(g_next);
  }
  res.point = std::move(w);
  res.value = f;
  res.status = LbfgsStatus::kMaxIterations;
  return res;
}

}  // namespace detail

/// Maximizes `objective` over `ball` with the fixed-step quasi-Newton ascent
/// w_{k+1} = w_k + step * H_k grad(w_k), starting at the ball center with
/// H_0 = initial_scale * I.
///
/// The inverse-Hessian update uses s_k = w_{k+1} - w_k and the gradient
/// difference y_k; pairs with |y_k^T s_k| < 1e-12 are skipped. Iteration stops
/// when a step is shorter than `tolerance`, when the proposed iterate leaves the
/// ball (it is then projected radially onto the boundary), or after
/// `max_iterations` steps. The returned point always lies in the ball.
///
/// `objective` maps ParamVector -> double, `gradient` maps ParamVector -> ParamVector.
template <class Objective, class Gradient>
LbfgsResult lbfgs_maximize(Objective&& objective, Gradient&& gradient, const BallConstraint& ball,
                           const LbfgsOptions& opt = {}) {
  if (!(ball.radius > 0.0)) throw ParameterError("lbfgs_maximize: ball radius must be > 0");
  if (ball.center.empty()) throw ParameterError("lbfgs_maximize: empty center");
  if (!(opt.step > 0.0) || !(opt.tolerance > 0.0) || opt.max_iterations <= 0 ||
      !(opt.initial_scale > 0.0) || opt.memory < 0)
    throw ParameterError("lbfgs_maximize: invalid options");
  const std::size_t n = ball.center.dim();
  if (opt.memory == 0)
    return detail::lbfgs_ascent(objective, gradient, ball, opt,
                                detail::DenseInverseHessian(n, opt.initial_scale));
  return detail::lbfgs_ascent(objective, gradient, ball, opt,
                              detail::TwoLoopInverseHessian(n, opt.initial_scale, opt.memory));
}

struct MinimizeOptions {
  double gradient_tolerance = 1e-8;  // stop when |grad| falls below this
  int max_iterations = 2000;
  int memory = 10;
};

/// Unconstrained L-BFGS minimization with Armijo backtracking, starting at `start`.
template <class Objective, class Gradient>
LbfgsResult lbfgs_minimize(Objective&& objective, Gradient&& gradient, const ParamVector& start,
                           const MinimizeOptions& opt = {}) {
  if (start.empty()) throw ParameterError("lbfgs_minimize: empty start");
  if (opt.memory <= 0 || opt.max_iterations <= 0) throw ParameterError("lbfgs_minimize: invalid options");
  LbfgsResult res;
  ParamVector w = start;
  double f = objective(w);
  ParamVector g = gradient(w);
  detail::TwoLoopInverseHessian hess(w.dim(), 1.0, opt.memory);
  for (int k = 0; k < opt.max_iterations; ++k) {
    res.iterations = k;
    if (g.norm() <= opt.gradient_tolerance) {
      res.status = LbfgsStatus::kConverged;
      break;
    }
    std::vector<double> dir = hess.apply(g.values());
    double slope = 0.0;
    for (std::size_t i = 0; i < dir.size(); ++i) {
      dir[i] = -dir[i];
      slope += dir[i] * g[i];
    }
    if (!(slope < 0.0)) {  // not a descent direction: fall back to steepest descent
      for (std::size_t i = 0; i < dir.size(); ++i) dir[i] = -g[i];
      slope = -g.squared_norm();
    }
    double t = k == 0 ? std::min(1.0, 1.0 / g.norm()) : 1.0;
    ParamVector next;
    double f_next = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
      std::vector<double> raw(w.raw());
      for (std::size_t i = 0; i < raw.size(); ++i) raw[i] += t * dir[i];
      next = ParamVector(std::move(raw));
      f_next = objective(next);
      if (std::isfinite(f_next) && f_next <= f + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      res.status = LbfgsStatus::kConverged;  // no further decrease representable
      break;
    }
    const bool stalled = f - f_next <= 1e-15 * std::abs(f);
    ParamVector g_next = gradient(next);
    std::vector<double> s(w.dim()), y(w.dim());
    double ys = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = next[i] - w[i];
      y[i] = g_next[i] - g[i];
      ys += y[i] * s[i];
    }
    if (ys > detail::kCurvatureGuard) {
      hess.update(s, y, 1.0 / ys);
    } else {
      ++res.skipped_updates;
    }
    w = std::move(next);
    f = f_next;
    g = std::move(g_next);
    res.iterations = k + 1;
    if (stalled) {
      res.status = LbfgsStatus::kConverged;  // round-off floor reached
      break;
    }
  }
  res.point = std::move(w);
  res.value = f;
  return res;
}

}  // namespace fui::vecnum
