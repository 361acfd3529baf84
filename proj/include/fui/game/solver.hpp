#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "fui/game/utilities.hpp"

namespace fui::game {

/// Which branch of a closed-form strategy rule was taken.
enum class RulePath {
  kClosedForm,  // concavity held and the formula was well defined
  kBoundary,    // concavity failed; best of the interval end points
  kGuard,       // formula undefined (negative radicand, zero denominator)
};

inline const char* to_string(RulePath p) {
  switch (p) {
    case RulePath::kClosedForm: return "closed_form";
    case RulePath::kBoundary: return "boundary";
    case RulePath::kGuard: return "guard";
  }
  return "?";
}

struct ClientResponse {
  double eps = 0.0;
  double utility = 0.0;
  bool feasible = false;  // U_c >= 0: the client goes ahead with unlearning
  double theorem_eps = 0.0;
  RulePath theorem_path = RulePath::kGuard;
  bool concave = false;
  bool theorem_agrees = false;  // the closed-form rule reaches the verified maximum
};

struct ServerSolution {
  bool participates = false;  // some p in (0, p_max] keeps U_c >= 0
  double p = 0.0;
  double eps = 0.0;
  double utility_server = 0.0;
  double utility_client = 0.0;
  double p_feasible_max = 0.0;
  double theorem_p = 0.0;
  RulePath theorem_path = RulePath::kGuard;
  bool concave = false;
  bool theorem_agrees = false;
};

inline constexpr double kConcavitySpacing = 1e-3;
inline constexpr double kPenaltyFloor = 1e-9;  // evaluation point for p -> 0+

namespace detail {

inline bool nearly_ge(double a, double b) { return a >= b - 1e-9 * std::max(1.0, std::abs(b)); }

// Interior stationary point of U_c in eps. With x = eps^2 the first-order
// condition sqrt(p) (s x + 1) = sqrt(r s) (x + 1) is linear in x, so there is
// at most one.
inline std::optional<double> stationary_eps(double p, const GameParams& gp) {
  const double srs = std::sqrt(gp.r * gp.s);
  const double sp = std::sqrt(p);
  const double den = gp.s * sp - srs;
  if (den == 0.0) return std::nullopt;
  const double x = (srs - sp) / den;
  if (!(x > 0.0) || !std::isfinite(x)) return std::nullopt;
  return std::sqrt(x);
}

// Best of the candidates; ties go to the smaller argument.
template <class F>
double argmax_of(const std::vector<double>& xs, F&& f) {
  double best_x = xs.front();
  double best_v = f(best_x);
  for (std::size_t i = 1; i < xs.size(); ++i) {
    const double v = f(xs[i]);
    if (v > best_v || (v == best_v && xs[i] < best_x)) {
      best_v = v;
      best_x = xs[i];
    }
  }
  return best_x;
}

// Exact client best response: the interval end points plus the clamped
// stationary point cover every case because U_c has at most one interior
// critical point in eps.
inline double best_response_eps(double p, const GameParams& gp) {
  const double lo = gp.eps_min, hi = gp.eps_upper();
  std::vector<double> cands{lo, hi};
  if (auto e = stationary_eps(p, gp)) cands.push_back(std::clamp(*e, lo, hi));
  std::sort(cands.begin(), cands.end());
  return argmax_of(cands, [&](double e) { return utility_client(p, e, gp); });
}

inline double server_on_curve(double p, const GameParams& gp) {
  return utility_server(p, best_response_eps(p, gp), gp);
}

inline double client_on_curve(double p, const GameParams& gp) {
  return utility_client(p, best_response_eps(p, gp), gp);
}

// Second differences at kConcavitySpacing over [lo, hi] all <= 0 (up to round-off).
template <class F>
bool concave_on(double lo, double hi, F&& f) {
  const double h = kConcavitySpacing;
  if (hi - lo < 2 * h) return true;
  double prev = f(lo), cur = f(lo + h);
  for (double x = lo + 2 * h; x <= hi; x += h) {
    const double next = f(x);
    const double d2 = (prev - 2.0 * cur + next) / (h * h);
    if (d2 > 1e-6 * std::max(1.0, std::abs(cur))) return false;
    prev = cur;
    cur = next;
  }
  return true;
}

}  // namespace detail

/// Stage 2: the client's epsilon for a given penalty factor p.
///
/// The closed-form rule eps = sqrt((p - r + |pr/s - prs|) / (r - ps)) is
/// applied when U_c is numerically concave on [eps_min, eta^2/2), otherwise
/// the better interval end point is used. That candidate is cross-checked
/// against the exact maximizer from the first-order condition; the better of
/// the two is returned and `theorem_agrees` records whether they matched.
inline ClientResponse client_best_response(double p, const GameParams& gp) {
  gp.validate();
  if (!(p > 0.0)) throw ParameterError("client_best_response: p must be > 0");
  const double lo = gp.eps_min, hi = gp.eps_upper();
  auto uc = [&](double e) { return utility_client(p, e, gp); };

  ClientResponse out;
  out.concave = detail::concave_on(lo, hi, uc);
  const double num = p - gp.r + std::abs(p * gp.r / gp.s - p * gp.r * gp.s);
  const double den = gp.r - p * gp.s;
  const double rad = num / den;
  const double boundary = detail::argmax_of({lo, hi}, uc);
  if (!(den > 0.0) || !(rad >= 0.0) || !std::isfinite(rad)) {
    out.theorem_path = RulePath::kGuard;
    out.theorem_eps = boundary;
  } else if (out.concave) {
    out.theorem_path = RulePath::kClosedForm;
    out.theorem_eps = std::clamp(std::sqrt(rad), lo, hi);
  } else {
    out.theorem_path = RulePath::kBoundary;
    out.theorem_eps = boundary;
  }

  const double verified = detail::best_response_eps(p, gp);
  out.theorem_agrees = detail::nearly_ge(uc(out.theorem_eps), uc(verified));
  out.eps = uc(out.theorem_eps) > uc(verified) ? out.theorem_eps : verified;
  out.utility = uc(out.eps);
  out.feasible = out.utility >= 0.0;
  return out;
}

/// Stage 1: the server's penalty factor, anticipating the client's response.
///
/// The feasible set is (0, p_feasible_max], where p_feasible_max is the
/// largest p that keeps the client's best-response utility non-negative (that
/// utility is non-increasing in p). Along the best-response curve U_s is
/// piecewise smooth with breakpoints where the client switches between the
/// interval ends or where the stationary point crosses an end; each piece is
/// searched separately. The closed-form rule
///   p* = (br - r)/H + sqrt(J (H + 1 - b) / (s^2 H^2)),
///   H = b - s + |r/s - rs|, J = r a ln(|D_{-i}|^2) H + (r - br) s a ln(|D_{-i}|^2)
/// is evaluated alongside and reported through `theorem_agrees`.
inline ServerSolution server_optimal(const GameParams& gp) {
  gp.validate();
  ServerSolution out;
  const double p_lo = kPenaltyFloor;
  auto us = [&](double p) { return detail::server_on_curve(p, gp); };
  auto uc = [&](double p) { return detail::client_on_curve(p, gp); };

  // Closed-form rule.
  const double ln_d2 = std::log(gp.d_rest * gp.d_rest);
  const double h = gp.b - gp.s + std::abs(gp.r / gp.s - gp.r * gp.s);
  const double j = gp.r * gp.a * ln_d2 * h + (gp.r - gp.b * gp.r) * (gp.s * gp.a * ln_d2);
  out.concave = detail::concave_on(p_lo, gp.p_max, us);
  const double boundary = detail::argmax_of({p_lo, gp.p_max}, us);
  const double rad = h != 0.0 ? j * (h + 1.0 - gp.b) / (gp.s * gp.s * h * h) : -1.0;
  if (h == 0.0 || !(rad >= 0.0) || !std::isfinite(rad)) {
    out.theorem_path = RulePath::kGuard;
    out.theorem_p = boundary;
  } else if (out.concave) {
    out.theorem_path = RulePath::kClosedForm;
    out.theorem_p = std::clamp((gp.b * gp.r - gp.r) / h + std::sqrt(rad), p_lo, gp.p_max);
  } else {
    out.theorem_path = RulePath::kBoundary;
    out.theorem_p = boundary;
  }

  if (uc(p_lo) < 0.0) {
    out.participates = false;
    out.p = out.theorem_p;
    out.eps = gp.eps_min;
    out.theorem_agrees = uc(out.theorem_p) < 0.0;
    return out;
  }
  out.participates = true;

  double p_feas = gp.p_max;
  if (uc(gp.p_max) < 0.0) {
    double a = p_lo, b = gp.p_max;
    for (int it = 0; it < 200 && b - a > 1e-14 * gp.p_max; ++it) {
      const double mid = 0.5 * (a + b);
      (uc(mid) >= 0.0 ? a : b) = mid;
    }
    p_feas = a;
  }
  out.p_feasible_max = p_feas;

  // Breakpoints of the best-response curve.
  const double e_lo = gp.eps_min, e_hi = gp.eps_upper();
  std::vector<double> pts{p_lo, p_feas};
  const double w_lo = 1.0 / (e_lo * e_lo + 1.0), w_hi = 1.0 / (e_hi * e_hi + 1.0);
  pts.push_back((privacy_benefit(e_lo, gp) - privacy_benefit(e_hi, gp)) / (w_lo - w_hi));
  pts.push_back(gp.r * gp.s);
  pts.push_back(gp.r / gp.s);
  for (double e : {e_lo, e_hi}) {
    const double q = (e * e + 1.0) / (gp.s * e * e + 1.0);
    pts.push_back(gp.r * gp.s * q * q);
  }
  std::vector<double> grid;
  for (double p : pts) {
    if (!std::isfinite(p)) continue;
    if (p >= p_lo && p <= p_feas) grid.push_back(p);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  std::vector<double> cands;
  for (double p : grid) {
    cands.push_back(p);
    cands.push_back(std::max(p_lo, p * (1.0 - 1e-12)));
  }
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const double a = grid[k], b = grid[k + 1];
    const double mid = 0.5 * (a + b);
    const double e_mid = detail::best_response_eps(mid, gp);
    if (e_mid <= e_lo || e_mid >= e_hi) continue;  // end-point piece: U_s is linear in p
    // Interior piece: scan, then golden-section refinement around the best sample.
    constexpr int kScan = 64;
    double best = a, best_v = us(a);
    for (int i = 1; i <= kScan; ++i) {
      const double p = a + (b - a) * i / kScan;
      const double v = us(p);
      if (v > best_v) best_v = v, best = p;
    }
    double lo = std::max(a, best - (b - a) / kScan), hi = std::min(b, best + (b - a) / kScan);
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = us(x1), f2 = us(x2);
    for (int it = 0; it < 100 && hi - lo > 1e-13 * std::max(1.0, hi); ++it) {
      if (f1 < f2) {
        lo = x1, x1 = x2, f1 = f2, x2 = lo + g * (hi - lo), f2 = us(x2);
      } else {
        hi = x2, x2 = x1, f2 = f1, x1 = hi - g * (hi - lo), f1 = us(x1);
      }
    }
    cands.push_back(best);
    cands.push_back(0.5 * (lo + hi));
  }
  std::sort(cands.begin(), cands.end());
  std::vector<double> feasible;
  for (double p : cands)
    if (uc(p) >= 0.0) feasible.push_back(p);
  double p_best = detail::argmax_of(feasible, us);

  const bool theorem_feasible = out.theorem_p > 0.0 && out.theorem_p <= gp.p_max && uc(out.theorem_p) >= 0.0;
  out.theorem_agrees = theorem_feasible && detail::nearly_ge(us(out.theorem_p), us(p_best));
  if (theorem_feasible && us(out.theorem_p) > us(p_best)) p_best = out.theorem_p;

  const ClientResponse cr = client_best_response(p_best, gp);
  out.p = p_best;
  out.eps = cr.eps;
  out.utility_server = utility_server(p_best, cr.eps, gp);
  out.utility_client = cr.utility;
  return out;
}

}  // namespace fui::game
