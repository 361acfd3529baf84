#pragma once

#include <cmath>
#include <string>

#include "fui/error.hpp"

namespace fui::game {

/// Constants of the server/client unlearning game.
struct GameParams {
  double a = 1.5;    // performance-loss scale
  double b = 10.0;   // performance-loss sensitivity to epsilon
  double r = 25.0;   // privacy-benefit scale
  double s = 2.0;    // privacy-benefit sensitivity to epsilon
  double l = 0.0;    // privacy-benefit offset
  double psi_s = 5.0;
  double psi_c = 3.0;
  double p_max = 15.0;
  double eps_min = 0.1;
  double eta = 5.0;
  double d_rest = 9000.0;  // |D_{-i}|

  /// Largest admissible epsilon: eta^2/2 is excluded, so the top of the
  /// interval is evaluated just below it.
  double eps_upper() const { return eta * eta / 2.0 - 1e-9; }

  void validate() const {
    auto pos = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v)) throw ParameterError(std::string("GameParams: ") + name + " must be > 0");
    };
    pos(a, "a");
    pos(b, "b");
    pos(r, "r");
    pos(s, "s");
    pos(psi_s, "psi_s");
    pos(psi_c, "psi_c");
    pos(p_max, "p_max");
    pos(eps_min, "eps_min");
    pos(eta, "eta");
    pos(d_rest, "d_rest");
    if (!(l >= 0.0) || !std::isfinite(l)) throw ParameterError("GameParams: l must be >= 0");
    if (!(eps_min < eta * eta / 2.0)) throw ParameterError("GameParams: eps_min must be < eta^2/2");
  }
};

/// P(p, eps) = p / (eps^2 + 1)
inline double penalty(double p, double eps) { return p / (eps * eps + 1.0); }

/// Q(eps) = a ln(|D_{-i}|^2) / (b eps^2 + 1)
inline double perf_loss(double eps, const GameParams& gp) {
  return gp.a * std::log(gp.d_rest * gp.d_rest) / (gp.b * eps * eps + 1.0);
}

/// R(eps) = r / (s eps^2 + 1) + l
inline double privacy_benefit(double eps, const GameParams& gp) {
  return gp.r / (gp.s * eps * eps + 1.0) + gp.l;
}

/// U_s = -Q(eps) + P(p, eps) - Psi_s
inline double utility_server(double p, double eps, const GameParams& gp) {
  return -perf_loss(eps, gp) + penalty(p, eps) - gp.psi_s;
}

/// U_c = R(eps) - P(p, eps) - Psi_c
inline double utility_client(double p, double eps, const GameParams& gp) {
  return privacy_benefit(eps, gp) - penalty(p, eps) - gp.psi_c;
}

}  // namespace fui::game
