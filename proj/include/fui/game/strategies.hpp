#pragma once

#include <array>
#include <random>
#include <string>
#include <vector>

#include "fui/game/solver.hpp"
#include "fui/vecnum/rng.hpp"

namespace fui::game {

/// Sweepable game constants.
inline const std::array<std::string, 6>& sweep_parameters() {
  static const std::array<std::string, 6> names{"d_rest", "a", "b", "r", "s", "p_max"};
  return names;
}

/// Copy of gp with the named constant replaced.
inline GameParams with_parameter(GameParams gp, const std::string& name, double value) {
  if (name == "d_rest") gp.d_rest = value;
  else if (name == "a") gp.a = value;
  else if (name == "b") gp.b = value;
  else if (name == "r") gp.r = value;
  else if (name == "s") gp.s = value;
  else if (name == "p_max") gp.p_max = value;
  else throw ParameterError("simulate_strategies: unknown sweep parameter '" + name + "' (expected d_rest, a, b, r, s or p_max)");
  return gp;
}

inline std::vector<double> default_grid(const std::string& name) {
  if (name == "d_rest") return {1000, 3000, 5000, 7000, 9000, 11000};
  if (name == "a") return {0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
  if (name == "b") return {2, 4, 6, 8, 10, 12};
  if (name == "r") return {10, 15, 20, 25, 30, 35};
  if (name == "s") return {1.0, 1.5, 2.0, 2.5, 3.0, 3.5};
  if (name == "p_max") return {5, 10, 15, 20, 25, 30};
  throw ParameterError("default_grid: unknown sweep parameter '" + name + "'");
}

struct StrategyRow {
  std::string param;
  double value = 0.0;
  std::string combo;  // SO/CO, SO/CR, SR/CO, SR/CR
  double p = 0.0;
  double eps = 0.0;
  double utility_server = 0.0;
  double utility_client = 0.0;
  bool feasible = false;  // U_c >= 0, the client carries out the unlearning
};

/// Evaluates the four strategy pairs at every grid value of one constant.
///
/// SO is the server's optimal p, SR a p drawn uniformly from the feasible
/// range (0, p_feasible_max] (from (0, p_max] when no p is feasible). CO is
/// the client's best response to the chosen p and CR an epsilon drawn
/// uniformly from [eps_min, eta^2/2). Draws for grid index k come from
/// rng/<param>/point:k, so rows do not depend on evaluation order.
inline std::vector<StrategyRow> simulate_strategies(const GameParams& base, const std::string& param,
                                                    const std::vector<double>& grid, const vecnum::RngStream& rng) {
  with_parameter(base, param, 1.0);  // rejects unknown names before any work
  std::vector<StrategyRow> rows;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const GameParams gp = with_parameter(base, param, grid[k]);
    gp.validate();
    const ServerSolution so = server_optimal(gp);

    auto eng = rng.child(param).child("point", k).engine();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double p_top = so.participates ? so.p_feasible_max : gp.p_max;
    const double p_rand = p_top * (1.0 - unit(eng));  // (0, p_top]
    const double e_rand = gp.eps_min + unit(eng) * (gp.eps_upper() - gp.eps_min);

    auto emit = [&](const char* combo, double p, double eps) {
      StrategyRow row{param, grid[k], combo, p, eps, utility_server(p, eps, gp), utility_client(p, eps, gp), false};
      row.feasible = row.utility_client >= 0.0;
      rows.push_back(row);
    };
    emit("SO/CO", so.p, client_best_response(so.p, gp).eps);
    emit("SO/CR", so.p, e_rand);
    emit("SR/CO", p_rand, client_best_response(p_rand, gp).eps);
    emit("SR/CR", p_rand, e_rand);
  }
  return rows;
}

}  // namespace fui::game
