#pragma once

#include <cstdio>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fui/eval/pipeline.hpp"
#include "fui/eval/sweep.hpp"
#include "fui/game/solver.hpp"
#include "fui/game/strategies.hpp"
#include "fui/harness/config.hpp"
#include "fui/harness/run_dir.hpp"

namespace fui::harness {

enum ExitCode { kOk = 0, kUsage = 1, kRuntime = 2 };

/// Relative csv paths in a config file are taken relative to the file.
inline Config load_config(const std::string& path) {
  Config cfg = path.empty() ? Config{} : parse_config(read_text(path), false);
  if (!path.empty()) {
    const fs::path base = fs::absolute(path).parent_path();
    for (std::string* p : {&cfg.csv_path, &cfg.csv_schema})
      if (!p->empty() && fs::path(*p).is_relative()) *p = (base / *p).lexically_normal().string();
  }
  apply_environment(cfg);
  cfg.validate();
  return cfg;
}

namespace commands {

inline void train(const std::string& config_path, const std::string& out_dir, std::ostream& out) {
  const Config cfg = load_config(config_path);
  const RunDirectory run(out_dir);
  const vecnum::RngStream root(cfg.seed);
  const auto data = eval::prepare_data(cfg, root);
  run.write_meta(cfg, data);
  const auto spec = eval::model_spec(cfg, data.train);
  const auto t0 = std::chrono::steady_clock::now();
  const auto history = dpfl::run_dpfl(eval::dpfl_config(cfg, spec), data.clients, root.child("train"));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  run.write_history(history);
  auto report = eval::assess("original", cfg, data, spec, history.final_broadcast(), false, root);
  report.runtime_s = secs;
  run.append_metrics(report, false);
  out << "trained " << cfg.rounds << " rounds on " << data.name << " (" << cfg.clients
      << " clients): accuracy " << report.accuracy << ", sigma_U " << history.sigma_uplink << ", sigma_D "
      << history.sigma_downlink << "\n";
}

inline void unlearn(const std::string& run_dir, int target, double epsilon, std::optional<double> delta,
                    std::ostream& out) {
  const RunDirectory run(run_dir);
  Config cfg = run.read_config();
  cfg.target = target;
  cfg.epsilon = epsilon;
  if (delta) cfg.delta = *delta;
  cfg.validate();
  const vecnum::RngStream root(cfg.seed);
  const auto data = eval::prepare_data(cfg, root);
  const auto spec = eval::model_spec(cfg, data.train);
  const auto history = run.read_history();
  const auto req = eval::unlearn_request(cfg);
  const auto res = unlearning::unlearn(history, req, spec, data.client(req.target), eval::fui_options(cfg),
                                       root.child("unlearn"));
  run.write_unlearned(res, req);
  auto report = eval::assess("fui", cfg, data, spec, res.unlearned, false, root);
  report.runtime_s = res.runtime_seconds();
  run.append_metrics(report, false);
  out << "unlearned client " << target << " at epsilon " << epsilon << ": accuracy " << report.accuracy
      << ", noise added " << (res.report.noise_added ? "yes" : "no") << ", sigma_cali " << res.report.sigma_cali
      << "\n";
}

inline void retrain(const std::string& run_dir, int target, std::ostream& out) {
  const RunDirectory run(run_dir);
  Config cfg = run.read_config();
  cfg.target = target;
  cfg.validate();
  const vecnum::RngStream root(cfg.seed);
  const auto data = eval::prepare_data(cfg, root);
  const auto spec = eval::model_spec(cfg, data.train);
  const auto res = unlearning::retrain_baseline(eval::dpfl_config(cfg, spec), data.train, data.plan,
                                                static_cast<std::size_t>(target), root.child("retrain"));
  write_vector_atomic(run.retrained_path(), res.history.final_broadcast());
  write_atomic(run.retrain_info_path(), json{{"target", target}}.dump(2) + "\n");
  auto report = eval::assess("retrain", cfg, data, spec, res.history.final_broadcast(), false, root);
  report.runtime_s = res.runtime_seconds;
  run.append_metrics(report, false);
  out << "retrained without client " << target << ": accuracy " << report.accuracy << "\n";
}

inline void mia(const std::string& run_dir, const std::string& which, std::ostream& out) {
  const RunDirectory run(run_dir);
  Config cfg = run.read_config();
  fs::path model_path;
  std::string method;
  if (which == "original") {
    model_path = run.round_dir(cfg.rounds) / "broadcast.fv", method = "original";
  } else if (which == "unlearned") {
    model_path = run.unlearned_path(), method = "fui";
    if (fs::exists(run.calibration_path()))
      cfg.target = json::parse(read_text(run.calibration_path())).at("target").get<int>();
  } else {
    model_path = run.retrained_path(), method = "retrain";
    if (fs::exists(run.retrain_info_path()))
      cfg.target = json::parse(read_text(run.retrain_info_path())).at("target").get<int>();
  }
  if (!fs::exists(model_path)) throw IoError("mia: " + model_path.string() + " not found; run the producing command first");
  const vecnum::RngStream root(cfg.seed);
  const auto data = eval::prepare_data(cfg, root);
  const auto spec = eval::model_spec(cfg, data.train);
  const auto report = eval::assess(method, cfg, data, spec, vecnum::read_vector(model_path), true, root);
  run.append_metrics(report, true);
  out << "mia on " << which << " model: precision " << report.mia_precision << ", recall " << report.mia_recall
      << "\n";
}

inline double rest_size(const Config& cfg) {
  if (cfg.game_d_rest > 0.0) return cfg.game_d_rest;
  const auto data = eval::prepare_data(cfg, vecnum::RngStream(cfg.seed));
  return static_cast<double>(data.plan.rest_size(static_cast<std::size_t>(cfg.target)));
}

inline void game_solve(const std::string& config_path, const std::string& out_dir, std::ostream& out) {
  const Config cfg = load_config(config_path);
  const auto gp = cfg.game_params(rest_size(cfg));
  const auto sol = game::server_optimal(gp);
  std::string csv =
      "participates,p,epsilon,utility_server,utility_client,p_feasible_max,theorem_p,theorem_path,theorem_agrees\n";
  csv += std::string(sol.participates ? "true" : "false") + "," + fmt(sol.p) + "," + fmt(sol.eps) + "," +
         fmt(sol.utility_server) + "," + fmt(sol.utility_client) + "," + fmt(sol.p_feasible_max) + "," +
         fmt(sol.theorem_p) + "," + game::to_string(sol.theorem_path) + "," +
         (sol.theorem_agrees ? "true" : "false") + "\n";
  if (!out_dir.empty()) write_atomic(fs::path(out_dir) / "game_solve.csv", csv);
  if (!sol.participates) {
    out << "no feasible penalty factor: the client does not unlearn\n";
    return;
  }
  out << "p* = " << sol.p << ", epsilon* = " << sol.eps << ", U_s = " << sol.utility_server
      << ", U_c = " << sol.utility_client << (sol.theorem_agrees ? "" : " (closed form disagrees)") << "\n";
}

inline void game_sweep(const std::string& config_path, const std::string& out_dir, std::ostream& out) {
  const Config cfg = load_config(config_path);
  const auto gp = cfg.game_params(rest_size(cfg));
  std::vector<game::StrategyRow> rows;
  const vecnum::RngStream rng = vecnum::RngStream(cfg.seed).child("game");
  for (const auto& param : game::sweep_parameters()) {
    auto part = game::simulate_strategies(gp, param, game::default_grid(param), rng);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  write_atomic(fs::path(out_dir) / "game_sweep.csv", game_sweep_csv(rows));
  out << "wrote " << rows.size() << " rows to " << (fs::path(out_dir) / "game_sweep.csv").string() << "\n";
}

inline void sweep(const std::string& config_path, const std::string& out_dir, std::ostream& out) {
  const Config cfg = load_config(config_path);
  const auto rows = eval::privacy_sweep(cfg, cfg.sweep_eta, cfg.sweep_epsilon);
  write_atomic(fs::path(out_dir) / "sweep.csv", sweep_csv(rows));
  out << "wrote " << rows.size() << " rows to " << (fs::path(out_dir) / "sweep.csv").string() << "\n";
}

inline void bench(const std::string& config_path, const std::string& out_dir, std::ostream& out) {
  const Config cfg = load_config(config_path);
  const auto res = eval::run_pipeline(cfg);
  if (!out_dir.empty()) {
    const RunDirectory run(out_dir);
    run.write_meta(cfg, res.data);
    run.write_history(res.original);
    for (const auto& r : res.reports) run.append_metrics(r, true);
  }
  out << std::left << std::setw(10) << "method" << std::right << std::setw(10) << "accuracy" << std::setw(12)
      << "pred_loss" << std::setw(12) << "runtime_s" << std::setw(10) << "mia_prec" << std::setw(10) << "mia_rec"
      << "\n";
  out << std::fixed;
  for (const auto& r : res.reports)
    out << std::left << std::setw(10) << r.method << std::right << std::setprecision(4) << std::setw(10)
        << r.accuracy << std::setprecision(2) << std::setw(12) << r.prediction_loss << std::setprecision(4)
        << std::setw(12) << r.runtime_s << std::setw(10) << r.mia_precision << std::setw(10) << r.mia_recall << "\n";
  out << std::defaultfloat;
}

}  // namespace commands

/// Runs the `fui` command line. Returns 0 on success, 1 on usage or
/// parameter errors and 2 on runtime failures.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Federated unlearning simulator", "fui"};
  app.require_subcommand(1);

  std::string config_path, out_dir, run_dir, model = "original", param;
  int target = 0;
  double epsilon = 0.0;
  std::optional<double> delta;

  auto* train = app.add_subcommand("train", "Run DPFL training and write a run directory");
  train->add_option("--config", config_path, "Config file")->check(CLI::ExistingFile);
  train->add_option("--out", out_dir, "Run directory")->required();

  auto* unl = app.add_subcommand("unlearn", "Unlearn one client from a trained run");
  unl->add_option("--run", run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);
  unl->add_option("--target", target, "Client id")->required();
  unl->add_option("--epsilon", epsilon, "Indistinguishability level")->required();
  unl->add_option("--delta", delta, "Retraction radius");

  auto* re = app.add_subcommand("retrain", "Retrain without one client");
  re->add_option("--run", run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);
  re->add_option("--target", target, "Client id")->required();

  auto* mia = app.add_subcommand("mia", "Membership inference against a stored model");
  mia->add_option("--run", run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);
  mia->add_option("--model", model, "Model to attack")
      ->check(CLI::IsMember({"original", "unlearned", "retrained"}));

  auto* game = app.add_subcommand("game", "Stackelberg game tools");
  game->require_subcommand(1);
  auto* solve = game->add_subcommand("solve", "Solve the game for one configuration");
  solve->add_option("--config", config_path, "Config file")->check(CLI::ExistingFile);
  solve->add_option("--out", out_dir, "Output directory");
  auto* gsweep = game->add_subcommand("sweep", "Strategy-pair sweeps over the game constants");
  gsweep->add_option("--config", config_path, "Config file")->check(CLI::ExistingFile);
  gsweep->add_option("--out", out_dir, "Output directory")->required();

  auto* sw = app.add_subcommand("sweep", "Privacy-parameter sweep");
  sw->add_option("--config", config_path, "Config file")->check(CLI::ExistingFile);
  sw->add_option("--out", out_dir, "Output directory")->required();

  auto* bench = app.add_subcommand("bench", "Original vs FUI vs retrain comparison");
  bench->add_option("--config", config_path, "Config file")->check(CLI::ExistingFile);
  bench->add_option("--out", out_dir, "Run directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  std::string op;
  try {
    if (train->parsed()) op = "train", commands::train(config_path, out_dir, out);
    else if (unl->parsed()) op = "unlearn", commands::unlearn(run_dir, target, epsilon, delta, out);
    else if (re->parsed()) op = "retrain", commands::retrain(run_dir, target, out);
    else if (mia->parsed()) op = "mia", commands::mia(run_dir, model, out);
    else if (solve->parsed()) op = "game solve", commands::game_solve(config_path, out_dir, out);
    else if (gsweep->parsed()) op = "game sweep", commands::game_sweep(config_path, out_dir, out);
    else if (sw->parsed()) op = "sweep", commands::sweep(config_path, out_dir, out);
    else if (bench->parsed()) op = "bench", commands::bench(config_path, out_dir, out);
  } catch (const ParameterError& e) {
    err << "error: " << op << ": " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << op << ": " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}

}  // namespace fui::harness
