#pragma once

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fui/error.hpp"
#include "fui/game/utilities.hpp"
#include "fui/unlearning/calibration.hpp"

namespace fui::harness {

/// Every tunable of a run, loaded from a flat `key = value` file.
struct Config {
  // data
  std::string dataset = "synthetic";  // synthetic | csv
  std::string csv_path;
  std::string csv_schema;
  int synth_classes = 4;
  int synth_dim = 10;
  int synth_samples = 20000;
  double synth_spread = 0.7;
  double test_fraction = 0.2;
  int shadow_pool = 2000;  // csv only: rows held back for the MIA shadow model

  // model
  std::string model = "softmax";  // softmax | mlp
  int hidden = 16;
  double l2_reg = 1e-3;

  // federated training
  int clients = 10;
  int rounds = 10;
  int exposures = 1;
  double clip = 2.0;
  double eta = 5.0;
  double lr = 0.001;
  int batch = 100;
  int local_epochs = 10;

  // unlearning
  int target = 0;
  double epsilon = 5.0;
  double delta = -1.0;  // retraction radius; negative means "same as clip"
  double alpha = 0.1;
  double tau = 1e-6;
  int max_iter = 500;
  int lbfgs_memory = 0;
  std::string d_policy = "2C";
  double eps_min = 0.1;

  // game
  double p_max = 15.0;
  double game_a = 1.5;
  double game_b = 10.0;
  double game_r = 25.0;
  double game_s = 2.0;
  double game_l = 0.0;
  double psi_s = 5.0;
  double psi_c = 3.0;
  double game_d_rest = 0.0;  // 0: use |D_{-i}| of the partition

  // membership inference
  int shadow_train = 200;
  int shadow_holdout = 200;
  double shadow_lr = 0.05;
  int shadow_epochs = 20;

  // privacy sweep
  std::vector<double> sweep_eta{1.5, 2.0, 3.0, 4.0, 5.0, 6.0};
  std::vector<double> sweep_epsilon{0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0};

  std::uint64_t seed = 1;
  int threads = 1;

  bool operator==(const Config&) const = default;

  double retraction_radius() const { return delta < 0.0 ? clip : delta; }

  game::GameParams game_params(double d_rest) const {
    game::GameParams gp;
    gp.a = game_a;
    gp.b = game_b;
    gp.r = game_r;
    gp.s = game_s;
    gp.l = game_l;
    gp.psi_s = psi_s;
    gp.psi_c = psi_c;
    gp.p_max = p_max;
    gp.eps_min = eps_min;
    gp.eta = eta;
    gp.d_rest = game_d_rest > 0.0 ? game_d_rest : d_rest;
    return gp;
  }

  /// Checks every module precondition that can be decided from the config alone.
  void validate() const {
    auto fail = [](const std::string& msg) { throw ParameterError("config: " + msg); };
    if (dataset != "synthetic" && dataset != "csv") fail("dataset must be synthetic or csv");
    if (dataset == "csv" && (csv_path.empty() || csv_schema.empty()))
      fail("dataset = csv requires csv_path and csv_schema");
    if (synth_classes < 2) fail("synth_classes must be >= 2");
    if (synth_dim < 1 || synth_classes > synth_dim + 1) fail("synth_classes must be <= synth_dim + 1");
    if (synth_samples < 2 * clients) fail("synth_samples too small for the number of clients");
    if (!(synth_spread > 0.0)) fail("synth_spread must be > 0");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) fail("test_fraction must be in (0, 1)");
    if (shadow_pool < 0) fail("shadow_pool must be >= 0");
    if (model != "softmax" && model != "mlp") fail("model must be softmax or mlp");
    if (hidden < 1) fail("hidden must be >= 1");
    if (!(l2_reg >= 0.0)) fail("l2_reg must be >= 0");
    if (clients < 2) fail("clients must be >= 2");
    if (rounds < 1) fail("rounds must be >= 1");
    if (exposures < 1) fail("exposures must be >= 1");
    if (!(clip > 0.0)) fail("clip must be > 0");
    if (!(eta > 0.0)) fail("eta must be > 0");
    if (!(lr > 0.0)) fail("lr must be > 0");
    if (batch < 1) fail("batch must be >= 1");
    if (local_epochs < 1) fail("local_epochs must be >= 1");
    if (target < 0 || target >= clients) fail("target must be a client id in [0, clients)");
    if (!(eps_min > 0.0)) fail("eps_min must be > 0");
    const double level = eta * eta / 2.0;
    if (!(epsilon < level))
      fail("epsilon = " + std::to_string(epsilon) + " must be < eta^2/2 = " + std::to_string(level) +
           " (larger values are already guaranteed by eta-DP)");
    if (!(epsilon >= eps_min)) fail("epsilon must be >= eps_min");
    if (!std::isfinite(delta)) fail("delta must be a finite number");
    if (!(alpha > 0.0)) fail("alpha must be > 0");
    if (!(tau > 0.0)) fail("tau must be > 0");
    if (max_iter < 1) fail("max_iter must be >= 1");
    if (lbfgs_memory < 0) fail("lbfgs_memory must be >= 0");
    unlearning::parse_distance_policy(d_policy);
    if (!(game_d_rest >= 0.0)) fail("game_d_rest must be >= 0");
    game_params(1.0).validate();
    if (shadow_train < 1 || shadow_holdout < 1) fail("shadow_train and shadow_holdout must be >= 1");
    if (!(shadow_lr > 0.0) || shadow_epochs < 1) fail("shadow_lr must be > 0 and shadow_epochs >= 1");
    if (sweep_eta.empty() || sweep_epsilon.empty()) fail("sweep grids must be nonempty");
    for (double v : sweep_eta)
      if (!(v > 0.0)) fail("sweep_eta values must be > 0");
    for (double v : sweep_epsilon)
      if (!(v > 0.0)) fail("sweep_epsilon values must be > 0");
    if (threads < 1) fail("threads must be >= 1");
  }
};

namespace detail {

using Member = std::variant<int Config::*, double Config::*, std::string Config::*, std::uint64_t Config::*,
                            std::vector<double> Config::*>;

struct Field {
  const char* key;
  Member member;
};

inline const std::vector<Field>& fields() {
  static const std::vector<Field> table{
      {"dataset", &Config::dataset},
      {"csv_path", &Config::csv_path},
      {"csv_schema", &Config::csv_schema},
      {"synth_classes", &Config::synth_classes},
      {"synth_dim", &Config::synth_dim},
      {"synth_samples", &Config::synth_samples},
      {"synth_spread", &Config::synth_spread},
      {"test_fraction", &Config::test_fraction},
      {"shadow_pool", &Config::shadow_pool},
      {"model", &Config::model},
      {"hidden", &Config::hidden},
      {"l2_reg", &Config::l2_reg},
      {"clients", &Config::clients},
      {"rounds", &Config::rounds},
      {"exposures", &Config::exposures},
      {"clip", &Config::clip},
      {"eta", &Config::eta},
      {"lr", &Config::lr},
      {"batch", &Config::batch},
      {"local_epochs", &Config::local_epochs},
      {"target", &Config::target},
      {"epsilon", &Config::epsilon},
      {"delta", &Config::delta},
      {"alpha", &Config::alpha},
      {"tau", &Config::tau},
      {"max_iter", &Config::max_iter},
      {"lbfgs_memory", &Config::lbfgs_memory},
      {"d_policy", &Config::d_policy},
      {"eps_min", &Config::eps_min},
      {"p_max", &Config::p_max},
      {"game_a", &Config::game_a},
      {"game_b", &Config::game_b},
      {"game_r", &Config::game_r},
      {"game_s", &Config::game_s},
      {"game_l", &Config::game_l},
      {"psi_s", &Config::psi_s},
      {"psi_c", &Config::psi_c},
      {"game_d_rest", &Config::game_d_rest},
      {"shadow_train", &Config::shadow_train},
      {"shadow_holdout", &Config::shadow_holdout},
      {"shadow_lr", &Config::shadow_lr},
      {"shadow_epochs", &Config::shadow_epochs},
      {"sweep_eta", &Config::sweep_eta},
      {"sweep_epsilon", &Config::sweep_epsilon},
      {"seed", &Config::seed},
      {"threads", &Config::threads},
  };
  return table;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size()) return false;
  if constexpr (std::is_floating_point_v<T>) return std::isfinite(out);
  return true;
}

inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline void assign(Config& cfg, const Field& f, std::string_view value, int line) {
  auto type_error = [&](const char* expected) {
    throw ParameterError("config line " + std::to_string(line) + ": key '" + f.key + "' expects " + expected +
                         ", got '" + std::string(value) + "'");
  };
  std::visit(
      [&](auto member) {
        using T = std::remove_reference_t<decltype(cfg.*member)>;
        if constexpr (std::is_same_v<T, std::string>) {
          cfg.*member = std::string(value);
        } else if constexpr (std::is_same_v<T, std::vector<double>>) {
          std::vector<double> out;
          std::string_view rest = value;
          while (true) {
            const auto comma = rest.find(',');
            double v = 0.0;
            if (!parse_number(trim(rest.substr(0, comma)), v)) type_error("a comma-separated list of numbers");
            out.push_back(v);
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
          }
          cfg.*member = std::move(out);
        } else if constexpr (std::is_same_v<T, double>) {
          if (!parse_number(value, cfg.*member)) type_error("a number");
        } else {
          if (!parse_number(value, cfg.*member)) type_error("an integer");
        }
      },
      f.member);
}

inline std::string render(const Config& cfg, const Field& f) {
  return std::visit(
      [&](auto member) -> std::string {
        const auto& v = cfg.*member;
        using T = std::remove_cvref_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return v;
        } else if constexpr (std::is_same_v<T, std::vector<double>>) {
          std::string out;
          for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_double(v[i]);
          return out;
        } else if constexpr (std::is_same_v<T, double>) {
          return format_double(v);
        } else {
          return std::to_string(v);
        }
      },
      f.member);
}

}  // namespace detail

/// Parses `key = value` lines; `#` starts a comment. Missing keys keep their
/// defaults. Throws ParameterError naming the unknown key, the line of a
/// malformed value, or the violated constraint.
inline Config parse_config(std::string_view text, bool check = true) {
  Config cfg;
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ParameterError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string_view key = detail::trim(line.substr(0, eq));
    const std::string_view value = detail::trim(line.substr(eq + 1));
    const auto& table = detail::fields();
    const auto it = std::find_if(table.begin(), table.end(), [&](const detail::Field& f) { return key == f.key; });
    if (it == table.end())
      throw ParameterError("config line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
    detail::assign(cfg, *it, value, line_no);
  }
  if (check) cfg.validate();
  return cfg;
}

/// One `key = value` line per field, in a fixed order.
inline std::string serialize_config(const Config& cfg) {
  std::string out;
  for (const auto& f : detail::fields()) out += std::string(f.key) + " = " + detail::render(cfg, f) + "\n";
  return out;
}

/// (key, rendered value) pairs in serialization order.
inline std::vector<std::pair<std::string, std::string>> config_entries(const Config& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : detail::fields()) out.emplace_back(f.key, detail::render(cfg, f));
  return out;
}

/// FUI_SEED, when set, replaces the configured seed.
inline void apply_environment(Config& cfg) {
  const char* env = std::getenv("FUI_SEED");
  if (env == nullptr) return;
  std::uint64_t seed = 0;
  if (!detail::parse_number(detail::trim(env), seed))
    throw ParameterError(std::string("FUI_SEED must be a non-negative integer, got '") + env + "'");
  cfg.seed = seed;
}

}  // namespace fui::harness
