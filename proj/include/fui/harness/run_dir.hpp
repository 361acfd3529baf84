#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "json.hpp"

#include "fui/data/csv.hpp"
#include "fui/dpfl/engine.hpp"
#include "fui/error.hpp"
#include "fui/eval/metrics.hpp"
#include "fui/eval/sweep.hpp"
#include "fui/game/strategies.hpp"
#include "fui/harness/config.hpp"
#include "fui/unlearning/fui.hpp"
#include "fui/vecnum/codec.hpp"

namespace fui::harness {

namespace fs = std::filesystem;
using json = nlohmann::json;

/// Writes `bytes` to a temporary sibling and renames it over `path`.
inline void write_atomic(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_vector_atomic(const fs::path& path, const vecnum::ParamVector& w) {
  const auto bytes = vecnum::encode_vector(w);
  write_atomic(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

/// Appends rows to a CSV with the given header, rewriting the whole file
/// atomically so an interrupted write leaves the previous version intact.
inline void append_csv(const fs::path& path, const std::string& header, const std::vector<std::string>& rows) {
  std::string text;
  if (fs::exists(path)) {
    text = read_text(path);
    const auto first = text.substr(0, text.find('\n'));
    if (first != header) throw IoError(path.string() + ": unexpected header '" + first + "'");
    if (!text.empty() && text.back() != '\n') text += '\n';
  } else {
    text = header + "\n";
  }
  for (const auto& r : rows) text += r + "\n";
  write_atomic(path, text);
}

inline std::string fmt(double v) { return detail::format_double(v); }

inline const std::string kMetricsHeader =
    "method,dataset,seed,accuracy,prediction_loss,runtime_s,mia_precision,mia_recall";

/// One metrics.csv row; MIA columns are left empty when `with_mia` is false.
inline std::string metrics_row(const eval::EvalReport& r, bool with_mia) {
  std::string row = r.method + "," + r.dataset + "," + std::to_string(r.seed) + "," + fmt(r.accuracy) + "," +
                    fmt(r.prediction_loss) + "," + fmt(r.runtime_s) + ",";
  if (with_mia) row += fmt(r.mia_precision) + "," + fmt(r.mia_recall);
  else row += ",";
  return row;
}

inline std::string sweep_csv(const std::vector<eval::SweepRow>& rows) {
  std::string out = "eta,epsilon,accuracy_fui,accuracy_retrain,noise_added\n";
  for (const auto& r : rows)
    out += fmt(r.eta) + "," + fmt(r.epsilon) + "," + fmt(r.accuracy_fui) + "," + fmt(r.accuracy_retrain) + "," +
           (r.noise_added ? "true" : "false") + "\n";
  return out;
}

inline std::string game_sweep_csv(const std::vector<game::StrategyRow>& rows) {
  std::string out = "param,value,combo,p,epsilon,utility_server,utility_client,feasible\n";
  for (const auto& r : rows)
    out += r.param + "," + fmt(r.value) + "," + r.combo + "," + fmt(r.p) + "," + fmt(r.eps) + "," +
           fmt(r.utility_server) + "," + fmt(r.utility_client) + "," + (r.feasible ? "true" : "false") + "\n";
  return out;
}

inline json encoder_json(const data::TabularEncoder& enc) {
  json feats = json::array();
  for (const auto& f : enc.features) {
    json j{{"name", f.name}, {"kind", data::to_string(f.kind)}};
    if (f.kind == data::ColumnKind::kNumeric) {
      j["mean"] = f.mean;
      j["stddev"] = f.stddev;
    } else {
      j["categories"] = f.categories;
    }
    feats.push_back(std::move(j));
  }
  return json{{"features", feats}, {"label_column", enc.label_column}, {"label_values", enc.label_values}};
}

/// On-disk layout of one training run:
///   meta.json, rounds/<t>/{global,broadcast,client_<i>}.fv, unlearned.fv,
///   retracted.fv, calibration.json, retrained.fv, retrain.json, metrics.csv
class RunDirectory {
 public:
  explicit RunDirectory(fs::path root) : root_(std::move(root)) {}

  const fs::path& root() const noexcept { return root_; }
  fs::path meta_path() const { return root_ / "meta.json"; }
  fs::path round_dir(int t) const { return root_ / "rounds" / std::to_string(t); }
  fs::path metrics_path() const { return root_ / "metrics.csv"; }
  fs::path unlearned_path() const { return root_ / "unlearned.fv"; }
  fs::path retracted_path() const { return root_ / "retracted.fv"; }
  fs::path retrained_path() const { return root_ / "retrained.fv"; }
  fs::path calibration_path() const { return root_ / "calibration.json"; }
  fs::path retrain_info_path() const { return root_ / "retrain.json"; }

  /// Config snapshot and data description; must precede any round data.
  void write_meta(const Config& cfg, const eval::PreparedData& data) const {
    json meta;
    meta["config"] = serialize_config(cfg);
    meta["seed"] = cfg.seed;
    meta["dataset"] = data.name;
    meta["train_size"] = data.train.size();
    meta["test_size"] = data.test.size();
    meta["input_dim"] = data.train.input_dim();
    meta["num_classes"] = data.train.num_classes();
    meta["client_sizes"] = data.plan.client_sizes;
    if (data.encoder) meta["encoder"] = encoder_json(*data.encoder);
    write_atomic(meta_path(), meta.dump(2) + "\n");
  }

  json read_meta() const {
    try {
      return json::parse(read_text(meta_path()));
    } catch (const json::exception& e) {
      throw IoError(meta_path().string() + ": " + e.what());
    }
  }

  Config read_config() const { return parse_config(read_meta().at("config").get<std::string>(), false); }

  /// Round 0 holds the initial model; round t >= 1 the aggregate, the
  /// broadcast and every client's noisy submission.
  void write_history(const dpfl::RunHistory& h) const {
    if (!fs::exists(meta_path())) throw IoError("write_history: meta.json must be written first");
    write_vector_atomic(round_dir(0) / "global.fv", h.initial);
    write_vector_atomic(round_dir(0) / "broadcast.fv", h.initial);
    for (int t = 1; t <= h.num_rounds(); ++t) {
      const auto& rec = h.round(t);
      write_vector_atomic(round_dir(t) / "global.fv", rec.global);
      write_vector_atomic(round_dir(t) / "broadcast.fv", rec.broadcast);
      for (std::size_t i = 0; i < rec.submissions.size(); ++i)
        write_vector_atomic(round_dir(t) / ("client_" + std::to_string(i) + ".fv"), rec.submissions[i]);
    }
  }

  /// Rebuilds the history recorded by write_history; the privacy parameters
  /// are recomputed from the config snapshot and client sizes in meta.json.
  dpfl::RunHistory read_history() const {
    const json meta = read_meta();
    const Config cfg = read_config();
    dpfl::RunHistory h;
    h.client_sizes = meta.at("client_sizes").get<std::vector<std::size_t>>();
    if (h.client_sizes.empty()) throw IoError("meta.json lists no clients");
    h.privacy = dpfl::PrivacyParams{cfg.eta, cfg.clip,
                                    *std::min_element(h.client_sizes.begin(), h.client_sizes.end()), cfg.rounds,
                                    cfg.exposures, h.client_sizes.size()};
    h.sigma_uplink = dpfl::uplink_sigma(h.privacy);
    h.sigma_downlink = dpfl::downlink_sigma(h.privacy);
    h.initial = vecnum::read_vector(round_dir(0) / "global.fv");
    for (int t = 1; t <= cfg.rounds; ++t) {
      dpfl::RoundRecord rec;
      rec.round = t;
      rec.global = vecnum::read_vector(round_dir(t) / "global.fv");
      rec.broadcast = vecnum::read_vector(round_dir(t) / "broadcast.fv");
      for (std::size_t i = 0; i < h.client_sizes.size(); ++i)
        rec.submissions.push_back(vecnum::read_vector(round_dir(t) / ("client_" + std::to_string(i) + ".fv")));
      h.rounds.push_back(std::move(rec));
    }
    return h;
  }

  void write_unlearned(const unlearning::UnlearnResult& r, const unlearning::UnlearnRequest& req) const {
    write_vector_atomic(retracted_path(), r.retraction.retracted);
    write_vector_atomic(unlearned_path(), r.unlearned);
    const auto& c = r.report;
    json j{{"target", req.target},
           {"epsilon", c.epsilon},
           {"delta", req.delta},
           {"eta", c.eta},
           {"d", c.d},
           {"d_policy", c.d_policy},
           {"sigma_tilde1", c.sigma1},
           {"sigma_tilde2", c.sigma2},
           {"gap", c.gap},
           {"sigma_cali", c.sigma_cali},
           {"noise_added", c.noise_added},
           {"retraction_status", vecnum::to_string(r.retraction.search.status)},
           {"retraction_iterations", r.retraction.search.iterations},
           {"retraction_distance", r.retraction.retracted.distance(r.retraction.reference)}};
    write_atomic(calibration_path(), j.dump(2) + "\n");
  }

  void append_metrics(const eval::EvalReport& r, bool with_mia) const {
    append_csv(metrics_path(), kMetricsHeader, {metrics_row(r, with_mia)});
  }

 private:
  fs::path root_;
};

}  // namespace fui::harness
