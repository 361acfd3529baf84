#pragma once

#include <algorithm>
#include <chrono>
#include <numeric>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fui/data/csv.hpp"
#include "fui/data/partition.hpp"
#include "fui/data/synthetic.hpp"
#include "fui/dpfl/engine.hpp"
#include "fui/eval/metrics.hpp"
#include "fui/eval/mia.hpp"
#include "fui/harness/config.hpp"
#include "fui/unlearning/fui.hpp"

namespace fui::eval {

using harness::Config;

/// Train/test split, client partition and shadow source of one run.
struct PreparedData {
  std::string name;
  LabeledDataset train;
  LabeledDataset test;
  data::PartitionPlan plan;
  std::vector<LabeledDataset> clients;
  ShadowSampler shadow;
  std::optional<data::TabularEncoder> encoder;

  const LabeledDataset& client(std::size_t i) const { return clients.at(i); }
};

/// Builds the datasets from rng/data and the partition from rng/partition.
inline PreparedData prepare_data(const Config& cfg, const RngStream& root) {
  PreparedData out;
  if (cfg.dataset == "synthetic") {
    const data::BlobGenerator gen{cfg.synth_classes, static_cast<std::size_t>(cfg.synth_dim), cfg.synth_spread};
    const auto n = static_cast<std::size_t>(cfg.synth_samples);
    const auto n_test = static_cast<std::size_t>(std::llround(cfg.test_fraction * static_cast<double>(n)));
    if (n_test == 0 || n_test >= n) throw ParameterError("prepare_data: test_fraction leaves an empty split");
    out.name = "synthetic";
    out.train = gen.sample(n - n_test, root.child("data").child("train"));
    out.test = gen.sample(n_test, root.child("data").child("test"));
    out.shadow = blob_sampler(gen);
  } else {
    const auto schema = data::Schema::load(cfg.csv_schema);
    auto split = data::load_csv_split(cfg.csv_path, schema, cfg.test_fraction, root.child("data"));
    const auto pool = static_cast<std::size_t>(cfg.shadow_pool);
    if (2 * pool >= split.train.size())
      throw ParameterError("prepare_data: shadow_pool must be less than half of the training rows");
    std::vector<std::size_t> keep, held;
    for (std::size_t i = 0; i < split.train.size(); ++i) (i < split.train.size() - pool ? keep : held).push_back(i);
    out.name = std::filesystem::path(cfg.csv_path).stem().string();
    out.test = std::move(split.test);
    out.shadow = pool_sampler(split.train.subset(held));
    out.train = split.train.subset(keep);
    out.encoder = std::move(split.encoder);
  }
  out.plan = data::partition_even(out.train, static_cast<std::size_t>(cfg.clients), root.child("partition"));
  out.clients = data::split_by_plan(out.train, out.plan);
  return out;
}

inline ModelSpec model_spec(const Config& cfg, const LabeledDataset& train) {
  ModelSpec spec;
  spec.kind = cfg.model == "mlp" ? models::ModelKind::kMlp : models::ModelKind::kSoftmaxRegression;
  spec.input_dim = train.input_dim();
  spec.num_classes = train.num_classes();
  spec.hidden_dim = static_cast<std::size_t>(cfg.hidden);
  spec.l2_reg = cfg.l2_reg;
  spec.validate();
  return spec;
}

inline dpfl::DpflConfig dpfl_config(const Config& cfg, const ModelSpec& spec) {
  dpfl::DpflConfig d;
  d.spec = spec;
  d.eta = cfg.eta;
  d.clip = cfg.clip;
  d.rounds = cfg.rounds;
  d.exposures = cfg.exposures;
  d.sgd = models::SgdOptions{cfg.lr, static_cast<std::size_t>(cfg.batch), cfg.local_epochs};
  d.threads = cfg.threads;
  return d;
}

inline unlearning::FuiOptions fui_options(const Config& cfg) {
  unlearning::FuiOptions o;
  o.lbfgs.step = cfg.alpha;
  o.lbfgs.tolerance = cfg.tau;
  o.lbfgs.max_iterations = cfg.max_iter;
  o.lbfgs.memory = cfg.lbfgs_memory;
  o.d_policy = unlearning::parse_distance_policy(cfg.d_policy);
  o.eps_min = cfg.eps_min;
  return o;
}

inline unlearning::UnlearnRequest unlearn_request(const Config& cfg) {
  unlearning::UnlearnRequest r;
  r.target = static_cast<std::size_t>(cfg.target);
  r.epsilon = cfg.epsilon;
  r.delta = cfg.retraction_radius();
  return r;
}

inline ShadowConfig shadow_config(const Config& cfg) {
  ShadowConfig s;
  s.train_size = static_cast<std::size_t>(cfg.shadow_train);
  s.holdout_size = static_cast<std::size_t>(cfg.shadow_holdout);
  s.sgd = models::SgdOptions{cfg.shadow_lr, static_cast<std::size_t>(cfg.batch), cfg.shadow_epochs};
  return s;
}

/// Test rows used as MIA nonmembers: a seeded sample as large as the
/// member set (or the whole test split if smaller), so both classes are balanced.
inline LabeledDataset nonmember_sample(const LabeledDataset& test, std::size_t members, const RngStream& rng) {
  std::vector<std::size_t> idx(test.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto eng = rng.engine();
  std::shuffle(idx.begin(), idx.end(), eng);
  idx.resize(std::min(members, idx.size()));
  std::sort(idx.begin(), idx.end());
  return test.subset(idx);
}

/// Accuracy, prediction loss and (optionally) MIA scores of one model.
/// Members are the target client's training rows; nonmembers come from the test split.
inline EvalReport assess(const std::string& method, const Config& cfg, const PreparedData& data, const ModelSpec& spec,
                         const ParamVector& w, bool with_mia, const RngStream& root) {
  EvalReport r = evaluate(method, spec, w, data.test);
  r.dataset = data.name;
  r.seed = cfg.seed;
  if (with_mia) {
    const auto& members = data.client(static_cast<std::size_t>(cfg.target));
    const auto nonmembers = nonmember_sample(data.test, members.size(), root.child("mia").child("nonmember"));
    const auto mia = mia_attack(spec, w, members, nonmembers, shadow_config(cfg), data.shadow, root.child("mia"));
    r.mia_precision = mia.precision;
    r.mia_recall = mia.recall;
  }
  return r;
}

struct PipelineOptions {
  bool unlearn = true;
  bool retrain = true;
  bool mia = true;
};

struct PipelineResult {
  PreparedData data;
  ModelSpec spec;
  dpfl::RunHistory original;
  double original_seconds = 0.0;
  std::optional<unlearning::UnlearnResult> fui;
  std::optional<unlearning::RetrainResult> retrain;
  std::vector<EvalReport> reports;  // original, then fui / retrain when run
};

/// Train, unlearn and retrain on one config. Random streams hang off
/// RngStream(cfg.seed): data, partition, train, unlearn, retrain, mia.
inline PipelineResult run_pipeline(const Config& cfg, const PipelineOptions& opt = {}) {
  const RngStream root(cfg.seed);
  PipelineResult out;
  out.data = prepare_data(cfg, root);
  out.spec = model_spec(cfg, out.data.train);
  const auto dcfg = dpfl_config(cfg, out.spec);

  const auto t0 = std::chrono::steady_clock::now();
  out.original = dpfl::run_dpfl(dcfg, out.data.clients, root.child("train"));
  out.original_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.reports.push_back(assess("original", cfg, out.data, out.spec, out.original.final_broadcast(), opt.mia, root));
  out.reports.back().runtime_s = out.original_seconds;

  const auto target = static_cast<std::size_t>(cfg.target);
  if (opt.unlearn) {
    out.fui = unlearning::unlearn(out.original, unlearn_request(cfg), out.spec, out.data.client(target),
                                  fui_options(cfg), root.child("unlearn"));
    out.reports.push_back(assess("fui", cfg, out.data, out.spec, out.fui->unlearned, opt.mia, root));
    out.reports.back().runtime_s = out.fui->runtime_seconds();
  }
  if (opt.retrain) {
    out.retrain = unlearning::retrain_baseline(dcfg, out.data.train, out.data.plan, target, root.child("retrain"));
    out.reports.push_back(
        assess("retrain", cfg, out.data, out.spec, out.retrain->history.final_broadcast(), opt.mia, root));
    out.reports.back().runtime_s = out.retrain->runtime_seconds;
  }
  return out;
}

}  // namespace fui::eval
