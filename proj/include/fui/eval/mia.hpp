#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "fui/data/synthetic.hpp"
#include "fui/error.hpp"
#include "fui/models/model.hpp"
#include "fui/vecnum/rng.hpp"

namespace fui::eval {

using models::ExampleScore;
using models::LabeledDataset;
using models::ModelSpec;
using vecnum::ParamVector;
using vecnum::RngStream;

struct ConfusionMatrix {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }

  /// Zero when nothing was predicted as a member.
  double precision() const noexcept { return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp); }

  double recall() const noexcept { return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn); }
};

/// Logistic attack on standardized (per-example loss, max probability).
struct AttackModel {
  std::array<double, 2> mean{0.0, 0.0};
  std::array<double, 2> stddev{1.0, 1.0};
  std::array<double, 3> weights{0.0, 0.0, 0.0};  // loss, max_prob, bias

  double member_probability(const ExampleScore& s) const {
    const double z = weights[0] * (s.loss - mean[0]) / stddev[0] + weights[1] * (s.max_prob - mean[1]) / stddev[1] +
                     weights[2];
    return 1.0 / (1.0 + std::exp(-z));
  }

  bool predict_member(const ExampleScore& s) const { return member_probability(s) > 0.5; }
};

/// Fits the attack by Newton iterations on the (lightly regularized) logistic loss.
inline AttackModel fit_attack(const std::vector<ExampleScore>& members, const std::vector<ExampleScore>& nonmembers,
                              int iterations = 50) {
  if (members.empty() || nonmembers.empty()) throw ParameterError("fit_attack: empty member or nonmember features");
  AttackModel m;
  const double n = static_cast<double>(members.size() + nonmembers.size());
  std::array<double, 2> sum{0, 0}, sq{0, 0};
  auto add = [&](const ExampleScore& s) {
    sum[0] += s.loss, sum[1] += s.max_prob;
    sq[0] += s.loss * s.loss, sq[1] += s.max_prob * s.max_prob;
  };
  for (const auto& s : members) add(s);
  for (const auto& s : nonmembers) add(s);
  for (int j = 0; j < 2; ++j) {
    m.mean[j] = sum[j] / n;
    const double var = sq[j] / n - m.mean[j] * m.mean[j];
    m.stddev[j] = var > 1e-24 ? std::sqrt(var) : 1.0;
  }

  constexpr double kRidge = 1e-3;
  for (int it = 0; it < iterations; ++it) {
    std::array<double, 3> g{0, 0, 0};
    std::array<std::array<double, 3>, 3> h{};
    auto step = [&](const ExampleScore& s, double y) {
      const std::array<double, 3> x{(s.loss - m.mean[0]) / m.stddev[0], (s.max_prob - m.mean[1]) / m.stddev[1], 1.0};
      const double p = m.member_probability(s);
      for (int a = 0; a < 3; ++a) {
        g[a] += (p - y) * x[a];
        for (int b = 0; b < 3; ++b) h[a][b] += p * (1.0 - p) * x[a] * x[b];
      }
    };
    for (const auto& s : members) step(s, 1.0);
    for (const auto& s : nonmembers) step(s, 0.0);
    for (int a = 0; a < 3; ++a) {
      g[a] = g[a] / n + kRidge * m.weights[a];
      for (int b = 0; b < 3; ++b) h[a][b] = h[a][b] / n + (a == b ? kRidge : 0.0);
    }
    // Solve h d = g by Gaussian elimination with partial pivoting.
    std::array<std::array<double, 4>, 3> aug{};
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) aug[a][b] = h[a][b];
      aug[a][3] = g[a];
    }
    for (int c = 0; c < 3; ++c) {
      int piv = c;
      for (int r = c + 1; r < 3; ++r)
        if (std::abs(aug[r][c]) > std::abs(aug[piv][c])) piv = r;
      std::swap(aug[c], aug[piv]);
      for (int r = c + 1; r < 3; ++r) {
        const double f = aug[r][c] / aug[c][c];
        for (int k = c; k < 4; ++k) aug[r][k] -= f * aug[c][k];
      }
    }
    std::array<double, 3> d{};
    for (int r = 2; r >= 0; --r) {
      double acc = aug[r][3];
      for (int k = r + 1; k < 3; ++k) acc -= aug[r][k] * d[k];
      d[r] = acc / aug[r][r];
    }
    double change = 0.0;
    for (int a = 0; a < 3; ++a) {
      m.weights[a] -= d[a];
      change = std::max(change, std::abs(d[a]));
    }
    if (change < 1e-12) break;
  }
  return m;
}

inline ConfusionMatrix evaluate_attack(const AttackModel& attack, const std::vector<ExampleScore>& members,
                                       const std::vector<ExampleScore>& nonmembers) {
  ConfusionMatrix cm;
  for (const auto& s : members) (attack.predict_member(s) ? cm.tp : cm.fn)++;
  for (const auto& s : nonmembers) (attack.predict_member(s) ? cm.fp : cm.tn)++;
  return cm;
}

/// Draws n labeled examples from the shadow data source.
using ShadowSampler = std::function<LabeledDataset(std::size_t n, const RngStream& rng)>;

/// Fresh samples from a blob generator.
inline ShadowSampler blob_sampler(data::BlobGenerator gen) {
  return [gen](std::size_t n, const RngStream& rng) { return gen.sample(n, rng); };
}

/// Samples without replacement from a reserved pool of rows.
inline ShadowSampler pool_sampler(LabeledDataset pool) {
  return [pool = std::move(pool)](std::size_t n, const RngStream& rng) {
    if (n > pool.size()) throw ParameterError("shadow pool has too few rows");
    std::vector<std::size_t> idx(pool.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    auto eng = rng.engine();
    std::shuffle(idx.begin(), idx.end(), eng);
    idx.resize(n);
    return pool.subset(idx);
  };
}

struct ShadowConfig {
  std::size_t train_size = 200;
  std::size_t holdout_size = 200;
  models::SgdOptions sgd{0.05, 20, 50};
};

struct MiaResult {
  double precision = 0.0;
  double recall = 0.0;
  ConfusionMatrix confusion;
  AttackModel attack;
};

/// Shadow-model membership inference against (spec, w).
///
/// One shadow model is trained on shadow data disjoint from the target's; the
/// attack is fitted on its train (member) versus holdout (nonmember) features
/// and then applied to the target model's member and nonmember examples.
inline MiaResult mia_attack(const ModelSpec& spec, const ParamVector& w, const LabeledDataset& member,
                            const LabeledDataset& nonmember, const ShadowConfig& cfg, const ShadowSampler& sampler,
                            const RngStream& rng) {
  if (member.empty() || nonmember.empty()) throw ParameterError("mia_attack: empty member or nonmember set");
  if (cfg.train_size == 0 || cfg.holdout_size == 0) throw ParameterError("mia_attack: shadow sizes must be >= 1");
  const LabeledDataset pool = sampler(cfg.train_size + cfg.holdout_size, rng.child("shadow-data"));
  std::vector<std::size_t> tr(cfg.train_size), ho(cfg.holdout_size);
  std::iota(tr.begin(), tr.end(), std::size_t{0});
  std::iota(ho.begin(), ho.end(), cfg.train_size);
  const LabeledDataset shadow_train = pool.subset(tr), shadow_holdout = pool.subset(ho);

  const ParamVector shadow =
      models::local_sgd(spec, models::initial_parameters(spec, rng.child("shadow-init")), shadow_train, cfg.sgd,
                        rng.child("shadow-sgd"));
  MiaResult out;
  out.attack = fit_attack(models::example_scores(spec, shadow, shadow_train),
                          models::example_scores(spec, shadow, shadow_holdout));
  out.confusion = evaluate_attack(out.attack, models::example_scores(spec, w, member),
                                  models::example_scores(spec, w, nonmember));
  out.precision = out.confusion.precision();
  out.recall = out.confusion.recall();
  return out;
}

}  // namespace fui::eval
