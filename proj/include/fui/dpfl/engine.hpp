#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include "fui/data/partition.hpp"
#include "fui/dpfl/privacy.hpp"
#include "fui/error.hpp"
#include "fui/models/model.hpp"
#include "fui/vecnum/rng.hpp"

namespace fui::dpfl {

using models::LabeledDataset;
using models::ModelSpec;
using vecnum::RngStream;

struct DpflConfig {
  ModelSpec spec;
  double eta = 5.0;
  double clip = 1.0;
  int rounds = 10;
  int exposures = 1;
  models::SgdOptions sgd;
  int threads = 1;
};

struct RoundRecord {
  int round = 0;
  ParamVector global;                    // aggregate before downlink noise
  ParamVector broadcast;                 // global + n_D
  std::vector<ParamVector> submissions;  // clipped + n_U, client-id order
  std::vector<ParamVector> clipped;      // pre-noise clipped local models (in memory only)
};

struct RunHistory {
  ParamVector initial;
  std::vector<RoundRecord> rounds;  // rounds[t-1] holds round t
  std::vector<std::size_t> client_sizes;
  PrivacyParams privacy;
  double sigma_uplink = 0.0;
  double sigma_downlink = 0.0;

  std::size_t num_clients() const noexcept { return client_sizes.size(); }
  int num_rounds() const noexcept { return static_cast<int>(rounds.size()); }

  const RoundRecord& round(int t) const {
    if (t < 1 || t > num_rounds())
      throw ParameterError("RunHistory: round " + std::to_string(t) + " not recorded");
    return rounds[static_cast<std::size_t>(t - 1)];
  }

  /// w^t before downlink noise; t = 0 is the initial model.
  const ParamVector& global(int t) const { return t == 0 ? initial : round(t).global; }

  /// Model clients start round t + 1 from; t = 0 is the initial model.
  const ParamVector& broadcast(int t) const { return t == 0 ? initial : round(t).broadcast; }

  const ParamVector& final_global() const { return global(num_rounds()); }
  const ParamVector& final_broadcast() const { return broadcast(num_rounds()); }
};

namespace detail {

[[noreturn]] inline void rethrow_with_context(std::exception_ptr ep, const std::string& ctx) {
  try {
    std::rethrow_exception(ep);
  } catch (const NumericalError& e) {
    throw NumericalError(ctx + ": " + e.what());
  } catch (const ParameterError& e) {
    throw ParameterError(ctx + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(ctx + ": " + e.what());
  }
}

}  // namespace detail

/// Runs T rounds of noisy federated averaging.
///
/// Each round every client trains from the last broadcast model with
/// local_sgd, clips to C, adds N(0, sigma_U^2) noise and submits; the server
/// aggregates by dataset size, records w^t, adds N(0, sigma_D^2) noise and
/// broadcasts. Random draws come from the paths
///   round:t/client:i/{sgd,uplink} and round:t/downlink
/// of `rng`, so the result does not depend on `threads`.
inline RunHistory run_dpfl(const DpflConfig& cfg, const std::vector<LabeledDataset>& clients, const RngStream& rng) {
  cfg.spec.validate();
  if (clients.empty()) throw ParameterError("run_dpfl: no clients");
  if (!(cfg.clip > 0.0)) throw ParameterError("run_dpfl: clip must be > 0");
  if (cfg.rounds < 0) throw ParameterError("run_dpfl: rounds must be >= 0");

  RunHistory hist;
  for (const auto& d : clients) {
    if (d.empty()) throw ParameterError("run_dpfl: client with an empty dataset");
    hist.client_sizes.push_back(d.size());
  }
  hist.privacy = PrivacyParams{cfg.eta, cfg.clip, *std::min_element(hist.client_sizes.begin(), hist.client_sizes.end()),
                               cfg.rounds, cfg.exposures, clients.size()};
  hist.sigma_uplink = uplink_sigma(hist.privacy);
  hist.sigma_downlink = downlink_sigma(hist.privacy);
  hist.initial = models::initial_parameters(cfg.spec, rng.child("init"));

  const std::size_t n = clients.size();
  const std::size_t dim = cfg.spec.param_dim();
  const auto threads = static_cast<std::size_t>(std::max(1, cfg.threads));

  for (int t = 1; t <= cfg.rounds; ++t) {
    const ParamVector& start = hist.broadcast(t - 1);
    const RngStream round_rng = rng.child("round", static_cast<std::uint64_t>(t));
    RoundRecord rec;
    rec.round = t;
    rec.submissions.resize(n);
    rec.clipped.resize(n);
    std::vector<std::exception_ptr> errors(n);

    auto work = [&](std::size_t i) {
      try {
        const RngStream client_rng = round_rng.child("client", i);
        ParamVector local = models::local_sgd(cfg.spec, start, clients[i], cfg.sgd, client_rng.child("sgd"));
        rec.clipped[i] = clip(local, cfg.clip);
        rec.submissions[i] =
            rec.clipped[i] + vecnum::gaussian_sample(hist.sigma_uplink, dim, client_rng.child("uplink"));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    };
    if (threads == 1 || n == 1) {
      for (std::size_t i = 0; i < n; ++i) work(i);
    } else {
      std::vector<std::thread> pool;
      for (std::size_t w = 0; w < std::min(threads, n); ++w)
        pool.emplace_back([&, w] {
          for (std::size_t i = w; i < n; i += threads) work(i);
        });
      for (auto& th : pool) th.join();
    }
    for (std::size_t i = 0; i < n; ++i)
      if (errors[i])
        detail::rethrow_with_context(errors[i], "run_dpfl round " + std::to_string(t) + " client " + std::to_string(i));

    rec.global = aggregate(rec.submissions, hist.client_sizes);
    if (hist.sigma_downlink == 0.0) {
      rec.broadcast = rec.global;
    } else {
      rec.broadcast = rec.global + vecnum::gaussian_sample(hist.sigma_downlink, dim, round_rng.child("downlink"));
    }
    hist.rounds.push_back(std::move(rec));
  }
  return hist;
}

inline RunHistory run_dpfl(const DpflConfig& cfg, const LabeledDataset& data, const data::PartitionPlan& plan,
                           const RngStream& rng) {
  return run_dpfl(cfg, data::split_by_plan(data, plan), rng);
}

}  // namespace fui::dpfl
