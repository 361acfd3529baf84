#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "fui/error.hpp"
#include "fui/models/dataset.hpp"
#include "fui/vecnum/rng.hpp"

namespace fui::data {

/// Assignment of dataset rows to clients.
struct PartitionPlan {
  std::vector<std::size_t> client_sizes;
  std::vector<std::size_t> assignment;  // row index -> client id

  std::size_t num_clients() const noexcept { return client_sizes.size(); }

  std::size_t total() const noexcept { return assignment.size(); }

  /// m: smallest client dataset.
  std::size_t min_size() const {
    if (client_sizes.empty()) throw ParameterError("PartitionPlan: no clients");
    return *std::min_element(client_sizes.begin(), client_sizes.end());
  }

  /// |D_{-i}|: rows held by every client except `client`.
  std::size_t rest_size(std::size_t client) const { return total() - client_sizes.at(client); }

  /// Row indices owned by `client`, ascending.
  std::vector<std::size_t> rows_of(std::size_t client) const {
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < assignment.size(); ++r)
      if (assignment[r] == client) rows.push_back(r);
    return rows;
  }

  /// The same plan with `client` removed and later client ids shifted down by one.
  /// Rows of the removed client map to `kUnassigned`.
  static constexpr std::size_t kUnassigned = static_cast<std::size_t>(-1);

  PartitionPlan without(std::size_t client) const {
    if (client >= num_clients()) throw ParameterError("PartitionPlan::without: unknown client");
    PartitionPlan out;
    for (std::size_t c = 0; c < num_clients(); ++c)
      if (c != client) out.client_sizes.push_back(client_sizes[c]);
    out.assignment = assignment;
    for (auto& a : out.assignment) {
      if (a == client) a = kUnassigned;
      else if (a > client) --a;
    }
    return out;
  }
};

/// Random shuffle followed by round-robin dealing; the first |D| mod N clients get one extra row.
inline PartitionPlan partition_even(const models::LabeledDataset& data, std::size_t num_clients,
                                    const vecnum::RngStream& rng) {
  if (num_clients == 0) throw ParameterError("partition_even: num_clients must be >= 1");
  if (num_clients > data.size())
    throw ParameterError("partition_even: more clients (" + std::to_string(num_clients) + ") than samples (" +
                         std::to_string(data.size()) + ")");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto eng = rng.engine();
  std::shuffle(order.begin(), order.end(), eng);
  PartitionPlan plan;
  plan.client_sizes.assign(num_clients, 0);
  plan.assignment.assign(data.size(), 0);
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const std::size_t client = pos % num_clients;
    plan.assignment[order[pos]] = client;
    ++plan.client_sizes[client];
  }
  return plan;
}

/// Per-client datasets in client-id order.
inline std::vector<models::LabeledDataset> split_by_plan(const models::LabeledDataset& data,
                                                         const PartitionPlan& plan) {
  if (plan.total() != data.size()) throw ParameterError("split_by_plan: plan does not match dataset");
  std::vector<std::vector<std::size_t>> rows(plan.num_clients());
  for (std::size_t r = 0; r < plan.assignment.size(); ++r) {
    const auto c = plan.assignment[r];
    if (c == PartitionPlan::kUnassigned) continue;
    rows.at(c).push_back(r);
  }
  std::vector<models::LabeledDataset> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(data.subset(r));
  return out;
}

}  // namespace fui::data
