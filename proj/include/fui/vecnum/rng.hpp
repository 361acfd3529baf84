#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "fui/error.hpp"
#include "fui/vecnum/param_vector.hpp"

namespace fui::vecnum {

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

/// Reproducible random stream addressed by (seed, path).
///
/// A stream is an immutable value. Children are derived by appending labels
/// to the path, e.g. `rng.child("round", 3).child("client", 7).child("uplink")`.
/// Identical (seed, path) pairs always yield identical sample sequences.
class RngStream {
 public:
  using Engine = std::mt19937_64;

  explicit RngStream(std::uint64_t seed = 0) : seed_(seed), key_(detail::splitmix64(seed)) {}

  std::uint64_t seed() const noexcept { return seed_; }
  const std::vector<std::string>& path() const noexcept { return path_; }

  RngStream child(std::string_view label) const {
    RngStream out = *this;
    out.path_.emplace_back(label);
    out.key_ = detail::splitmix64(key_ ^ detail::fnv1a(label));
    return out;
  }

  RngStream child(std::string_view label, std::uint64_t index) const {
    return child(std::string(label) + ":" + std::to_string(index));
  }

  /// Fresh engine positioned at the start of this stream.
  Engine engine() const { return Engine(key_); }

  std::string path_string() const {
    std::string out;
    for (const auto& p : path_) {
      if (!out.empty()) out += '/';
      out += p;
    }
    return out;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t key_;
  std::vector<std::string> path_;
};

/// dim i.i.d. draws from N(0, sigma^2). sigma == 0 returns the zero vector.
inline ParamVector gaussian_sample(double sigma, std::size_t dim, const RngStream& rng) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    throw ParameterError("gaussian_sample: sigma must be finite and >= 0");
  if (dim == 0) throw ParameterError("gaussian_sample: dim must be >= 1");
  std::vector<double> out(dim, 0.0);
  if (sigma > 0.0) {
    auto eng = rng.engine();
    std::normal_distribution<double> normal(0.0, sigma);
    for (double& v : out) v = normal(eng);
  }
  return ParamVector(std::move(out));
}

}  // namespace fui::vecnum
