#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "fui/error.hpp"
#include "fui/vecnum/param_vector.hpp"

namespace fui::vecnum {

// "FUI1" | dim : u32 LE | dim x f64 LE
inline constexpr std::array<char, 4> kVectorMagic{'F', 'U', 'I', '1'};

namespace detail {

inline void put_u64_le(std::vector<unsigned char>& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xffU));
}

inline std::uint64_t get_u64_le(const unsigned char* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace detail

inline std::vector<unsigned char> encode_vector(const ParamVector& w) {
  if (w.dim() > 0xffffffffULL) throw ParameterError("encode_vector: dimension exceeds u32");
  std::vector<unsigned char> out(kVectorMagic.begin(), kVectorMagic.end());
  out.reserve(8 + 8 * w.dim());
  detail::put_u64_le(out, w.dim(), 4);
  for (double v : w.values()) detail::put_u64_le(out, std::bit_cast<std::uint64_t>(v), 8);
  return out;
}

inline ParamVector decode_vector(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kVectorMagic.data(), 4) != 0)
    throw IoError("decode_vector: missing FUI1 header");
  const auto dim = detail::get_u64_le(bytes.data() + 4, 4);
  if (bytes.size() != 8 + 8 * dim)
    throw IoError("decode_vector: payload length does not match dim " + std::to_string(dim));
  std::vector<double> values(dim);
  for (std::size_t i = 0; i < dim; ++i)
    values[i] = std::bit_cast<double>(detail::get_u64_le(bytes.data() + 8 + 8 * i, 8));
  return ParamVector(std::move(values));
}

inline void write_vector(const std::filesystem::path& path, const ParamVector& w) {
  const auto bytes = encode_vector(w);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

inline ParamVector read_vector(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_vector(bytes);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace fui::vecnum
