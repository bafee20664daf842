#pragma once

// SPDX-License-Identifier: Apache-2.0

// Binary token-stream files, all integers little-endian:
//
//   offset  size  field
//   0       8     magic "ICLTOKS1"
//   8       4     u32 vocab_size
//   12      8     u64 length
//   20      w*n   tokens, each w bytes unsigned, w = 1 if vocab_size <= 2^8,
//                 2 if <= 2^16, else 4

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "iclab/sources.hpp"

namespace iclab {

inline constexpr char kStreamMagic[8] = {'I', 'C', 'L', 'T', 'O', 'K', 'S', '1'};

/// Bytes per token for a vocabulary size.
unsigned token_width(std::uint32_t vocab_size);

std::vector<std::uint8_t> serialize_stream(const TokenStream& stream);
TokenStream deserialize_stream(std::span<const std::uint8_t> bytes);

void write_stream(const std::filesystem::path& path, const TokenStream& stream);
TokenStream read_stream(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

namespace le {
inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
inline std::uint64_t get(std::span<const std::uint8_t> in, std::size_t offset, unsigned width) {
  std::uint64_t v = 0;
  for (unsigned i = 0; i < width; ++i) v |= std::uint64_t{in[offset + i]} << (8 * i);
  return v;
}
}  // namespace le

}  // namespace iclab
