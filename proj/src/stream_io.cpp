// SPDX-License-Identifier: Apache-2.0

#include "iclab/stream_io.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

#include "iclab/error.hpp"

namespace iclab {

unsigned token_width(std::uint32_t vocab_size) {
  if (vocab_size <= (1u << 8)) return 1;
  if (vocab_size <= (1u << 16)) return 2;
  return 4;
}

std::vector<std::uint8_t> serialize_stream(const TokenStream& stream) {
  stream.validate();
  const unsigned w = token_width(stream.vocab_size);
  std::vector<std::uint8_t> out(kStreamMagic, kStreamMagic + 8);
  out.reserve(20 + w * stream.size());
  le::put_u32(out, stream.vocab_size);
  le::put_u64(out, stream.size());
  for (Token t : stream.tokens)
    for (unsigned i = 0; i < w; ++i) out.push_back(static_cast<std::uint8_t>(t >> (8 * i)));
  return out;
}

TokenStream deserialize_stream(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 20 || !std::equal(kStreamMagic, kStreamMagic + 8, bytes.begin()))
    throw ValidationError("token stream file: bad magic or short header");
  TokenStream s;
  s.vocab_size = static_cast<std::uint32_t>(le::get(bytes, 8, 4));
  const std::uint64_t n = le::get(bytes, 12, 8);
  const unsigned w = token_width(s.vocab_size);
  if (s.vocab_size == 0) throw ValidationError("token stream file: vocab_size is zero");
  if ((bytes.size() - 20) / w < n || bytes.size() - 20 != n * w)
    throw ValidationError("token stream file: body length does not match header");
  s.tokens.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) s.tokens[i] = static_cast<Token>(le::get(bytes, 20 + i * w, w));
  s.validate();
  return s;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

void write_stream(const std::filesystem::path& path, const TokenStream& stream) {
  write_file_bytes(path, serialize_stream(stream));
}

TokenStream read_stream(const std::filesystem::path& path) { return deserialize_stream(read_file_bytes(path)); }

}  // namespace iclab
