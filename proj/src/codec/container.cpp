// SPDX-License-Identifier: Apache-2.0

#include <algorithm>

#include "iclab/codec.hpp"
#include "iclab/error.hpp"
#include "iclab/stream_io.hpp"

namespace iclab {
namespace {
constexpr char kMagic[8] = {'I', 'C', 'L', 'C', 'O', 'D', 'E', '1'};
constexpr std::size_t kHeaderSize = 37;
}  // namespace

std::vector<std::uint8_t> serialize_container(const CompressedFile& file) {
  std::vector<std::uint8_t> out(kMagic, kMagic + 8);
  le::put_u32(out, kContainerVersion);
  out.push_back(file.mode == UpdateMode::Online ? 1 : 0);
  le::put_u64(out, file.predictor_hash);
  le::put_u64(out, file.token_count);
  le::put_u64(out, file.bits.size());
  out.insert(out.end(), file.bits.bytes().begin(), file.bits.bytes().end());
  return out;
}

CompressedFile deserialize_container(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderSize || !std::equal(kMagic, kMagic + 8, bytes.begin()))
    throw ValidationError("compressed file: bad magic or short header");
  if (const auto v = le::get(bytes, 8, 4); v != kContainerVersion)
    throw ValidationError("compressed file: unsupported format version " + std::to_string(v));
  CompressedFile f;
  const std::uint8_t mode = bytes[12];
  if (mode > 1) throw ValidationError("compressed file: bad mode flag");
  f.mode = mode == 1 ? UpdateMode::Online : UpdateMode::Frozen;
  f.predictor_hash = le::get(bytes, 13, 8);
  f.token_count = le::get(bytes, 21, 8);
  const std::uint64_t nbits = le::get(bytes, 29, 8);
  const std::uint64_t nbytes = (nbits + 7) / 8;
  if (bytes.size() - kHeaderSize != nbytes) throw ValidationError("compressed file: body length does not match bit count");
  f.bits = BitBuffer(std::vector<std::uint8_t>(bytes.begin() + kHeaderSize, bytes.end()), nbits);
  return f;
}

}  // namespace iclab
