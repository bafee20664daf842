// SPDX-License-Identifier: Apache-2.0

// Predictor checkpoint container. Integers little-endian, reals as IEEE-754
// binary64 bit patterns.
//
//   magic "ICLCKPT1" | u32 version (1) | u8 kind | u32 vocab_size | body
//
//   uniform  : (empty)
//   ngram    : u32 order | f64 smoothing | u32 count_bits | u64 cells |
//              cells x ceil(count_bits/8)-byte counts
//   tinylm   : u32 context_len | u32 hidden_width | u32 bit_width |
//              f64 learning_rate | u64 seed | u64 n | n x f64 parameters
//   oracle   : f64 epsilon | u64 len | len bytes of source JSON (sorted keys)

#include <algorithm>
#include <bit>
#include <cstring>

#include "iclab/error.hpp"
#include "iclab/json_io.hpp"
#include "iclab/predictors.hpp"
#include "iclab/stream_io.hpp"

namespace iclab {
namespace {

constexpr char kMagic[8] = {'I', 'C', 'L', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

void put_f64(std::vector<std::uint8_t>& out, double v) { le::put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}
  std::uint64_t uint(unsigned width) {
    need(width);
    const std::uint64_t v = le::get(bytes_, pos_, width);
    pos_ += width;
    return v;
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(uint(4)); }
  std::uint64_t u64() { return uint(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw ValidationError("checkpoint: truncated");
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> Predictor::checkpoint() const {
  std::vector<std::uint8_t> out(kMagic, kMagic + 8);
  le::put_u32(out, kVersion);
  out.push_back(static_cast<std::uint8_t>(kind()));
  le::put_u32(out, vocab_size());
  if (const auto* m = std::get_if<NGramModel>(&model_)) {
    le::put_u32(out, m->order());
    put_f64(out, m->smoothing());
    le::put_u32(out, m->count_bits());
    le::put_u64(out, m->cell_count());
    const unsigned w = (m->count_bits() + 7) / 8;
    for (std::uint64_t c : m->counts())
      for (unsigned i = 0; i < w; ++i) out.push_back(static_cast<std::uint8_t>(c >> (8 * i)));
  } else if (const auto* t = std::get_if<TinyLm>(&model_)) {
    const TinyLmConfig& c = t->config();
    le::put_u32(out, c.context_len);
    le::put_u32(out, c.hidden_width);
    le::put_u32(out, c.bit_width);
    put_f64(out, c.learning_rate);
    le::put_u64(out, c.seed);
    le::put_u64(out, t->parameter_count());
    for (double p : t->parameters()) put_f64(out, p);
  } else if (const auto* o = std::get_if<OracleModel>(&model_)) {
    put_f64(out, o->epsilon());
    const std::string doc = source_to_json(o->source()).dump();
    le::put_u64(out, doc.size());
    out.insert(out.end(), doc.begin(), doc.end());
  }
  return out;
}

Predictor Predictor::from_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || !std::equal(kMagic, kMagic + 8, bytes.begin()))
    throw ValidationError("checkpoint: bad magic");
  Reader r(bytes.subspan(8));
  if (const std::uint32_t v = r.u32(); v != kVersion)
    throw ValidationError("checkpoint: unsupported version " + std::to_string(v));
  const auto kind = static_cast<Kind>(r.uint(1));
  const std::uint32_t vocab = r.u32();
  auto finish = [&](Predictor p) {
    if (!r.done()) throw ValidationError("checkpoint: trailing bytes");
    return p;
  };
  switch (kind) {
    case Kind::Uniform:
      return finish(Predictor::uniform(vocab));
    case Kind::NGram: {
      const unsigned order = r.u32();
      const double alpha = r.f64();
      const unsigned bits = r.u32();
      if (bits < 1 || bits > 64) throw ValidationError("checkpoint: bad count width");
      const std::uint64_t cells = r.u64();
      const unsigned w = (bits + 7) / 8;
      NGramModel shape(vocab, order, alpha, bits);
      if (cells != shape.cell_count()) throw ValidationError("checkpoint: cell count does not match dimensions");
      std::vector<std::uint64_t> counts(cells);
      for (auto& c : counts) c = r.uint(w);
      return finish(Predictor(NGramModel::from_counts(vocab, order, alpha, bits, std::move(counts))));
    }
    case Kind::TinyLm: {
      TinyLmConfig c;
      c.vocab_size = vocab;
      c.context_len = r.u32();
      c.hidden_width = r.u32();
      c.bit_width = r.u32();
      c.learning_rate = r.f64();
      c.seed = r.u64();
      const std::uint64_t n = r.u64();
      if (n > bytes.size() / 8) throw ValidationError("checkpoint: truncated");
      std::vector<double> params(n);
      for (auto& p : params) p = r.f64();
      return finish(Predictor(TinyLm(c, std::move(params))));
    }
    case Kind::Oracle: {
      const double eps = r.f64();
      const std::uint64_t len = r.u64();
      const auto text = r.take(len);
      Source src = source_from_json(json::parse(text.begin(), text.end()));
      return finish(Predictor(OracleModel(std::move(src), eps)));
    }
  }
  throw ValidationError("checkpoint: unknown predictor kind");
}

}  // namespace iclab
