// SPDX-License-Identifier: Apache-2.0

#include "iclab/sources.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string_view>
#include <unordered_map>

#include "iclab/error.hpp"
#include "iclab/rng.hpp"

namespace iclab {
namespace {

// Dense context tables are capped; beyond this the chain is not a desk-scale
// lab source any more.
constexpr std::size_t kMaxContextCells = std::size_t{1} << 26;

void check_distribution(std::span<const double> p, std::string_view what) {
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw ValidationError(std::string(what) + ": probabilities must be finite and >= 0");
    total += v;
  }
  if (std::abs(total - 1.0) > kProbabilitySumTolerance) {
    std::ostringstream os;
    os.precision(17);
    os << what << ": probabilities sum to " << total << ", expected 1";
    throw ValidationError(os.str());
  }
}

std::string format_context(const Context& c) {
  std::string s = "[";
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(c[i]);
  }
  return s + "]";
}

double entropy_bits(std::span<const double> p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log2(v);
  return h;
}

// Tarjan's algorithm, iterative to survive deep chains.
std::vector<int> strongly_connected(const std::vector<std::vector<std::size_t>>& adj, int& count) {
  const std::size_t n = adj.size();
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<char> on_stack(n, 0);
  std::vector<std::size_t> stack;
  int next_index = 0;
  count = 0;
  struct Frame {
    std::size_t v;
    std::size_t edge;
  };
  std::vector<Frame> call;
  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != -1) continue;
    call.push_back({root, 0});
    index[root] = low[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!call.empty()) {
      Frame& f = call.back();
      if (f.edge < adj[f.v].size()) {
        const std::size_t w = adj[f.v][f.edge++];
        if (index[w] == -1) {
          index[w] = low[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = 1;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[f.v] = std::min(low[f.v], index[w]);
        }
        continue;
      }
      const std::size_t v = f.v;
      if (low[v] == index[v]) {
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp[w] = count;
        } while (w != v);
        ++count;
      }
      call.pop_back();
      if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
    }
  }
  return comp;
}

}  // namespace

// ---------------------------------------------------------------------------
// TokenStream

void TokenStream::validate() const {
  if (vocab_size == 0) throw ValidationError("token stream: vocab_size must be positive");
  for (std::size_t i = 0; i < tokens.size(); ++i)
    if (tokens[i] >= vocab_size)
      throw ValidationError("token stream: token " + std::to_string(tokens[i]) + " at position " +
                            std::to_string(i) + " is outside vocabulary of size " +
                            std::to_string(vocab_size));
}

// ---------------------------------------------------------------------------
// MarkovChain

MarkovChain::MarkovChain(std::uint32_t vocab_size, unsigned order, TransitionMap transitions)
    : vocab_size_(vocab_size), order_(order), transitions_(std::move(transitions)) {
  if (vocab_size_ == 0) throw ValidationError("markov source: vocab_size must be positive");
  if (order_ == 0) throw ValidationError("markov source: order must be >= 1");
  context_count_ = 1;
  for (unsigned i = 0; i < order_; ++i) {
    if (context_count_ > kMaxContextCells / vocab_size_)
      throw ValidationError("markov source: |V|^order is too large for a dense context table");
    context_count_ *= vocab_size_;
  }
  if (context_count_ > kMaxContextCells / vocab_size_)
    throw ValidationError("markov source: |V|^(order+1) is too large for a dense context table");
  if (transitions_.empty()) throw ValidationError("markov source: transition map is empty");

  table_.assign(context_count_ * vocab_size_, 0.0);
  defined_.assign(context_count_, 0);
  for (const auto& [ctx, probs] : transitions_) {
    if (ctx.size() != order_)
      throw ValidationError("markov source: context " + format_context(ctx) + " has length " +
                            std::to_string(ctx.size()) + ", expected " + std::to_string(order_));
    for (Token t : ctx)
      if (t >= vocab_size_)
        throw ValidationError("markov source: context " + format_context(ctx) + " has out-of-range token");
    if (probs.size() != vocab_size_)
      throw ValidationError("markov source: context " + format_context(ctx) + " has " +
                            std::to_string(probs.size()) + " probabilities, expected " +
                            std::to_string(vocab_size_));
    check_distribution(probs, "markov source context " + format_context(ctx));
    const std::size_t idx = index_of(ctx);
    std::copy(probs.begin(), probs.end(), table_.begin() + static_cast<std::ptrdiff_t>(idx * vocab_size_));
    defined_[idx] = 1;
  }
  // Closure: every context reachable from a defined one must be defined.
  for (std::size_t c = 0; c < context_count_; ++c) {
    if (!defined_[c]) continue;
    const auto r = row(c);
    for (Token j = 0; j < vocab_size_; ++j) {
      if (r[j] <= 0.0) continue;
      const std::size_t s = successor(c, j);
      if (!defined_[s])
        throw ValidationError("markov source: transition map does not cover reachable context " +
                              format_context(tokens_of(s)) + " (reached from " +
                              format_context(tokens_of(c)) + " via token " + std::to_string(j) + ")");
    }
  }
}

std::size_t MarkovChain::index_of(std::span<const Token> context) const {
  std::size_t idx = 0;
  for (Token t : context) idx = idx * vocab_size_ + t;
  return idx;
}

Context MarkovChain::tokens_of(std::size_t index) const {
  Context c(order_);
  for (unsigned i = order_; i-- > 0;) {
    c[i] = static_cast<Token>(index % vocab_size_);
    index /= vocab_size_;
  }
  return c;
}

const std::vector<double>& MarkovChain::stationary() const {
  std::call_once(stationary_once_, [this] {
    try {
      stationary_ = solve_stationary();
    } catch (const ValidationError& e) {
      stationary_error_ = e.what();
    }
  });
  if (stationary_error_) throw ValidationError(*stationary_error_);
  return stationary_;
}

std::vector<double> MarkovChain::solve_stationary() const {
  // Graph over defined contexts.
  std::vector<std::size_t> states;
  std::vector<std::size_t> local(context_count_, SIZE_MAX);
  for (std::size_t c = 0; c < context_count_; ++c)
    if (defined_[c]) {
      local[c] = states.size();
      states.push_back(c);
    }
  const std::size_t n = states.size();
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = row(states[i]);
    for (Token j = 0; j < vocab_size_; ++j)
      if (r[j] > 0.0) {
        const std::size_t s = local[successor(states[i], j)];
        if (std::find(adj[i].begin(), adj[i].end(), s) == adj[i].end()) adj[i].push_back(s);
      }
  }
  int comp_count = 0;
  const std::vector<int> comp = strongly_connected(adj, comp_count);
  std::vector<char> closed(static_cast<std::size_t>(comp_count), 1);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t s : adj[i])
      if (comp[s] != comp[i]) closed[static_cast<std::size_t>(comp[i])] = 0;
  std::vector<int> closed_ids;
  for (int k = 0; k < comp_count; ++k)
    if (closed[static_cast<std::size_t>(k)]) closed_ids.push_back(k);

  if (closed_ids.size() != 1) {
    std::ostringstream os;
    os << "markov source: chain has " << closed_ids.size()
       << " closed classes, so no unique stationary distribution exists; classes:";
    for (int k : closed_ids) {
      os << " {";
      int shown = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (comp[i] != k) continue;
        if (shown == 8) {
          os << " ...";
          break;
        }
        os << (shown ? " " : "") << format_context(tokens_of(states[i]));
        ++shown;
      }
      os << "}";
    }
    throw ValidationError(os.str());
  }

  std::vector<std::size_t> recurrent;
  for (std::size_t i = 0; i < n; ++i)
    if (comp[i] == closed_ids.front()) recurrent.push_back(states[i]);
  const std::size_t m = recurrent.size();
  std::vector<std::size_t> pos(context_count_, SIZE_MAX);
  for (std::size_t i = 0; i < m; ++i) pos[recurrent[i]] = i;

  std::vector<double> pi_local(m, 0.0);
  if (m <= kDirectSolveLimit) {
    // pi (P - I) = 0 with one equation replaced by sum(pi) = 1.
    Eigen::MatrixXd a = -Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) {
      const auto r = row(recurrent[i]);
      for (Token j = 0; j < vocab_size_; ++j)
        if (r[j] > 0.0)
          a(static_cast<Eigen::Index>(pos[successor(recurrent[i], j)]), static_cast<Eigen::Index>(i)) += r[j];
    }
    a.row(static_cast<Eigen::Index>(m - 1)).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
    b(static_cast<Eigen::Index>(m - 1)) = 1.0;
    const Eigen::VectorXd x = a.partialPivLu().solve(b);
    for (std::size_t i = 0; i < m; ++i) pi_local[i] = std::max(0.0, x(static_cast<Eigen::Index>(i)));
  } else {
    // Lazy chain (P + I) / 2.
    std::vector<double> cur(m, 1.0 / static_cast<double>(m)), next(m);
    constexpr double kTol = 1e-12;
    constexpr std::size_t kMaxIter = 1'000'000;
    std::size_t it = 0;
    for (; it < kMaxIter; ++it) {
      for (std::size_t i = 0; i < m; ++i) next[i] = 0.5 * cur[i];
      for (std::size_t i = 0; i < m; ++i) {
        const auto r = row(recurrent[i]);
        for (Token j = 0; j < vocab_size_; ++j)
          if (r[j] > 0.0) next[pos[successor(recurrent[i], j)]] += 0.5 * cur[i] * r[j];
      }
      double diff = 0.0;
      for (std::size_t i = 0; i < m; ++i) diff += std::abs(next[i] - cur[i]);
      cur.swap(next);
      if (diff < kTol) break;
    }
    if (it == kMaxIter) throw ValidationError("markov source: power iteration did not converge");
    pi_local = std::move(cur);
  }
  const double total = std::accumulate(pi_local.begin(), pi_local.end(), 0.0);
  std::vector<double> pi(context_count_, 0.0);
  for (std::size_t i = 0; i < m; ++i) pi[recurrent[i]] = pi_local[i] / total;
  return pi;
}

// ---------------------------------------------------------------------------
// Source

Source Source::iid(std::vector<double> probabilities) {
  if (probabilities.empty()) throw ValidationError("iid source: vocabulary must be non-empty");
  check_distribution(probabilities, "iid source");
  Source s;
  s.kind_ = Kind::Iid;
  s.vocab_size_ = static_cast<std::uint32_t>(probabilities.size());
  s.probabilities_ = std::move(probabilities);
  return s;
}

Source Source::markov(std::uint32_t vocab_size, unsigned order, TransitionMap transitions) {
  Source s;
  s.kind_ = Kind::Markov;
  s.vocab_size_ = vocab_size;
  s.chain_ = std::make_shared<const MarkovChain>(vocab_size, order, std::move(transitions));
  return s;
}

Source Source::deterministic(std::uint32_t vocab_size, std::vector<Token> cycle) {
  if (vocab_size == 0) throw ValidationError("deterministic source: vocab_size must be positive");
  if (cycle.empty()) throw ValidationError("deterministic source: cycle must be non-empty");
  for (Token t : cycle)
    if (t >= vocab_size) throw ValidationError("deterministic source: cycle token out of range");
  Source s;
  s.kind_ = Kind::Deterministic;
  s.vocab_size_ = vocab_size;
  s.cycle_ = std::move(cycle);
  return s;
}

Source Source::uniform(std::uint32_t vocab_size) {
  if (vocab_size == 0) throw ValidationError("iid source: vocabulary must be non-empty");
  return iid(std::vector<double>(vocab_size, 1.0 / static_cast<double>(vocab_size)));
}

Source Source::binary_sticky(double stay) {
  if (!(stay > 0.0 && stay < 1.0)) throw ValidationError("binary sticky source: stay must be in (0, 1)");
  TransitionMap t;
  t[{0}] = {stay, 1.0 - stay};
  t[{1}] = {1.0 - stay, stay};
  return markov(2, 1, std::move(t));
}

unsigned Source::order() const { return kind_ == Kind::Markov ? chain_->order() : 0; }

const std::vector<double>& Source::probabilities() const {
  if (kind_ != Kind::Iid) throw ValidationError("source is not IID");
  return probabilities_;
}

const TransitionMap& Source::transitions() const { return chain().transitions(); }

const std::vector<Token>& Source::cycle() const {
  if (kind_ != Kind::Deterministic) throw ValidationError("source is not deterministic");
  return cycle_;
}

const MarkovChain& Source::chain() const {
  if (kind_ != Kind::Markov) throw ValidationError("source is not Markov");
  return *chain_;
}

void Source::conditional(std::span<const Token> history, std::span<double> out) const {
  switch (kind_) {
    case Kind::Iid:
      std::copy(probabilities_.begin(), probabilities_.end(), out.begin());
      return;
    case Kind::Deterministic:
      std::fill(out.begin(), out.end(), 0.0);
      out[cycle_[history.size() % cycle_.size()]] = 1.0;
      return;
    case Kind::Markov:
      break;
  }
  const MarkovChain& mc = *chain_;
  const std::size_t k = mc.order();
  if (history.size() >= k) {
    const std::size_t ctx = mc.index_of(history.subspan(history.size() - k));
    if (mc.defined(ctx)) {
      const auto r = mc.row(ctx);
      std::copy(r.begin(), r.end(), out.begin());
    } else {
      std::fill(out.begin(), out.end(), 1.0 / vocab_size_);
    }
    return;
  }
  // Short history: marginalize the stationary start over contexts whose
  // leading tokens match the history.
  const std::vector<double>& pi = mc.stationary();
  const std::size_t t = history.size();
  std::fill(out.begin(), out.end(), 0.0);
  double denom = 0.0;
  for (std::size_t c = 0; c < mc.context_count(); ++c) {
    if (pi[c] <= 0.0) continue;
    const Context toks = mc.tokens_of(c);
    if (!std::equal(history.begin(), history.end(), toks.begin())) continue;
    out[toks[t]] += pi[c];
    denom += pi[c];
  }
  if (denom <= 0.0) {
    std::fill(out.begin(), out.end(), 1.0 / vocab_size_);
    return;
  }
  for (double& v : out) v /= denom;
}

// ---------------------------------------------------------------------------
// Operations

std::string to_string(EntropyEstimate::Method m) {
  switch (m) {
    case EntropyEstimate::Method::Exact:
      return "exact";
    case EntropyEstimate::Method::Plugin:
      return "plugin";
    case EntropyEstimate::Method::InitialLoss:
      return "initial_loss";
  }
  return "unknown";
}

TokenStream sample_stream(const Source& source, std::size_t length, std::uint64_t seed) {
  if (length == 0) throw ValidationError("sample_stream: length must be >= 1");
  TokenStream out;
  out.vocab_size = source.vocab_size();
  out.tokens.reserve(length);
  Rng rng(seed);
  switch (source.kind()) {
    case Source::Kind::Deterministic: {
      const auto& cyc = source.cycle();
      for (std::size_t i = 0; i < length; ++i) out.tokens.push_back(cyc[i % cyc.size()]);
      break;
    }
    case Source::Kind::Iid: {
      const auto& p = source.probabilities();
      for (std::size_t i = 0; i < length; ++i) out.tokens.push_back(static_cast<Token>(rng.categorical(p)));
      break;
    }
    case Source::Kind::Markov: {
      const MarkovChain& mc = source.chain();
      // Initial context drawn from the stationary distribution.
      std::size_t ctx = rng.categorical(mc.stationary());
      for (Token t : mc.tokens_of(ctx)) {
        if (out.tokens.size() == length) break;
        out.tokens.push_back(t);
      }
      while (out.tokens.size() < length) {
        const Token next = static_cast<Token>(rng.categorical(mc.row(ctx)));
        out.tokens.push_back(next);
        ctx = mc.successor(ctx, next);
      }
      break;
    }
  }
  return out;
}

EntropyEstimate exact_entropy_rate(const Source& source) {
  EntropyEstimate e;
  e.method = EntropyEstimate::Method::Exact;
  switch (source.kind()) {
    case Source::Kind::Deterministic:
      e.value = 0.0;
      break;
    case Source::Kind::Iid:
      e.value = entropy_bits(source.probabilities());
      break;
    case Source::Kind::Markov: {
      const MarkovChain& mc = source.chain();
      const auto& pi = mc.stationary();
      double h = 0.0;
      for (std::size_t c = 0; c < mc.context_count(); ++c)
        if (pi[c] > 0.0) h += pi[c] * entropy_bits(mc.row(c));
      e.value = h;
      break;
    }
  }
  e.value = std::max(0.0, e.value);
  return e;
}

EntropyEstimate plugin_entropy(const TokenStream& stream, std::size_t order) {
  if (stream.empty()) throw ValidationError("plugin_entropy: stream is empty");
  if (stream.size() <= order)
    throw ValidationError("plugin_entropy: stream length " + std::to_string(stream.size()) +
                          " must exceed order " + std::to_string(order));
  stream.validate();

  // Context key: raw bytes of the trailing `order` tokens.
  auto key_at = [&](std::size_t pos) {
    return std::string(reinterpret_cast<const char*>(stream.tokens.data() + pos - order), order * sizeof(Token));
  };
  std::unordered_map<std::string, std::unordered_map<Token, std::uint64_t>> counts;
  std::unordered_map<std::string, std::uint64_t> totals;
  for (std::size_t t = order; t < stream.size(); ++t) {
    const std::string key = key_at(t);
    ++counts[key][stream.tokens[t]];
    ++totals[key];
  }
  const double n = static_cast<double>(stream.size() - order);
  // Per-observation surprisal s = -log2 n(c,x)/n(c); H = E[s].
  double mean = 0.0, second = 0.0;
  for (const auto& [key, row] : counts) {
    const double nc = static_cast<double>(totals[key]);
    for (const auto& [tok, cnt] : row) {
      const double s = -std::log2(static_cast<double>(cnt) / nc);
      const double w = static_cast<double>(cnt) / n;
      mean += w * s;
      second += w * s * s;
    }
  }
  EntropyEstimate e;
  e.method = EntropyEstimate::Method::Plugin;
  e.parameter = order;
  e.value = std::max(0.0, mean);
  e.standard_error = std::sqrt(std::max(0.0, second - mean * mean) / n);
  return e;
}

}  // namespace iclab
