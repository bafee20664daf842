// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "iclab/error.hpp"
#include "iclab/predictors.hpp"
#include "iclab/rng.hpp"

using namespace iclab;

namespace {

void expect_distribution(const std::vector<double>& p) {
  double s = 0.0;
  for (double v : p) {
    EXPECT_GT(v, 0.0);
    s += v;
  }
  EXPECT_NEAR(s, 1.0, 1e-12);
}

std::vector<Predictor> sample_predictors() {
  return {Predictor::uniform(5), Predictor::ngram(5, 2, 0.5), Predictor::tiny_lm({5, 3, 6, 32, 0.1, 9}),
          Predictor::oracle(Source::iid({0.1, 0.2, 0.3, 0.25, 0.15}))};
}

TEST(Uniform, PredictsUniformAndStoresNothing) {
  Predictor p = Predictor::uniform(8);
  for (double v : p.predict({})) EXPECT_DOUBLE_EQ(v, 0.125);
  EXPECT_NEAR(p.cross_entropy_bits({}, 3), 3.0, 1e-15);
  EXPECT_EQ(p.param_bits(), 0u);
  EXPECT_THROW(Predictor::uniform(1), ValidationError);
}

TEST(NGram, MatchesHandCountedSmoothing) {
  const std::vector<Token> seq{0, 1, 1, 2, 1, 1, 0, 1, 2, 2, 1};
  Predictor p = Predictor::ngram(3, 1, 0.5);
  for (std::size_t t = 0; t < seq.size(); ++t) p.update(std::span(seq).first(t), seq[t]);

  // Oracle: count bigrams directly, with the first token seen after a 0 pad.
  double n[3][3] = {};
  for (std::size_t t = 0; t < seq.size(); ++t) n[t == 0 ? 0 : seq[t - 1]][seq[t]] += 1;
  for (Token ctx = 0; ctx < 3; ++ctx) {
    const std::vector<Token> h{2, ctx};
    const auto got = p.predict(h);
    const double tot = n[ctx][0] + n[ctx][1] + n[ctx][2];
    for (Token j = 0; j < 3; ++j) {
      EXPECT_NEAR(got[j], (n[ctx][j] + 0.5) / (tot + 1.5), 1e-15);
      EXPECT_NEAR(p.cross_entropy_bits(h, j), -std::log2(got[j]), 1e-12);
    }
  }
}

TEST(NGram, ParamBitsCountsDenseTable) {
  EXPECT_EQ(Predictor::ngram(2, 1).param_bits(), 4u * 32u);
  EXPECT_EQ(Predictor::ngram(4, 3, 0.5, 8).param_bits(), 256u * 8u);
  EXPECT_EQ(Predictor::ngram(10, 0).param_bits(), 10u * 32u);
}

TEST(NGram, UpdateTouchesOneCell) {
  NGramModel m(3, 2, 1.0);
  const std::vector<Token> h{2, 1};
  m.update(h, 0);
  EXPECT_EQ(m.count(h, 0), 1u);
  EXPECT_EQ(std::accumulate(m.counts().begin(), m.counts().end(), std::uint64_t{0}), 1u);
}

TEST(NGram, ShortHistoryIsLeftPadded) {
  NGramModel m(3, 2, 1.0);
  m.update(std::vector<Token>{2}, 1);
  EXPECT_EQ(m.count(std::vector<Token>{0, 2}, 1), 1u);
  EXPECT_EQ(m.context_index(std::vector<Token>{}), 0u);
}

TEST(NGram, CountsSaturate) {
  NGramModel m(2, 0, 0.5, 2);
  for (int i = 0; i < 10; ++i) m.update({}, 1);
  EXPECT_EQ(m.count({}, 1), 3u);
}

TEST(NGram, RequantizeIdentityWhenCountsFit) {
  NGramModel m(2, 1, 0.5, 32);
  for (int i = 0; i < 5; ++i) m.update(std::vector<Token>{1}, 1);
  const NGramModel q = m.requantized(8);
  EXPECT_EQ(q.count_bits(), 8u);
  EXPECT_TRUE(std::equal(q.counts().begin(), q.counts().end(), m.counts().begin()));
}

TEST(NGram, RequantizeRescalesToWidth) {
  NGramModel m(2, 0, 0.5, 32);
  for (int i = 0; i < 100; ++i) m.update({}, 0);
  for (int i = 0; i < 30; ++i) m.update({}, 1);
  const NGramModel q = m.requantized(3);
  EXPECT_EQ(q.count({}, 0), 7u);
  EXPECT_EQ(q.count({}, 1), 2u);  // round(30 * 7 / 100)
  EXPECT_EQ(q.param_bits(), 2u * 3u);
}

TEST(NGram, RejectsBadConfig) {
  EXPECT_THROW(NGramModel(1, 1, 0.5), ValidationError);
  EXPECT_THROW(NGramModel(2, 1, 0.0), ValidationError);
  EXPECT_THROW(NGramModel(2, 1, 0.5, 0), ValidationError);
  EXPECT_THROW(NGramModel(1000, 4, 0.5), ValidationError);
}

TEST(TinyLm, ParameterCount) {
  TinyLm m({7, 3, 5, 16, 0.1, 0});
  EXPECT_EQ(m.parameter_count(), 3u * 7 * 5 + 5 + 7 * 5 + 7);
  EXPECT_EQ(m.param_bits(), m.parameter_count() * 16);
  std::size_t covered = 0;
  for (const auto& b : m.blocks()) covered += b.size;
  EXPECT_EQ(covered, m.parameter_count());
}

TEST(TinyLm, SeedDeterminesInit) {
  EXPECT_EQ(TinyLm({4, 2, 3, 32, 0.1, 1}), TinyLm({4, 2, 3, 32, 0.1, 1}));
  EXPECT_NE(TinyLm({4, 2, 3, 32, 0.1, 1}), TinyLm({4, 2, 3, 32, 0.1, 2}));
}

TEST(TinyLm, CrossEntropyMatchesPredict) {
  Predictor p = Predictor::tiny_lm({6, 3, 8, 32, 0.2, 4});
  Rng rng(3);
  std::vector<Token> hist;
  for (int t = 0; t < 50; ++t) {
    const auto dist = p.predict(hist);
    expect_distribution(dist);
    const Token next = static_cast<Token>(rng.next_u64() % 6);
    EXPECT_NEAR(p.cross_entropy_bits(hist, next), -std::log2(dist[next]), 1e-12);
    p.update(hist, next);
    hist.push_back(next);
  }
}

TEST(TinyLm, GradientMatchesFiniteDifferences) {
  TinyLm m({4, 2, 3, 32, 0.1, 8});
  const std::vector<Token> h{3, 1};
  const Token next = 2;
  const auto g = m.gradient(h, next);
  ASSERT_EQ(g.size(), m.parameter_count());
  const double step = 1e-6;
  for (std::size_t i = 0; i < m.parameter_count(); ++i) {
    TinyLm plus = m, minus = m;
    plus.parameters()[i] += step;
    minus.parameters()[i] -= step;
    const double fd = (plus.cross_entropy_nats(h, next) - minus.cross_entropy_nats(h, next)) / (2 * step);
    EXPECT_NEAR(g[i], fd, 1e-7) << "parameter " << i;
  }
}

TEST(TinyLm, UpdateIsOneSgdStep) {
  TinyLm m({4, 2, 3, 32, 0.05, 8});
  const std::vector<Token> h{0, 3};
  const auto g = m.gradient(h, 1);
  TinyLm expected = m;
  for (std::size_t i = 0; i < g.size(); ++i) expected.parameters()[i] -= 0.05 * g[i];
  m.update(h, 1);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(m.parameters()[i], expected.parameters()[i], 1e-15);
}

TEST(TinyLm, LearnsARepeatedPattern) {
  TokenStream s{3, {}};
  for (int i = 0; i < 300; ++i) s.tokens.push_back(static_cast<Token>(i % 3));
  Predictor p = Predictor::tiny_lm({3, 1, 8, 32, 0.1, 0});
  const double before = average_cross_entropy(p, s, UpdateMode::Frozen);
  train(p, s, 5);
  const double after = average_cross_entropy(p, s, UpdateMode::Frozen);
  EXPECT_NEAR(before, std::log2(3.0), 0.3);
  EXPECT_LT(after, 0.2);
}

TEST(Oracle, MixesTrueConditionalWithEpsilon) {
  const Source s = Source::binary_sticky(0.9);
  Predictor p = Predictor::oracle(s);
  const auto d = p.predict(std::vector<Token>{0, 1});
  EXPECT_NEAR(d[1], (1 - 1e-12) * 0.9 + 0.5e-12, 1e-16);
  expect_distribution(d);
  EXPECT_EQ(p.param_bits(), 0u);
}

TEST(Oracle, DeterministicSourceStaysCodable) {
  Predictor p = Predictor::oracle(Source::deterministic(3, {0, 1, 2}));
  const std::vector<Token> h{0};
  EXPECT_GT(p.predict(h)[2], 0.0);
  EXPECT_LT(p.cross_entropy_bits(h, 1), 1e-9);
}

TEST(Oracle, AverageLossApproachesEntropy) {
  const Source s = Source::binary_sticky(0.9);
  const auto stream = sample_stream(s, 100000, 2);
  EXPECT_NEAR(average_cross_entropy(Predictor::oracle(s), stream, UpdateMode::Frozen), 0.469, 0.01);
}

TEST(Predictor, ContractChecks) {
  Predictor p = Predictor::ngram(3, 1);
  std::vector<double> wrong(2);
  EXPECT_THROW(p.predict({}, wrong), ValidationError);
  EXPECT_THROW(p.update({}, 3), ValidationError);
  EXPECT_THROW(p.cross_entropy_bits({}, 7), ValidationError);
  EXPECT_THROW((void)p.predict(std::vector<Token>{5}), ValidationError);
}

TEST(Predictor, OnlineAndFrozenAverages) {
  const auto s = sample_stream(Source::binary_sticky(0.9), 2000, 1);
  Predictor p = Predictor::ngram(2, 1);
  EXPECT_NEAR(average_cross_entropy(p, s, UpdateMode::Frozen), 1.0, 1e-12);
  EXPECT_LT(average_cross_entropy(p, s, UpdateMode::Online), 0.6);
  EXPECT_EQ(p.checkpoint_hash(), Predictor::ngram(2, 1).checkpoint_hash());
}

TEST(Checkpoint, RoundTripAllKinds) {
  const auto s = sample_stream(Source::uniform(5), 200, 4);
  for (Predictor p : sample_predictors()) {
    train(p, s, 1);
    const auto bytes = p.checkpoint();
    const Predictor back = Predictor::from_checkpoint(bytes);
    EXPECT_EQ(back.kind(), p.kind());
    EXPECT_EQ(back.checkpoint(), bytes);
    EXPECT_EQ(back.predict(std::span(s.tokens).first(10)), p.predict(std::span(s.tokens).first(10)));
  }
}

TEST(Checkpoint, HashTracksState) {
  Predictor a = Predictor::ngram(3, 1), b = Predictor::ngram(3, 1);
  EXPECT_EQ(a.checkpoint_hash(), b.checkpoint_hash());
  a.update({}, 2);
  EXPECT_NE(a.checkpoint_hash(), b.checkpoint_hash());
}

TEST(Checkpoint, RejectsCorruption) {
  for (const Predictor& p : sample_predictors()) {
    auto bytes = p.checkpoint();
    auto truncated = bytes;
    truncated.pop_back();
    EXPECT_THROW(Predictor::from_checkpoint(truncated), ValidationError) << to_string(p.kind());
    auto trailing = bytes;
    trailing.push_back(0);
    EXPECT_THROW(Predictor::from_checkpoint(trailing), ValidationError) << to_string(p.kind());
    auto magic = bytes;
    magic[1] ^= 0xff;
    EXPECT_THROW(Predictor::from_checkpoint(magic), ValidationError) << to_string(p.kind());
  }
}

}  // namespace
