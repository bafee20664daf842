// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "iclab/error.hpp"
#include "iclab/ic_laws.hpp"
#include "iclab/rng.hpp"

using namespace iclab;

namespace {

TEST(Capacity, HandArithmetic) {
  EXPECT_DOUBLE_EQ(effective_information(1000, BitsPerToken(2.0), BitsPerToken(1.5)), 500.0);
  EXPECT_DOUBLE_EQ(information_capacity(1000, BitsPerToken(2.0), BitsPerToken(1.5), 2000), 0.25);
  EXPECT_DOUBLE_EQ(effective_information(10, BitsPerToken(1.0), BitsPerToken(1.2)), -2.0);
}

TEST(Capacity, ZeroParametersHasNoCapacity) {
  EXPECT_THROW(information_capacity(10, BitsPerToken(1), BitsPerToken(0.5), 0), ValidationError);
  ICState s{10, BitsPerToken(1), BitsPerToken(0.5), 0};
  EXPECT_FALSE(s.eta().has_value());
  EXPECT_TRUE(s.flags().has(Flag::NoCapacity));
  EXPECT_EQ(to_string(Flag::NoCapacity), "no-capacity-baseline");
}

TEST(Capacity, FlagsAreReportedNotClamped) {
  ICState neg{100, BitsPerToken(1.0), BitsPerToken(1.5), 10};
  EXPECT_DOUBLE_EQ(*neg.eta(), -5.0);
  EXPECT_TRUE(neg.flags().has(Flag::NegativeInformation));
  EXPECT_FALSE(neg.flags().has(Flag::EtaAboveOne));

  ICState over{100, BitsPerToken(1.0), BitsPerToken(0.5), 10};
  EXPECT_DOUBLE_EQ(*over.eta(), 5.0);
  EXPECT_TRUE(over.flags().has(Flag::EtaAboveOne));

  ICState fine{100, BitsPerToken(1.0), BitsPerToken(0.5), 100};
  EXPECT_TRUE(fine.flags().flags.empty());
}

TEST(Capacity, FlagSetDeduplicates) {
  FlagSet f;
  f.add(Flag::CorollaryCaveat);
  f.add(Flag::CorollaryCaveat);
  EXPECT_EQ(f.flags.size(), 1u);
}

TEST(Landauer, OneBitAtRoomTemperature) {
  const double direct = 1.380649e-23 * 300.0 * std::log(2.0);
  EXPECT_NEAR(landauer_bound(1.0), direct, 1e-36);
  EXPECT_NEAR(landauer_bound(1.0), 2.871e-21, 1e-24);
}

TEST(Landauer, LinearInBitsAndTemperature) {
  Rng rng(5);
  for (int i = 0; i < 10; ++i) {
    const double bits = rng.uniform(0, 1e12), t = rng.uniform(1, 1000);
    const double direct = bits * 1.380649e-23 * t * std::log(2.0);
    EXPECT_NEAR(landauer_bound(bits, {.temperature = t}), direct, 1e-12 * direct);
    EXPECT_NEAR(landauer_bound(2 * bits, {.temperature = t}), 2 * landauer_bound(bits, {.temperature = t}),
                1e-12 * direct);
    EXPECT_NEAR(landauer_bound(bits, {.temperature = 3 * t}), 3 * landauer_bound(bits, {.temperature = t}),
                1e-12 * direct);
  }
}

TEST(Landauer, RejectsBadInput) {
  EXPECT_THROW(landauer_bound(-1.0), ValidationError);
  EXPECT_THROW(landauer_bound(1.0, {.temperature = 0.0}), ValidationError);
  EXPECT_EQ(landauer_bound(0.0), 0.0);
}

TEST(Trace, ValidateAndConvert) {
  TrainingTrace t{LossUnit::Nats, {{10, std::log(2.0)}, {20, 2 * std::log(2.0)}}};
  EXPECT_NO_THROW(t.validate());
  const auto b = t.to_bits();
  EXPECT_EQ(b.unit, LossUnit::Bits);
  EXPECT_NEAR(b.records[0].loss, 1.0, 1e-15);
  EXPECT_NEAR(b.records[1].loss, 2.0, 1e-15);

  TrainingTrace bad{LossUnit::Bits, {{10, 1.0}, {10, 1.0}}};
  EXPECT_THROW(bad.validate(), ValidationError);
  TrainingTrace negative{LossUnit::Bits, {{10, -1.0}}};
  EXPECT_THROW(negative.validate(), ValidationError);
}

TEST(Trace, CapacityTrajectory) {
  TrainingTrace t{LossUnit::Bits, {{100, 3.0}, {200, 2.0}, {400, 1.0}}};
  const auto pts = capacity_trajectory(t, BitsPerToken(4.0), 1000);
  ASSERT_EQ(pts.size(), 3u);
  EXPECT_DOUBLE_EQ(pts[0].effective_info, 100.0);
  EXPECT_DOUBLE_EQ(pts[1].eta, 0.4);
  EXPECT_DOUBLE_EQ(pts[2].eta, 1.2);
  TrainingTrace nats = t;
  nats.unit = LossUnit::Nats;
  EXPECT_THROW(capacity_trajectory(nats, BitsPerToken(4.0), 1000), ValidationError);
}

TEST(InitialLoss, WindowMeanAndFlags) {
  TrainingTrace t{LossUnit::Bits, {{1, 8.0}, {2, 7.9}, {4, 7.0}}};
  const auto e = entropy_from_initial_loss(t, 2);
  EXPECT_NEAR(e.estimate.value, 7.95, 1e-12);
  EXPECT_EQ(e.estimate.method, EntropyEstimate::Method::InitialLoss);
  EXPECT_EQ(e.estimate.parameter, 2u);
  ASSERT_TRUE(e.estimate.standard_error);
  EXPECT_NEAR(*e.estimate.standard_error, 0.05, 1e-12);
  EXPECT_TRUE(e.flags.has(Flag::CorollaryCaveat));
  EXPECT_FALSE(e.flags.has(Flag::CorollaryBias));

  EXPECT_FALSE(entropy_from_initial_loss(t, 1, BitsPerToken(8.1)).flags.has(Flag::CorollaryBias));
  EXPECT_TRUE(entropy_from_initial_loss(t, 1, BitsPerToken(7.5)).flags.has(Flag::CorollaryBias));
  EXPECT_THROW(entropy_from_initial_loss(t, 4), ValidationError);
  EXPECT_THROW(entropy_from_initial_loss(t, 0), ValidationError);
}

TEST(InitialLoss, NatsTraceIsConverted) {
  TrainingTrace t{LossUnit::Nats, {{1, 8.0 * std::log(2.0)}}};
  EXPECT_NEAR(entropy_from_initial_loss(t, 1).estimate.value, 8.0, 1e-12);
}

TEST(Quantization, NecessaryCondition) {
  const auto v = quantization_condition({32, 8, 0.2, std::nullopt});
  EXPECT_TRUE(v.necessary_holds);
  EXPECT_DOUBLE_EQ(v.necessary_margin, 8 - 6.4);
  EXPECT_FALSE(v.full_holds.has_value());
  EXPECT_TRUE(v.lossless_possible());

  const auto w = quantization_condition({32, 4, 0.2, std::nullopt});
  EXPECT_FALSE(w.necessary_holds);
  EXPECT_FALSE(w.lossless_possible());
}

TEST(Quantization, FullCondition) {
  const auto v = quantization_condition({16, 8, 0.25, 0.5});
  EXPECT_TRUE(v.necessary_holds);
  ASSERT_TRUE(v.full_holds);
  EXPECT_TRUE(*v.full_holds);
  EXPECT_DOUBLE_EQ(*v.full_margin, 0.0);

  const auto w = quantization_condition({16, 8, 0.25, 0.4});
  EXPECT_TRUE(w.necessary_holds);
  EXPECT_FALSE(*w.full_holds);
  EXPECT_FALSE(w.lossless_possible());

  EXPECT_THROW(quantization_condition({16, 8, 0.25, 1.5}), ValidationError);
  EXPECT_THROW(quantization_condition({0, 8, 0.25, std::nullopt}), ValidationError);
}

}  // namespace
