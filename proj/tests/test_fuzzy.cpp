#include <gtest/gtest.h>

#include <random>

#include <abslab/fuzzy.hpp>

#include "oracles.hpp"

using namespace abslab;

namespace {

MembershipBank bank() { return make_default_bank(oracle::presets()); }

std::size_t index_of(const MembershipBank& b, const std::string& label) {
  for (std::size_t i = 0; i < b.size(); ++i)
    if (b[i].label == label) return i;
  throw std::out_of_range(label);
}

TEST(Bank, SortedByOptimalSlipWithShoulders) {
  const auto b = bank();
  ASSERT_EQ(b.size(), 3u);
  EXPECT_EQ(b[0].label, "snow");
  EXPECT_EQ(b[1].label, "wet");
  EXPECT_EQ(b[2].label, "dry");
  EXPECT_EQ(b[0].kind, MembershipKind::ShoulderedLeft);
  EXPECT_EQ(b[1].kind, MembershipKind::Triangular);
  EXPECT_EQ(b[2].kind, MembershipKind::ShoulderedRight);
  EXPECT_EQ(b[0].left_foot, 0.0);
  EXPECT_EQ(b[2].right_foot, 1.0);
  EXPECT_EQ(b[1].left_foot, b[0].center);
  EXPECT_EQ(b[1].right_foot, b[2].center);
}

TEST(Bank, RejectsDuplicateOptimalSlip) {
  auto s = oracle::presets();
  s.push_back(s.front());
  s.back().name = "clone";
  EXPECT_THROW(make_default_bank(s), ConfigError);
  EXPECT_THROW(make_default_bank({}), ConfigError);
}

TEST(Memberships, CrispAtEveryCenter) {
  const auto b = bank();
  for (std::size_t i = 0; i < b.size(); ++i) {
    const auto w = weights(memberships(b[i].center, b), b);
    for (std::size_t j = 0; j < b.size(); ++j) EXPECT_EQ(w.weights[j], i == j ? 1.0 : 0.0) << b[i].label;
  }
}

TEST(Memberships, HalfwayBetweenNeighbours) {
  const auto b = bank();
  for (std::size_t i = 0; i + 1 < b.size(); ++i) {
    const double mid = 0.5 * (b[i].center + b[i + 1].center);
    const auto m = memberships(mid, b);
    EXPECT_NEAR(m.values[i], 0.5, 1e-12);
    EXPECT_NEAR(m.values[i + 1], 0.5, 1e-12);
    const auto w = weights(m, b);
    EXPECT_NEAR(w.weights[i], 0.5, 1e-12);
    EXPECT_NEAR(w.weights[i + 1], 0.5, 1e-12);
  }
}

TEST(Memberships, ShouldersSaturate) {
  const auto b = bank();
  const auto lo = memberships(0.01, b), hi = memberships(0.6, b);
  EXPECT_EQ(lo.values[index_of(b, "snow")], 1.0);
  EXPECT_EQ(hi.values[index_of(b, "dry")], 1.0);
  EXPECT_FALSE(lo.coverage_warning);
  EXPECT_FALSE(hi.coverage_warning);
}

TEST(Memberships, OutOfRangeEstimateWarnsAndClamps) {
  const auto b = bank();
  const auto m = memberships(1.7, b);
  EXPECT_TRUE(m.coverage_warning);
  EXPECT_EQ(m.values[index_of(b, "dry")], 1.0);
  EXPECT_TRUE(memberships(-0.2, b).coverage_warning);
  EXPECT_TRUE(memberships(NAN, b).coverage_warning);
}

TEST(Memberships, HandWorkedTriangle) {
  const MembershipFunction f{"t", MembershipKind::Triangular, 0.2, 0.1, 0.4};
  EXPECT_DOUBLE_EQ(f(0.15), 0.5);
  EXPECT_NEAR(f(0.35), 0.25, 1e-15);
  EXPECT_EQ(f(0.05), 0.0);
  EXPECT_EQ(f(0.45), 0.0);
  EXPECT_EQ(f(0.2), 1.0);
  EXPECT_THROW((MembershipFunction{"bad", MembershipKind::Triangular, 0.5, 0.6, 0.7}.validate()), ConfigError);
}

TEST(Weights, NormalizationExamples) {
  auto w = weights({0.2, 0.6, 0.0});
  EXPECT_DOUBLE_EQ(w.weights[0], 0.25);
  EXPECT_DOUBLE_EQ(w.weights[1], 0.75);
  EXPECT_EQ(w.weights[2], 0.0);
  w = weights({1.0, 1.0, 1.0, 1.0});
  for (double x : w.weights) EXPECT_DOUBLE_EQ(x, 0.25);
}

TEST(Weights, RejectsDegenerateInput) {
  EXPECT_THROW(weights({0.0, 0.0, 0.0}), DomainError);
  EXPECT_THROW(weights({0.5, -0.1}), DomainError);
  EXPECT_THROW(weights({0.5, 1.5}), DomainError);
  EXPECT_THROW(weights({0.5, 0.5}, {"a"}), ConfigError);
}

TEST(Weights, SumToOneAndNonNegativeEverywhere) {
  const auto b = bank();
  for (int i = 0; i <= 10000; ++i) {
    const auto w = weights(memberships(i * 1e-4, b), b);
    double sum = 0.0;
    for (double x : w.weights) {
      ASSERT_GE(x, 0.0);
      sum += x;
    }
    ASSERT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(Blend, HandExamples) {
  const RoadWeights w{{"a", "b"}, {0.25, 0.75}};
  EXPECT_DOUBLE_EQ(blend(w, {400.0, 800.0}), 700.0);
  EXPECT_DOUBLE_EQ(weighted_reference(w, {0.1, 0.2}), 0.175);
  EXPECT_THROW(blend(w, {1.0}), ConfigError);
}

TEST(Blend, ConvexCombinationOfCommands) {
  const auto b = bank();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> ul(0.0, 1.0), ut(0.0, 1500.0);
  for (int i = 0; i < 2000; ++i) {
    const auto w = weights(memberships(ul(rng), b), b);
    const std::vector<double> cmd{ut(rng), ut(rng), ut(rng)};
    const double T = blend(w, cmd);
    ASSERT_GE(T, *std::min_element(cmd.begin(), cmd.end()) - 1e-9);
    ASSERT_LE(T, *std::max_element(cmd.begin(), cmd.end()) + 1e-9);
  }
}

// Piecewise-linear weights with slopes bounded by 1/(min center gap); the blend is
// Lipschitz in the estimate with constant (max |T_i - T_j|) * that bound.
TEST(Blend, LipschitzInTheEstimate) {
  const auto b = bank();
  double min_gap = INFINITY;
  for (std::size_t i = 0; i + 1 < b.size(); ++i) min_gap = std::min(min_gap, b[i + 1].center - b[i].center);
  const std::vector<double> cmd{300.0, 900.0, 1400.0};
  const double L = 2.0 * (1400.0 - 300.0) / min_gap;
  const double h = 1e-5;
  for (int i = 0; i + 1 <= 100000; ++i) {
    const double x = i * h;
    const double a = blend(weights(memberships(x, b), b), cmd);
    const double c = blend(weights(memberships(x + h, b), b), cmd);
    ASSERT_LE(std::abs(c - a), L * h * (1 + 1e-9)) << x;
  }
}

TEST(Memberships, JustPastDryCenterIsCrispDry) {
  const auto b = bank();
  const auto w = weights(memberships(b[index_of(b, "dry")].center + 0.01, b), b);
  EXPECT_EQ(w.weights[index_of(b, "dry")], 1.0);
  EXPECT_EQ(w.weights[index_of(b, "wet")], 0.0);
  EXPECT_EQ(w.weights[index_of(b, "snow")], 0.0);
}

TEST(Memberships, ValuesStayInUnitInterval) {
  const auto b = bank();
  for (int i = -100; i <= 1100; ++i)
    for (double m : memberships(i * 1e-3, b).values) {
      ASSERT_GE(m, 0.0);
      ASSERT_LE(m, 1.0);
    }
}

TEST(Weights, AlreadyNormalizedIsUnchanged) {
  const auto w = weights({0.2, 0.6, 0.2});
  EXPECT_NEAR(w.weights[0], 0.2, 1e-15);
  EXPECT_NEAR(w.weights[1], 0.6, 1e-15);
  EXPECT_NEAR(w.weights[2], 0.2, 1e-15);
  const auto c = weights({1.0, 0.0, 0.0});
  EXPECT_EQ(c.weights, (std::vector<double>{1.0, 0.0, 0.0}));
}

TEST(Blend, ArithmeticAndAffineInvariance) {
  const RoadWeights half{{}, {0.5, 0.5, 0.0}};
  EXPECT_DOUBLE_EQ(blend(half, {100.0, 300.0, 900.0}), 200.0);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const auto w = weights({u(rng), u(rng), u(rng)});
    EXPECT_NEAR(blend(w, {640.0, 640.0, 640.0}), 640.0, 1e-12);
    EXPECT_NEAR(weighted_reference(w, {0.11, 0.11, 0.11}), 0.11, 1e-15);
  }
}

TEST(Blend, WeightedReference) {
  const auto b = bank();
  std::vector<double> lopt;
  for (const auto& f : b) lopt.push_back(f.center);
  const std::size_t dry = index_of(b, "dry"), wet = index_of(b, "wet"), snow = index_of(b, "snow");
  EXPECT_EQ(weighted_reference(weights(memberships(b[dry].center, b), b), lopt), b[dry].center);
  const double mid = 0.5 * (b[wet].center + b[snow].center);
  EXPECT_NEAR(weighted_reference(weights(memberships(mid, b), b), lopt), mid, 1e-15);
  const RoadWeights crisp{{}, {0.0, 0.0, 1.0}};
  EXPECT_EQ(blend(crisp, {123.0, 456.0, 789.5}), 789.5);
}

TEST(Kind, ParseRoundTrip) {
  for (auto k : {MembershipKind::Triangular, MembershipKind::ShoulderedLeft, MembershipKind::ShoulderedRight})
    EXPECT_EQ(parse_membership_kind(to_string(k)), k);
  EXPECT_THROW(parse_membership_kind("gaussian"), ConfigError);
}

}  // namespace
