#include <gtest/gtest.h>

#include <random>

#include <abslab/friction.hpp>

#include "oracles.hpp"

using namespace abslab;

namespace {

TEST(Mu, ZeroSlipGivesZeroForEveryPreset) {
  for (const auto& s : oracle::presets()) EXPECT_EQ(mu(s, 0.0), 0.0) << s.name;
}

TEST(Mu, NoLinearLossApproachesPeakFactor) {
  const RoadSurface s{"flat", 0.9, 500.0, 0.0};
  EXPECT_NEAR(mu(s, 1.0), 0.9, 1e-12);
}

TEST(Mu, DryAtPointOneSevenMatchesHandValue) {
  EXPECT_NEAR(mu(oracle::preset("dry"), 0.17), 1.170019928406221179, 1e-13);
}

TEST(Mu, RejectsSlipOutsideUnitInterval) {
  const auto s = oracle::preset("wet");
  EXPECT_THROW(mu(s, -1e-9), DomainError);
  EXPECT_THROW(mu(s, 1.0 + 1e-9), DomainError);
  EXPECT_THROW(mu_prime(s, 1.5), DomainError);
}

TEST(MuPrime, AtZeroIsInitialSlope) {
  for (const auto& s : oracle::presets()) EXPECT_DOUBLE_EQ(mu_prime(s, 0.0), s.theta1 * s.theta2 - s.theta3);
}

TEST(MuPrime, VanishesAtOptimalSlip) {
  const auto s = oracle::preset("dry");
  EXPECT_LT(std::abs(mu_prime(s, lambda_opt(s))), 1e-9);
}

TEST(MuPrime, MatchesCentralDifferencesOnRandomDraws) {
  const auto lib = oracle::presets();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(1e-5, 1.0 - 1e-5);
  for (int i = 0; i < 1000; ++i) {
    const auto& s = lib[i % lib.size()];
    const double l = u(rng);
    const double fd = oracle::central_diff([&](double x) { return mu(s, x); }, l, 1e-6);
    EXPECT_NEAR(mu_prime(s, l), fd, 1e-6) << s.name << " lambda=" << l;
  }
}

TEST(OptimalSlip, MonotoneCurveIsFlagged) {
  const auto r = optimal_slip(RoadSurface{"mono", 1.0, 10.0, 0.0});
  EXPECT_TRUE(r.monotone);
  EXPECT_EQ(r.lambda, 1.0);
}

TEST(OptimalSlip, DegenerateSurfaceHasNoPeak) {
  EXPECT_THROW(optimal_slip(RoadSurface{"flat", 0.1, 1.0, 0.2}), DomainError);
}

TEST(OptimalSlip, PresetsAgreeWithGridSearchAndHandValues) {
  const std::vector<std::pair<std::string, double>> hand{
      {"dry", 0.17000840950972047271}, {"wet", 0.13083864398848127114}, {"snow", 0.05999636605998570822}};
  for (const auto& [name, expected] : hand) {
    const auto s = oracle::preset(name);
    const double l = lambda_opt(s);
    EXPECT_NEAR(l, expected, 1e-14) << name;
    const double grid = oracle::grid_argmax([&](double x) { return mu(s, x); }, 0.0, 1.0, 1e-5);
    EXPECT_NEAR(l, grid, 1e-4) << name;
    EXPECT_LT(std::abs(mu_prime(s, l)), 1e-9) << name;
    EXPECT_GE(mu(s, l), mu(s, l + 1e-3));
    EXPECT_GE(mu(s, l), mu(s, l - 1e-3));
  }
}

TEST(OptimalSlip, SnowPeaksBeforeDry) {
  EXPECT_LT(lambda_opt(oracle::preset("snow")), lambda_opt(oracle::preset("dry")));
}

TEST(FrictionCurve, TwoPointsAreTheEndpoints) {
  const auto s = oracle::preset("wet");
  const auto c = friction_curve(s, 2);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].lambda, 0.0);
  EXPECT_EQ(c[0].mu, 0.0);
  EXPECT_EQ(c[1].lambda, 1.0);
  EXPECT_EQ(c[1].mu, mu(s, 1.0));
}

TEST(FrictionCurve, RejectsFewerThanTwoPoints) {
  EXPECT_THROW(friction_curve(oracle::preset("dry"), 1), ConfigError);
}

TEST(FrictionCurve, DrySampleMaximumSitsNearestOptimalSlip) {
  const auto s = oracle::preset("dry");
  const auto c = friction_curve(s, 101);
  EXPECT_EQ(c.front().lambda, 0.0);
  EXPECT_EQ(c.front().mu, 0.0);
  std::size_t arg = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i].mu > c[arg].mu) arg = i;
    if (i) {
      EXPECT_GT(c[i].lambda, c[i - 1].lambda);
    }
  }
  EXPECT_EQ(arg, static_cast<std::size_t>(std::lround(lambda_opt(s) * 100)));
}

TEST(FrictionCurve, SnowBelowDryBeyondFivePercentSlip) {
  const auto snow = friction_curve(oracle::preset("snow"), 101);
  const auto dry = friction_curve(oracle::preset("dry"), 101);
  for (std::size_t i = 5; i < 101; ++i) EXPECT_LT(snow[i].mu, dry[i].mu) << i;
}

TEST(SurfaceOrdering, SnowBelowWetBelowDryOnDenseGrid) {
  const auto dry = oracle::preset("dry"), wet = oracle::preset("wet"), snow = oracle::preset("snow");
  for (int i = 0; i <= 9500; ++i) {
    const double l = 0.05 + i * 1e-4;
    EXPECT_LT(mu(snow, l), mu(wet, l)) << l;
    EXPECT_LT(mu(wet, l), mu(dry, l)) << l;
  }
}

TEST(SurfaceFile, ParsesAndValidates) {
  const auto lib = parse_surfaces(nlohmann::json::parse(
      R"({"surfaces":[{"name":"a","theta1":1,"theta2":2,"theta3":0.1}]})"));
  ASSERT_EQ(lib.size(), 1u);
  EXPECT_EQ(lib[0].name, "a");
  EXPECT_THROW(parse_surfaces(nlohmann::json::parse(R"([{"name":"a","theta1":-1,"theta2":2,"theta3":0.1}])")),
               ConfigError);
  EXPECT_THROW(parse_surfaces(nlohmann::json::parse(
                   R"([{"name":"a","theta1":1,"theta2":2,"theta3":0},{"name":"a","theta1":1,"theta2":2,"theta3":0}])")),
               ConfigError);
  EXPECT_THROW(load_surfaces("/nonexistent/surfaces.json"), ConfigError);
  EXPECT_THROW(find_surface(lib, "ice"), ConfigError);
}

}  // namespace
