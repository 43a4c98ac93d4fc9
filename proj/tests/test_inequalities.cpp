#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bvlab/fixtures.hpp"
#include "bvlab/inequalities.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace bvlab;

TEST(MazyaConstant, MatchesClosedForm) {
  EXPECT_NEAR(mazya_constant(2), 2.0 * std::sqrt(std::numbers::pi), 1e-15);
  EXPECT_NEAR(mazya_constant(3), 3.0 * std::cbrt(oracle::ball_volume(3)), 1e-14);
}

TEST(Mazya, MollifiedBallIsNearlySharp) {
  FixtureParams p;
  p.level = 8;
  p.eps = 1.0 / 16;
  auto r = check_mazya(mollified_ball<2>(p));
  EXPECT_TRUE(r.pass);
  const double ratio = r.rhs / r.lhs;
  EXPECT_GE(ratio, 1.0);
  EXPECT_LE(ratio, 1.03);
}

TEST(Mazya, ApproachesEqualityAsMollifierShrinks) {
  double prev = 1e9;
  for (double eps : {1.0 / 8, 1.0 / 16, 1.0 / 32}) {
    FixtureParams p;
    p.level = 9;
    p.eps = eps;
    auto r = check_mazya(mollified_ball<2>(p));
    const double err = r.rhs / r.lhs - 1.0;
    EXPECT_GE(err, 0.0);
    EXPECT_LT(err, prev);
    prev = err;
  }
}

TEST(Mazya, HoldsOnRandomFields) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    auto u = oracle::random_field<2>(rng, trial % 6, 10);
    EXPECT_TRUE(check_mazya(u).pass);
    auto v = oracle::random_field<3>(rng, trial % 4, 5);
    EXPECT_TRUE(check_mazya(v).pass);
  }
}

TEST(Mazya, MultibumpPasses) {
  FixtureParams p;
  p.level = 5;
  p.count = 3;
  p.spacing = 2.0;
  EXPECT_TRUE(check_mazya(multibump<2>(p)).pass);
}

TEST(Mazya, ZeroFunctionIsRejected) {
  GridFunction<2> z(3, Box<2>{{0, 0}, {2, 2}});
  EXPECT_EQ(error_code_of([&] { check_mazya(z); }), ErrorCode::ZeroFunction);
  EXPECT_EQ(error_code_of([&] { check_hardy(z); }), ErrorCode::ZeroFunction);
  EXPECT_EQ(error_code_of([&] { check_layer_bound(z); }), ErrorCode::ZeroFunction);
}

TEST(Hardy, CenteredMollifiedBallIsNearlySharp) {
  FixtureParams p;
  p.level = 9;
  p.eps = 1.0 / 16;
  auto r = check_hardy(mollified_ball<2>(p));
  EXPECT_TRUE(r.pass);
  const double ratio = r.lhs / r.rhs;
  EXPECT_GE(ratio, 0.97);
  EXPECT_LE(ratio, 1.01);
}

TEST(Hardy, OffCenterBallHasSlack) {
  FixtureParams p;
  p.level = 8;
  p.eps = 1.0 / 16;
  p.center = {0.5, 0.25};
  auto r = check_hardy(mollified_ball<2>(p));
  EXPECT_TRUE(r.pass);
  EXPECT_LT(r.lhs / r.rhs, 0.95);
}

TEST(Hardy, HoldsOnRandomFields) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 50; ++trial) {
    auto u = oracle::random_field<2>(rng, trial % 6, 10);
    EXPECT_TRUE(check_hardy(u).pass) << trial;
  }
}

TEST(ChainRule, HoldsForLipschitzMaps) {
  std::mt19937_64 rng(23);
  ScalarMap tanh_map{[](double s) { return std::tanh(s); }, [](double s) { return 1.0 / (std::cosh(s) * std::cosh(s)); }};
  ScalarMap clip{[](double s) { return std::clamp(s, -0.5, 0.5); },
                 [](double s) { return std::abs(s) < 0.5 ? 1.0 : 0.0; }};
  for (int trial = 0; trial < 40; ++trial) {
    auto u = oracle::random_field<2>(rng, 3, 8);
    EXPECT_TRUE(check_chain_rule(u, tanh_map).pass);
    EXPECT_TRUE(check_chain_rule(u, clip).pass);
  }
}

TEST(ChainRule, NonvanishingMapIsRejected) {
  auto u = unit_bump<2>(3, 1.0);
  ScalarMap shift{[](double s) { return s + 1.0; }, [](double) { return 1.0; }};
  EXPECT_EQ(error_code_of([&] { check_chain_rule(u, shift); }), ErrorCode::SupportViolation);
}

TEST(LayerBound, BandRangeCoversThreeBands) {
  // N = 2: band j covers (2^{j-1}, 2^{j+2}]
  EXPECT_EQ(band_range<2>(1.0), (std::pair<long, long>{-2, 0}));
  EXPECT_EQ(band_range<2>(3.0), (std::pair<long, long>{0, 2}));
  EXPECT_EQ(band_range<2>(-4.0), (std::pair<long, long>{0, 2}));
  // N = 3: band j covers (4^{j-1}, 4^{j+2}]
  EXPECT_EQ(band_range<3>(1.0), (std::pair<long, long>{-2, 0}));
  EXPECT_EQ(band_range<3>(5.0), (std::pair<long, long>{0, 2}));
}

TEST(LayerBound, HoldsOnFixturesAndRandomFields) {
  FixtureParams p;
  p.level = 7;
  int active = 0;
  auto r = check_layer_bound(mollified_ball<2>(p), 1e-9, &active);
  EXPECT_TRUE(r.pass);
  EXPECT_GT(active, 0);
  // Each sample lies in exactly three bands, so the sum is at most 3 tv.
  EXPECT_LE(r.lhs, 3.0 * r.rhs / 6.0 + 1e-12);
  std::mt19937_64 rng(24);
  for (int trial = 0; trial < 30; ++trial) {
    auto u = oracle::random_field<2>(rng, 3, 8);
    EXPECT_TRUE(check_layer_bound(u).pass);
  }
}
