#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "tbm/numeric.hpp"

using namespace tbm;

TEST(LogSumExp, MatchesDirectSumAndSurvivesLargeMagnitudes) {
  std::vector<double> xs{std::log(1.0), std::log(2.0), std::log(3.0)};
  EXPECT_NEAR(log_sum_exp(xs), std::log(6.0), 1e-14);
  std::vector<double> big{1000.0, 1000.0};
  EXPECT_NEAR(log_sum_exp(big), 1000.0 + std::log(2.0), 1e-12);
  std::vector<double> none;
  EXPECT_EQ(log_sum_exp(none), -std::numeric_limits<double>::infinity());
}

TEST(LogMeanExp, DuplicatesDoNotChangeTheMean) {
  std::vector<double> one{-3.5};
  std::vector<double> two{-3.5, -3.5};
  EXPECT_DOUBLE_EQ(log_mean_exp(one), -3.5);
  EXPECT_NEAR(log_mean_exp(two), -3.5, 1e-15);
  std::vector<double> mixed{std::log(0.2), std::log(0.4)};
  EXPECT_NEAR(log_mean_exp(mixed), std::log(0.3), 1e-14);
}

TEST(NormalizeLogWeights, SumsToOne) {
  std::vector<double> w{-1000.0, -1001.0, -999.5};
  normalize_log_weights(w);
  double tot = 0.0;
  for (double x : w) tot += x;
  EXPECT_NEAR(tot, 1.0, 1e-14);
  EXPECT_GT(w[2], w[0]);
  EXPECT_GT(w[0], w[1]);
}

TEST(SampleLinear, FrequenciesFollowWeights) {
  Rng rng(7);
  std::vector<double> w{1.0, 3.0, 0.0, 4.0};
  std::vector<int> hits(4, 0);
  const int n = 80000;
  for (int i = 0; i < n; ++i) ++hits[sample_linear(w, rng)];
  EXPECT_EQ(hits[2], 0);
  for (int k : {0, 1, 3}) {
    const double p = w[k] / 8.0;
    const double se = std::sqrt(p * (1 - p) / n);
    EXPECT_NEAR(static_cast<double>(hits[k]) / n, p, 4 * se);
  }
}

TEST(Draws, DirichletIsOnTheSimplexAndGammaIsPositive) {
  Rng rng(3);
  for (double conc : {0.01, 1.0, 50.0}) {
    auto p = dirichlet_draw(6, conc, rng);
    double tot = 0.0;
    for (double x : p) {
      EXPECT_GE(x, 0.0);
      tot += x;
    }
    EXPECT_NEAR(tot, 1.0, 1e-12);
  }
  for (int i = 0; i < 100; ++i) EXPECT_GT(gamma_draw(0.5, 2.0, rng), 0.0);
}

TEST(LogPoisson, MatchesPmf) {
  EXPECT_NEAR(log_poisson(0, 2.0), -2.0, 1e-15);
  EXPECT_NEAR(log_poisson(3, 2.0), std::log(std::exp(-2.0) * 8.0 / 6.0), 1e-13);
  EXPECT_EQ(log_poisson(0, 0.0), 0.0);
  EXPECT_EQ(log_poisson(1, 0.0), -std::numeric_limits<double>::infinity());
}

TEST(Fnv1a, KnownVectors) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a("foobar"), 0x85944171f73967e8ULL);
}
