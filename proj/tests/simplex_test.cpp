#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "dirtrunc/simplex.hpp"
#include "test_util.hpp"

namespace dirtrunc {
namespace {

TEST(SimplexPoint, RenormalizesWithinTolerance) {
  SimplexPoint p({0.5, 0.5 + 5e-10});
  EXPECT_NEAR(p[0] + p[1], 1.0, 1e-15);
}

TEST(SimplexPoint, RejectsOffSimplex) {
  EXPECT_THROW(SimplexPoint({0.5, 0.6}), std::invalid_argument);
  EXPECT_THROW(SimplexPoint({1.5, -0.5}), std::invalid_argument);
  EXPECT_THROW(SimplexPoint(std::vector<double>{}), std::invalid_argument);
  EXPECT_THROW(SimplexPoint({NAN, 1.0}), std::invalid_argument);
}

TEST(DirichletParams, RejectsNonPositive) {
  EXPECT_THROW(DirichletParams({1.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(DirichletParams({1.0, -2.0}), std::invalid_argument);
}

TEST(CountVector, RejectsNegative) { EXPECT_THROW(CountVector({1, -1}), std::invalid_argument); }

TEST(DirichletLogDensity, UniformOnTwoSimplex) {
  const SimplexPoint p({1.0 / 3, 1.0 / 3, 1.0 / 3});
  EXPECT_NEAR(dirichlet_log_density(p, DirichletParams({1, 1, 1})), std::log(2.0), 1e-14);
}

TEST(DirichletLogDensity, Beta22AtHalf) {
  EXPECT_NEAR(dirichlet_log_density(SimplexPoint({0.5, 0.5}), DirichletParams({2, 2})),
              std::log(1.5), 1e-14);
}

TEST(DirichletLogDensity, MatchesExtendedPrecisionFormula) {
  const std::vector<long double> pi{0.2L, 0.5L, 0.3L};
  const std::vector<long double> a{2.0L, 2.0L, 2.0L};
  long double expect = std::lgamma(6.0L);
  for (std::size_t i = 0; i < 3; ++i) expect += -std::lgamma(a[i]) + (a[i] - 1) * std::log(pi[i]);
  const double got = dirichlet_log_density(SimplexPoint({0.2, 0.5, 0.3}), DirichletParams({2, 2, 2}));
  EXPECT_NEAR(got, static_cast<double>(expect), 1e-13);
}

TEST(DirichletLogDensity, BoundaryPolicy) {
  const SimplexPoint face({0.0, 0.4, 0.6});
  EXPECT_EQ(dirichlet_log_density(face, DirichletParams({2, 2, 2})), kNegInf);
  EXPECT_TRUE(std::isfinite(dirichlet_log_density(face, DirichletParams({1, 2, 2}))));
  EXPECT_THROW(dirichlet_log_density(face, DirichletParams({0.5, 2, 2})), std::domain_error);
  EXPECT_THROW(dirichlet_log_density(face, DirichletParams({2, 2})), std::invalid_argument);
}

TEST(DirichletLogDensity, ExchangeableToTheLastBit) {
  RandomSource rng(11);
  std::uniform_real_distribution<double> u(0.05, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + trial % 9;
    std::vector<double> a(n);
    for (auto& v : a) v = u(rng);
    const DirichletParams alpha(a);
    const SimplexPoint pi = sample_dirichlet(alpha, rng);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> pa(n), pp(n);
    for (std::size_t i = 0; i < n; ++i) {
      pa[i] = a[perm[i]];
      pp[i] = pi[perm[i]];
    }
    // Build the permuted point without renormalizing so coordinates stay bit-identical.
    const double base = dirichlet_log_density(pi, alpha);
    const double permuted = dirichlet_log_density(SimplexPoint(pp), DirichletParams(pa));
    EXPECT_EQ(base, permuted);
  }
}

TEST(SampleDirichlet, ConcentratedMean) {
  RandomSource rng(1);
  const DirichletParams alpha({1e6, 1e6});
  testing::Moments m(2);
  for (int k = 0; k < 10000; ++k) m.add(sample_dirichlet(alpha, rng));
  EXPECT_NEAR(m.mean(0), 0.5, 0.01);
  EXPECT_NEAR(m.mean(1), 0.5, 0.01);
}

TEST(SampleDirichlet, SymmetricMean) {
  RandomSource rng(2);
  const DirichletParams alpha({2, 2, 2});
  testing::Moments m(3);
  for (int k = 0; k < 100000; ++k) m.add(sample_dirichlet(alpha, rng));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(m.mean(i), 1.0 / 3, 0.005);
}

TEST(SampleDirichlet, AsymmetricMeanAndVariance) {
  RandomSource rng(3);
  const DirichletParams alpha({2, 4, 2});
  testing::Moments m(3);
  for (int k = 0; k < 100000; ++k) m.add(sample_dirichlet(alpha, rng));
  const auto mean = alpha.mean();
  const auto var = alpha.variance();
  EXPECT_NEAR(mean[0], 0.25, 1e-15);
  EXPECT_NEAR(mean[1], 0.5, 1e-15);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(m.mean(i), mean[i], 0.005);
    EXPECT_NEAR(m.variance(i), var[i], 0.002);
  }
}

TEST(SampleDirichlet, AlwaysOnSimplexAcrossConcentrations) {
  RandomSource rng(4);
  std::uniform_real_distribution<double> log_a(std::log(0.01), std::log(1e6));
  for (int trial = 0; trial < 5000; ++trial) {
    const std::size_t n = 2 + trial % 19;
    std::vector<double> a(n);
    for (auto& v : a) v = std::exp(log_a(rng));
    const auto p = sample_dirichlet(DirichletParams(a), rng);
    double s = 0.0;
    for (double c : p.coords()) {
      ASSERT_GE(c, 0.0);
      s += c;
    }
    ASSERT_NEAR(s, 1.0, kSimplexTolerance);
  }
}

TEST(SampleDirichlet, TinyConcentrationsStayStrictlyPositiveMostly) {
  RandomSource rng(5);
  const DirichletParams alpha({0.01, 0.01});
  int zeros = 0;
  for (int k = 0; k < 2000; ++k) zeros += sample_dirichlet(alpha, rng).has_zero() ? 1 : 0;
  // Log-space normalization only underflows for extreme log-ratios.
  EXPECT_LT(zeros, 2000);
}

TEST(MultinomialLogLikelihood, Examples) {
  const SimplexPoint pi({0.2, 0.5, 0.3});
  EXPECT_EQ(multinomial_log_likelihood(CountVector({0, 0, 0}), pi), 0.0);
  EXPECT_DOUBLE_EQ(multinomial_log_likelihood(CountVector({0, 2, 0}), pi), 2 * std::log(0.5));
  EXPECT_NEAR(multinomial_log_likelihood(CountVector({1, 1}), SimplexPoint({0.3, 0.7})),
              std::log(0.21), 1e-14);
  EXPECT_EQ(multinomial_log_likelihood(CountVector({1, 1}), SimplexPoint({0.0, 1.0})), kNegInf);
}

TEST(ConjugatePosterior, Examples) {
  EXPECT_EQ(conjugate_posterior(DirichletParams({2, 2, 2}), CountVector({0, 2, 0})),
            DirichletParams({2, 4, 2}));
  EXPECT_EQ(conjugate_posterior(DirichletParams({1, 1}), CountVector({0, 0})), DirichletParams({1, 1}));
  EXPECT_EQ(conjugate_posterior(DirichletParams({0.5, 0.5}), CountVector({3, 1})),
            DirichletParams({3.5, 1.5}));
  EXPECT_THROW(conjugate_posterior(DirichletParams({1, 1}), CountVector({0, 0, 0})),
               std::invalid_argument);
}

TEST(ConjugatePosterior, ZeroCountsIsIdentity) {
  RandomSource rng(6);
  std::uniform_real_distribution<double> u(0.01, 100.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(1 + trial % 12);
    for (auto& v : a) v = u(rng);
    const DirichletParams alpha(a);
    EXPECT_EQ(conjugate_posterior(alpha, CountVector::zeros(a.size())), alpha);
  }
}

}  // namespace
}  // namespace dirtrunc
