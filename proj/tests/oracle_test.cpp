#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "dirtrunc/oracle.hpp"
#include "test_util.hpp"

namespace dirtrunc {
namespace {

ObservationModel two_term_model() {
  return ObservationModel({TruncatedCounts({0}, {0, 2, 0}), TruncatedCounts({1}, {1, 0, 1})});
}

// Brute-force count of triangles in a side-h triangular lattice: upward
// cells are indexed by i + j <= h - 1, downward cells by i + j <= h - 2.
std::size_t triangle_cells(std::size_t h) {
  std::size_t up = 0, down = 0;
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < h; ++j) {
      if (i + j + 1 <= h) ++up;
      if (i + j + 2 <= h) ++down;
    }
  return up + down;
}

TEST(BuildGrid, SegmentMidpoints) {
  const auto g = build_grid(2, 4);
  std::vector<double> first;
  for (const auto& p : g.points) first.push_back(p[0]);
  std::sort(first.begin(), first.end());
  ASSERT_EQ(first.size(), 4u);
  const double expect[] = {0.125, 0.375, 0.625, 0.875};
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(first[k], expect[k], 1e-15);
  EXPECT_DOUBLE_EQ(g.weight, 0.25);
}

TEST(BuildGrid, TriangleCountMatchesLattice) {
  for (std::size_t h : {1u, 2u, 5u, 8u, 33u}) {
    const auto g = build_grid(3, h);
    EXPECT_EQ(g.points.size(), triangle_cells(h));
    EXPECT_EQ(g.points.size(), h * h);
  }
  EXPECT_EQ(build_grid(4, 6).points.size(), 216u);
}

TEST(BuildGrid, PointsAreInteriorAndDistinct) {
  for (std::size_t n : {2u, 3u, 4u}) {
    const std::size_t h = 12;
    const auto g = build_grid(n, h);
    std::set<std::vector<double>> seen;
    for (const auto& p : g.points) {
      double s = 0.0;
      for (double c : p.coords()) {
        EXPECT_GE(c, 1.0 / (2.0 * static_cast<double>(h * n)));
        s += c;
      }
      EXPECT_NEAR(s, 1.0, kSimplexTolerance);
      seen.insert(p.vector());
    }
    EXPECT_EQ(seen.size(), g.points.size());
  }
}

TEST(BuildGrid, WeightsCoverSimplexVolume) {
  for (std::size_t n : {2u, 3u, 4u}) {
    const auto g = build_grid(n, 10);
    double fact = 1.0;
    for (std::size_t k = 2; k < n; ++k) fact *= static_cast<double>(k);
    EXPECT_NEAR(g.weight * static_cast<double>(g.points.size()), 1.0 / fact, 1e-12);
  }
}

TEST(BuildGrid, RejectsLargeDimension) {
  EXPECT_THROW(build_grid(5, 8), std::invalid_argument);
  EXPECT_THROW(build_grid(1, 8), std::invalid_argument);
  EXPECT_THROW(grid_posterior(DirichletParams({1, 1, 1}), ObservationModel({TruncatedCounts({}, {0, 0, 0})}), 4),
               std::invalid_argument);
}

TEST(GridPosterior, DirichletDensityIntegratesToOne) {
  const DirichletParams alpha({2, 3, 1.5});
  const auto g = build_grid(3, 128);
  double total = 0.0;
  for (const auto& p : g.points) total += g.weight * std::exp(dirichlet_log_density(p, alpha));
  EXPECT_NEAR(total, 1.0, 1e-3);
}

TEST(GridPosterior, NormalizesByConstruction) {
  const auto g = grid_posterior(DirichletParams({2, 2, 2}), two_term_model(), 64);
  double s = 0.0;
  for (std::size_t k = 0; k < g.grid.points.size(); ++k) s += g.mass(k);
  EXPECT_NEAR(s, 1.0, 1e-12);
  double m = 0.0;
  for (double v : g.mean) {
    EXPECT_GT(v, 0.0);
    m += v;
  }
  EXPECT_NEAR(m, 1.0, 1e-6);
}

TEST(GridPosterior, SymmetricPrior) {
  const auto g = grid_posterior(DirichletParams({2, 2, 2}), ObservationModel({TruncatedCounts({}, {0, 0, 0})}), 128);
  for (double v : g.mean) EXPECT_NEAR(v, 1.0 / 3, 2e-3);
}

TEST(GridPosterior, ConjugateMoments) {
  const DirichletParams alpha({2, 2, 2});
  const CountVector m({0, 2, 0});
  const auto g = grid_posterior(alpha, ObservationModel({TruncatedCounts({}, m.vector())}), 128);
  const auto post = conjugate_posterior(alpha, m);
  const auto mean = post.mean(), var = post.variance();
  EXPECT_NEAR(mean[0], 0.25, 1e-15);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(g.mean[i], mean[i], 2e-3);
    EXPECT_NEAR(g.variance[i], var[i], 2e-3);
  }
}

TEST(GridPosterior, PriorNormalizerMatchesClosedForm) {
  for (const auto& a : {std::vector<double>{2, 2, 2}, std::vector<double>{1.5, 3, 2.5}}) {
    const DirichletParams alpha(a);
    const auto g = grid_posterior(alpha, ObservationModel({TruncatedCounts({}, {0, 0, 0})}), 128);
    const double closed = -dirichlet_log_normalizer(alpha);
    EXPECT_LT(std::abs(g.log_normalizer - closed) / std::abs(closed), 1e-3);
  }
}

TEST(GridPosterior, FourDimensionalConjugateMoments) {
  const DirichletParams alpha({2, 3, 2, 1.5});
  const CountVector m({1, 0, 2, 0});
  const auto g = grid_posterior(alpha, ObservationModel({TruncatedCounts({}, m.vector())}), 32);
  const auto mean = conjugate_posterior(alpha, m).mean();
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(g.mean[i], mean[i], 2e-3);
}

TEST(GridPosterior, RefinementConverges) {
  const DirichletParams alpha({2, 2, 2});
  const auto model = two_term_model();
  auto change = [&](std::size_t h) {
    const auto a = grid_posterior(alpha, model, h);
    const auto b = grid_posterior(alpha, model, 2 * h);
    double d = 0.0;
    for (std::size_t i = 0; i < 3; ++i) d = std::max(d, std::abs(a.mean[i] - b.mean[i]));
    return d;
  };
  const double c32 = change(32), c64 = change(64), c128 = change(128);
  EXPECT_GT(c32, c64);
  EXPECT_GT(c64, c128);
  EXPECT_LT(c128, 1e-3);
}

TEST(CompareMoments, SelfComparisonIsZero) {
  const auto g = grid_posterior(DirichletParams({2, 2, 2}), two_term_model(), 64);
  const auto r = compare_moments(g, g);
  EXPECT_TRUE(r.pass);
  for (double d : r.mean_deviation) EXPECT_EQ(d, 0.0);
  for (double d : r.var_deviation) EXPECT_EQ(d, 0.0);
}

TEST(CompareMoments, ExactConjugateSamplerAgreesWithGrid) {
  const DirichletParams alpha({2, 2, 2});
  const CountVector m({0, 2, 0});
  const auto g = grid_posterior(alpha, ObservationModel({TruncatedCounts({}, m.vector())}), 128);
  const auto post = conjugate_posterior(alpha, m);
  RandomSource rng(91);
  std::vector<ChainTrace> chains;
  for (int j = 0; j < 10; ++j) {
    ChainTrace c(3);
    for (int t = 0; t < 20000; ++t) c.append(sample_dirichlet(post, rng), 0.0);
    chains.push_back(std::move(c));
  }
  // Grid bias is ~1e-5, far below 3 standard errors at this sample size.
  const auto r = compare_moments(g, ChainEnsemble(chains), 20000, {0.0, 0.0, 3.0});
  EXPECT_TRUE(r.pass);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_GT(r.mean_se[i], 0.0);

  const auto single = compare_moments(g, chains[0], 20000, {0.0, 0.0, 3.0});
  EXPECT_TRUE(single.pass);
}

TEST(CompareMoments, DetectsWrongTarget) {
  const DirichletParams alpha({2, 2, 2});
  const auto g = grid_posterior(alpha, two_term_model(), 64);
  RandomSource rng(92);
  std::vector<ChainTrace> chains;
  for (int j = 0; j < 5; ++j) {
    ChainTrace c(3);
    for (int t = 0; t < 4000; ++t) c.append(sample_dirichlet(DirichletParams({4, 2, 2}), rng), 0.0);
    chains.push_back(std::move(c));
  }
  EXPECT_FALSE(compare_moments(g, ChainEnsemble(chains), 4000).pass);
}

}  // namespace
}  // namespace dirtrunc
