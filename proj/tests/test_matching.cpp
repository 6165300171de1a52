#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "isr/core.hpp"
#include "isr/matching.hpp"
#include "oracles.hpp"

using namespace isr;

namespace {

std::vector<double> random_weights(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> w(n * n);
  for (auto& x : w) x = u(rng);
  return w;
}

WeightMatrix square(std::size_t n, std::vector<double> w) {
  std::vector<DimIndex> dims(n);
  std::iota(dims.begin(), dims.end(), std::size_t{0});
  return WeightMatrix(std::move(dims), std::move(w));
}

bool is_permutation_of_n(const std::vector<std::size_t>& a) {
  std::vector<char> seen(a.size(), 0);
  for (auto v : a) {
    if (v >= a.size() || seen[v]) return false;
    seen[v] = 1;
  }
  return true;
}

}  // namespace

TEST(Mcmf, PrefersCrossAssignment) {
  const auto m = mcmf_match(WeightMatrix::from_rows({{0.0, 0.9}, {0.8, 0.1}}));
  EXPECT_EQ(m.assignment, (std::vector<std::size_t>{1, 0}));
  EXPECT_NEAR(m.total_weight, 1.7, 1e-12);
}

TEST(Mcmf, PrefersDiagonal) {
  const auto m = mcmf_match(WeightMatrix::from_rows({{0.9, 0.1}, {0.2, 0.8}}));
  EXPECT_EQ(m.assignment, (std::vector<std::size_t>{0, 1}));
  EXPECT_NEAR(m.total_weight, 1.7, 1e-12);
}

TEST(Mcmf, MatchesBruteForceOnRandomMatrices) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 6);
    const auto w = random_weights(n, rng);
    const auto m = mcmf_match(square(n, w));
    ASSERT_TRUE(is_permutation_of_n(m.assignment));
    double recomputed = 0;
    for (std::size_t u = 0; u < n; ++u) recomputed += w[u * n + m.assignment[u]];
    EXPECT_NEAR(recomputed, m.total_weight, 1e-12);
    EXPECT_NEAR(m.total_weight, oracle::brute_force_max_assignment(w, n), 1e-9);
  }
}

TEST(Mcmf, HandlesTinyAndZeroWeights) {
  const auto m = mcmf_match(WeightMatrix::from_rows({{0, 0, 1e-30}, {0, 1e-300, 0}, {0, 0, 0}}));
  EXPECT_TRUE(is_permutation_of_n(m.assignment));
}

TEST(Greedy, CanBeSuboptimal) {
  const std::vector<double> w{0.9, 0.85, 0.8, 0.1};
  const auto g = greedy_match(square(2, w));
  EXPECT_EQ(g.assignment, (std::vector<std::size_t>{0, 1}));
  EXPECT_NEAR(g.total_weight, 1.0, 1e-12);
  EXPECT_NEAR(mcmf_match(square(2, w)).total_weight, oracle::brute_force_max_assignment(w, 2),
              1e-12);
  EXPECT_NEAR(oracle::brute_force_max_assignment(w, 2), 1.65, 1e-12);
}

TEST(Greedy, TiesGoToLowestRowThenColumn) {
  const auto g = greedy_match(WeightMatrix::from_rows({{0.5, 0.5}, {0.5, 0.5}}));
  EXPECT_EQ(g.assignment, (std::vector<std::size_t>{0, 1}));
}

TEST(Greedy, NeverBeatsExact) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 6);
    const auto w = random_weights(n, rng);
    const auto g = greedy_match(square(n, w));
    EXPECT_TRUE(is_permutation_of_n(g.assignment));
    EXPECT_GE(mcmf_match(square(n, w)).total_weight + 1e-12, g.total_weight);
  }
}

TEST(Mcmf, OptimumIsInvariantUnderRelabeling) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 5);
    const auto w = random_weights(n, rng);
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), std::size_t{0});
    std::shuffle(p.begin(), p.end(), rng);
    std::vector<double> relabeled(n * n);
    for (std::size_t u = 0; u < n; ++u)
      for (std::size_t v = 0; v < n; ++v) relabeled[p[u] * n + p[v]] = w[u * n + v];
    EXPECT_NEAR(mcmf_match(square(n, w)).total_weight,
                mcmf_match(square(n, relabeled)).total_weight, 1e-9);
  }
}

TEST(MatchingToMapping, TranslatesLocalToGlobal) {
  Matching m{{1, 2, 5}, {1, 2, 0}, 0.0};
  const auto mapping = matching_to_mapping(m, 7);
  EXPECT_EQ(mapping, (std::vector<std::size_t>{0, 2, 5, 3, 4, 1, 6}));
  const auto r = decompose_permutation(mapping);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0], RotationPattern({1, 2, 5}));
  EXPECT_EQ(matching_to_mapping(m).size(), 6u);
}

TEST(MatchingToMapping, IdentityAssignmentHasNoRotations) {
  Matching m{{3, 4}, {0, 1}, 0.0};
  EXPECT_TRUE(decompose_permutation(matching_to_mapping(m, 5)).empty());
}

TEST(WeightMatrix, RejectsNonSquare) {
  EXPECT_THROW(WeightMatrix::from_rows({{1, 2}, {3}}), StructuralError);
  EXPECT_THROW(WeightMatrix({0, 1}, {1, 2, 3}), StructuralError);
}
