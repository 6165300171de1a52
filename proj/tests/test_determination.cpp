#include <gtest/gtest.h>

#include <random>

#include "isr/determination.hpp"
#include "isr/eval.hpp"
#include "isr/pipeline.hpp"

using namespace isr;

namespace {

std::vector<CandidateSchema> empty_phi(std::size_t n) {
  std::vector<CandidateSchema> phi(n);
  for (std::size_t t = 0; t < n; ++t) phi[t].time_index = t;
  return phi;
}

void propose(std::vector<CandidateSchema>& phi, const RotationPattern& r, TimeIndex a, TimeIndex b) {
  for (TimeIndex t = a; t <= b; ++t) {
    phi[t].rotations.push_back(r);
    std::sort(phi[t].rotations.begin(), phi[t].rotations.end());
  }
}

std::vector<std::uint8_t> runs_to_bits(const std::vector<std::pair<std::uint8_t, std::size_t>>& runs) {
  std::vector<std::uint8_t> bits;
  for (auto [bit, len] : runs) bits.insert(bits.end(), len, bit);
  return bits;
}

BooleanSequence seq_of(std::vector<std::uint8_t> bits) {
  return BooleanSequence(RotationPattern({0, 1}), std::move(bits));
}

// Blocks alternate and tile [0, n).
void expect_partition(const BooleanSequence& s) {
  const auto blocks = s.blocks();
  TimeIndex next = 0;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    EXPECT_EQ(blocks[i].start, next);
    if (i) {
      EXPECT_NE(blocks[i].bit, blocks[i - 1].bit);
    }
    for (TimeIndex t = blocks[i].start; t <= blocks[i].end; ++t) EXPECT_EQ(s.bits[t], blocks[i].bit);
    next = blocks[i].end + 1;
  }
  EXPECT_EQ(next, s.bits.size());
}

}  // namespace

TEST(CollectRepairUnits, CoalescesConsecutiveIndices) {
  auto phi = empty_phi(30);
  propose(phi, RotationPattern({0, 1}), 5, 14);
  propose(phi, RotationPattern({0, 1}), 20, 24);
  const auto units = collect_repair_units(phi);
  ASSERT_EQ(units.size(), 1u);
  EXPECT_EQ(units[0].rotation, RotationPattern({0, 1}));
  EXPECT_EQ(units[0].intervals, (std::vector<TimeInterval>{{5, 14}, {20, 24}}));
  EXPECT_EQ(units[0].size, 15u);
}

TEST(CollectRepairUnits, EmptyInput) {
  EXPECT_TRUE(collect_repair_units({}).empty());
  EXPECT_TRUE(collect_repair_units(empty_phi(10)).empty());
}

TEST(CollectRepairUnits, InterleavedRotationsAreCountedIndependently) {
  auto phi = empty_phi(40);
  const RotationPattern a({0, 1}), b({2, 3});
  std::size_t count_a = 0, count_b = 0;
  for (TimeIndex t = 0; t < 40; ++t) {
    if (t % 3 != 0) propose(phi, a, t, t), ++count_a;
    if (t % 2 == 0) propose(phi, b, t, t), ++count_b;
  }
  const auto units = collect_repair_units(phi);
  ASSERT_EQ(units.size(), 2u);
  EXPECT_EQ(units[0].rotation, a);  // larger first
  EXPECT_EQ(units[0].size, count_a);
  EXPECT_EQ(units[1].size, count_b);
  for (const auto& u : units) {
    std::size_t total = 0;
    for (const auto& iv : u.intervals) total += iv.length();
    EXPECT_EQ(total, u.size);
  }
}

TEST(CollectRepairUnits, TiesFollowRotationOrder) {
  auto phi = empty_phi(20);
  propose(phi, RotationPattern({2, 3}), 0, 4);
  propose(phi, RotationPattern({0, 1}), 10, 14);
  const auto units = collect_repair_units(phi);
  ASSERT_EQ(units.size(), 2u);
  EXPECT_EQ(units[0].rotation, RotationPattern({0, 1}));
}

TEST(CollectRepairUnits, SkipsOversized) {
  auto phi = empty_phi(10);
  propose(phi, RotationPattern({0, 1}), 0, 9);
  for (auto& s : phi) s.oversized = true;
  EXPECT_TRUE(collect_repair_units(phi).empty());
}

TEST(BuildBooleanSequence, AbsentRotationIsAllZero) {
  auto phi = empty_phi(50);
  propose(phi, RotationPattern({2, 3}), 10, 20);
  const auto s = build_boolean_sequence(phi, RotationPattern({0, 1}), ClaimMap(50, 4), 50);
  EXPECT_EQ(s.bits, std::vector<std::uint8_t>(50, 0));
}

TEST(BuildBooleanSequence, SetsProposedIndices) {
  auto phi = empty_phi(300);
  propose(phi, RotationPattern({0, 1}), 100, 199);
  const auto s = build_boolean_sequence(phi, RotationPattern({0, 1}), ClaimMap(300, 2), 300);
  for (TimeIndex t = 0; t < 300; ++t) EXPECT_EQ(s.bits[t], t >= 100 && t <= 199);
  EXPECT_EQ(s.blocks().size(), 3u);
}

TEST(BuildBooleanSequence, ClaimedDimensionClearsBit) {
  auto phi = empty_phi(10);
  propose(phi, RotationPattern({0, 1}), 0, 9);
  ClaimMap claims(10, 3);
  claims.claim(4, RotationPattern({1, 2}));
  const auto s = build_boolean_sequence(phi, RotationPattern({0, 1}), claims, 10);
  EXPECT_EQ(s.bits[4], 0);
  EXPECT_EQ(s.bits[3], 1);
  EXPECT_EQ(s.bits[5], 1);
}

TEST(MergeBlocks, AbsorbsShortGapBetweenOnes) {
  DeterminationConfig cfg;
  cfg.theta_tau = 0.2;
  const auto merged = merge_blocks(seq_of(runs_to_bits({{1, 50}, {0, 2}, {1, 60}})), cfg);
  const auto blocks = merged.blocks();
  ASSERT_EQ(blocks.size(), 1u);
  EXPECT_EQ(blocks[0].bit, 1);
  EXPECT_EQ(blocks[0].length(), 112u);
}

TEST(MergeBlocks, KeepsRealInconsistency) {
  DeterminationConfig cfg;
  cfg.theta_tau = 0.2;
  const auto bits = runs_to_bits({{0, 50}, {1, 40}, {0, 60}});
  const auto merged = merge_blocks(seq_of(bits), cfg);
  EXPECT_EQ(merged.bits, bits);
  EXPECT_EQ(merged.blocks().size(), 3u);
}

TEST(MergeBlocks, DropsShortSpuriousOnes) {
  DeterminationConfig cfg;
  const auto merged = merge_blocks(seq_of(runs_to_bits({{0, 100}, {1, 3}, {0, 100}})), cfg);
  EXPECT_EQ(merged.blocks().size(), 1u);
  EXPECT_EQ(merged.blocks()[0].bit, 0);
}

TEST(MergeBlocks, BoundaryBlocksAreNeverMiddles) {
  DeterminationConfig cfg;
  const auto bits = runs_to_bits({{1, 2}, {0, 100}});
  EXPECT_EQ(merge_blocks(seq_of(bits), cfg).bits, bits);
}

TEST(MergeBlocks, IdempotentAndPartitionOnRandomBlockLists) {
  std::mt19937_64 rng(42);
  DeterminationConfig cfg;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::pair<std::uint8_t, std::size_t>> runs;
    const int count = std::uniform_int_distribution<int>(1, 12)(rng);
    std::uint8_t bit = std::uniform_int_distribution<int>(0, 1)(rng);
    for (int i = 0; i < count; ++i) {
      runs.emplace_back(bit, std::uniform_int_distribution<std::size_t>(1, 60)(rng));
      bit ^= 1;
    }
    cfg.theta_tau = std::uniform_real_distribution<double>(0.05, 1.0)(rng);
    cfg.len2 = std::uniform_int_distribution<std::size_t>(1, 30)(rng);
    const auto once = merge_blocks(seq_of(runs_to_bits(runs)), cfg);
    expect_partition(once);
    const auto twice = merge_blocks(once, cfg);
    EXPECT_EQ(twice.bits, once.bits);
  }
}

TEST(ExtractIntervals, LengthThresholdIsInclusive) {
  DeterminationConfig cfg;
  cfg.len2 = 10;
  EXPECT_TRUE(extract_intervals(seq_of(std::vector<std::uint8_t>(40, 0)), cfg).empty());
  const auto at = extract_intervals(seq_of(runs_to_bits({{0, 5}, {1, 10}, {0, 5}})), cfg);
  EXPECT_EQ(at, (std::vector<TimeInterval>{{5, 14}}));
  EXPECT_TRUE(extract_intervals(seq_of(runs_to_bits({{0, 5}, {1, 9}, {0, 5}})), cfg).empty());
}

TEST(DetermineRepairs, CleanPhiLeavesSeriesUnchanged) {
  const auto s = synthesize_separated(500, 3, 10.0, 1);
  const auto r = determine_repairs(empty_phi(500), s, DeterminationConfig{});
  EXPECT_EQ(r.repaired, s);
  EXPECT_TRUE(r.report.instances.empty());
  EXPECT_TRUE(r.report.repairs.empty());
}

TEST(DetermineRepairs, RecoversTwoInjectedInstances) {
  const auto clean = synthesize_separated(3000, 6, 10.0, 21);
  auto dirty = clean;
  // corruption rotations; the expected repairs are their inverses
  const RotationPattern c1({0, 1}), c2({2, 3, 4});
  apply_rotation_in_place(dirty, c1, {1000, 1199});
  apply_rotation_in_place(dirty, c2, {1500, 1799});
  const auto phi = run_pipeline(dirty, PipelineConfig{}).schemas;
  const auto r = determine_repairs(phi, dirty, DeterminationConfig{});
  ASSERT_EQ(r.report.instances.size(), 2u);
  EXPECT_GE(interval_jaccard(r.report.instances[0].interval, {1000, 1199}), 0.98);
  EXPECT_GE(interval_jaccard(r.report.instances[1].interval, {1500, 1799}), 0.98);
  EXPECT_EQ(r.report.instances[0].rotations, std::vector<RotationPattern>{c1.inverse()});
  EXPECT_EQ(r.report.instances[1].rotations, std::vector<RotationPattern>{c2.inverse()});
  EXPECT_EQ(r.repaired, clean);
}

TEST(DetermineRepairs, FiltersIsolatedSpuriousProposals) {
  const auto s = synthesize_separated(1000, 2, 10.0, 3);
  auto phi = empty_phi(1000);
  for (TimeIndex t : {100u, 400u, 777u}) propose(phi, RotationPattern({0, 1}), t, t);
  DeterminationConfig cfg;
  cfg.len1 = 10;
  const auto r = determine_repairs(phi, s, cfg);
  EXPECT_TRUE(r.report.instances.empty());
  EXPECT_EQ(r.repaired, s);
}

TEST(DetermineRepairs, ClaimsAreExclusive) {
  const auto s = synthesize_separated(400, 3, 10.0, 4);
  auto phi = empty_phi(400);
  propose(phi, RotationPattern({0, 1}), 50, 199);
  // conflicting proposal sharing dim 1, overlapping in time
  for (TimeIndex t = 150; t <= 260; ++t) {
    phi[t].rotations.clear();
    phi[t].rotations.push_back(RotationPattern({1, 2}));
  }
  const auto r = determine_repairs(phi, s, DeterminationConfig{});
  std::vector<std::vector<int>> writes(400, std::vector<int>(3, 0));
  for (const auto& rep : r.report.repairs)
    for (TimeIndex t = rep.interval.start; t <= rep.interval.end; ++t)
      for (DimIndex d : rep.rotation.cycle()) ++writes[t][d];
  for (const auto& row : writes)
    for (int w : row) EXPECT_LE(w, 1);
  EXPECT_FALSE(r.report.repairs.empty());
}

TEST(DetermineRepairs, OverlappingDisjointRotationsFormOneInstance) {
  const auto s = synthesize_separated(400, 4, 10.0, 5);
  auto phi = empty_phi(400);
  propose(phi, RotationPattern({0, 1}), 100, 199);
  propose(phi, RotationPattern({2, 3}), 150, 249);
  const auto r = determine_repairs(phi, s, DeterminationConfig{});
  ASSERT_EQ(r.report.instances.size(), 1u);
  EXPECT_EQ(r.report.instances[0].interval, (TimeInterval{100, 249}));
  EXPECT_EQ(r.report.instances[0].rotations.size(), 2u);
}

namespace {

std::vector<CandidateSchema> random_phi(std::mt19937_64& rng, const std::vector<RotationPattern>& rots) {
  auto phi = empty_phi(2000);
  for (int k = 0; k < 12; ++k) {
    const TimeIndex a = std::uniform_int_distribution<TimeIndex>(0, 1900)(rng);
    const TimeIndex len = std::uniform_int_distribution<TimeIndex>(1, 60)(rng);
    const auto& r = rots[std::uniform_int_distribution<std::size_t>(0, rots.size() - 1)(rng)];
    for (TimeIndex t = a; t < a + len; ++t) {
      bool clash = false;
      for (const auto& x : phi[t].rotations) clash |= !x.disjoint_from(r) && x != r;
      if (!clash && !std::binary_search(phi[t].rotations.begin(), phi[t].rotations.end(), r))
        propose(phi, r, t, t);
    }
  }
  return phi;
}

}  // namespace

TEST(DetermineRepairs, RaisingLen1NeverAddsRepairs) {
  std::mt19937_64 rng(77);
  const auto s = synthesize_separated(2000, 4, 10.0, 6);
  const std::vector<RotationPattern> rots{RotationPattern({0, 1}), RotationPattern({2, 3}),
                                          RotationPattern({1, 2, 3})};
  for (int trial = 0; trial < 20; ++trial) {
    const auto phi = random_phi(rng, rots);
    std::size_t prev = SIZE_MAX;
    for (std::size_t len = 1; len <= 200; len += 7) {
      DeterminationConfig c;
      c.len1 = len;
      const auto n = determine_repairs(phi, s, c).report.repairs.size();
      EXPECT_LE(n, prev);
      prev = n;
    }
  }
}

TEST(DetermineRepairs, RaisingThresholdsNeverAddsInstancesForOneRotation) {
  std::mt19937_64 rng(78);
  const auto s = synthesize_separated(2000, 2, 10.0, 6);
  for (int trial = 0; trial < 20; ++trial) {
    const auto phi = random_phi(rng, {RotationPattern({0, 1})});
    std::size_t prev1 = SIZE_MAX, prev2 = SIZE_MAX;
    for (std::size_t len = 1; len <= 60; len += 3) {
      DeterminationConfig c1;
      c1.len1 = len;
      DeterminationConfig c2;
      c2.len2 = len;
      const auto n1 = determine_repairs(phi, s, c1).report.instances.size();
      const auto n2 = determine_repairs(phi, s, c2).report.instances.size();
      EXPECT_LE(n1, prev1);
      EXPECT_LE(n2, prev2);
      prev1 = n1;
      prev2 = n2;
    }
  }
}

// A small overlapping repair bridges two instances into one; filtering it out
// with a larger len1 leaves them separate.
TEST(DetermineRepairs, OverlapAssemblyCanJoinInstances) {
  const auto s = synthesize_separated(400, 4, 10.0, 1);
  auto phi = empty_phi(400);
  propose(phi, RotationPattern({0, 1}), 0, 99);
  propose(phi, RotationPattern({0, 1}), 150, 249);
  propose(phi, RotationPattern({2, 3}), 90, 160);
  DeterminationConfig low, high;
  low.len1 = 10;
  high.len1 = 80;
  EXPECT_EQ(determine_repairs(phi, s, low).report.instances.size(), 1u);
  EXPECT_EQ(determine_repairs(phi, s, high).report.instances.size(), 2u);
  EXPECT_LT(determine_repairs(phi, s, high).report.repairs.size(),
            determine_repairs(phi, s, low).report.repairs.size());
}
