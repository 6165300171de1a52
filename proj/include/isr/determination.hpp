#pragma once

// Final repair determination: aggregate candidate schemas into per-rotation
// repair units, locate each rotation's inconsistent intervals on a boolean
// sequence whose runs live in a disjoint-set forest, and apply the accepted
// rotations to the original series.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "isr/core.hpp"
#include "isr/pipeline.hpp"

namespace isr {

struct DeterminationConfig {
  std::size_t len1 = 10;    // min total support of a repair unit, in points
  std::size_t len2 = 10;    // min length of an accepted interval
  double theta_tau = 0.2;   // merge when tau < theta_tau

  void validate() const {
    if (len1 < 1 || len2 < 1) throw StructuralError("len1 and len2 must be >= 1");
    if (!(theta_tau > 0.0)) throw StructuralError("theta_tau must be positive");
  }
};

struct RepairUnit {
  RotationPattern rotation;
  std::vector<TimeInterval> intervals;  // sorted, non-overlapping
  std::size_t size = 0;                 // total points across intervals
};

/// Union-find over positions [0, n). Each root keeps the closed range of the
/// run it represents and that run's bit.
class DisjointRuns {
 public:
  struct Run {
    TimeIndex start;
    TimeIndex end;
    std::uint8_t bit;
    std::size_t length() const { return end - start + 1; }
  };

  DisjointRuns() = default;
  explicit DisjointRuns(std::span<const std::uint8_t> bits)
      : parent_(bits.size()), rank_(bits.size(), 0), runs_(bits.size()) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
    for (std::size_t i = 0; i < bits.size(); ++i) runs_[i] = {i, i, bits[i]};
    for (std::size_t i = 1; i < bits.size(); ++i)
      if (bits[i] == bits[i - 1]) unite(i - 1, i);
  }

  std::size_t size() const { return parent_.size(); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  std::size_t find(std::size_t x) const {
    while (parent_[x] != x) x = parent_[x];
    return x;
  }

  /// Joins two adjacent runs; the merged run takes `bit`.
  std::size_t unite(std::size_t a, std::size_t b, std::uint8_t bit) {
    a = find(a);
    b = find(b);
    if (a == b) {
      runs_[a].bit = bit;
      return a;
    }
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
    runs_[a].start = std::min(runs_[a].start, runs_[b].start);
    runs_[a].end = std::max(runs_[a].end, runs_[b].end);
    runs_[a].bit = bit;
    return a;
  }

  std::size_t unite(std::size_t a, std::size_t b) { return unite(a, b, runs_[find(a)].bit); }

  const Run& run_of(std::size_t x) const { return runs_[find(x)]; }

  /// Runs in time order.
  std::vector<Run> runs() const {
    std::vector<Run> out;
    for (std::size_t i = 0; i < size();) {
      const Run& r = run_of(i);
      out.push_back(r);
      i = r.end + 1;
    }
    return out;
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::uint8_t> rank_;
  std::vector<Run> runs_;  // valid at roots only
};

/// Per-rotation 0/1 indicator over the time axis, with its runs.
struct BooleanSequence {
  RotationPattern rotation;
  std::vector<std::uint8_t> bits;
  DisjointRuns runs;

  BooleanSequence() = default;
  BooleanSequence(RotationPattern r, std::vector<std::uint8_t> b)
      : rotation(std::move(r)), bits(std::move(b)), runs(bits) {}

  std::vector<DisjointRuns::Run> blocks() const { return runs.runs(); }
};

/// Which (time, dimension) cells have already been rewritten by an accepted
/// repair.
class ClaimMap {
 public:
  ClaimMap() = default;
  ClaimMap(std::size_t length, std::size_t dims) : dims_(dims), claimed_(length * dims, 0) {}

  bool claimed(TimeIndex t, DimIndex d) const { return claimed_[t * dims_ + d] != 0; }
  bool any_claimed(TimeIndex t, const RotationPattern& r) const {
    for (DimIndex d : r.cycle())
      if (claimed(t, d)) return true;
    return false;
  }
  void claim(TimeIndex t, const RotationPattern& r) {
    for (DimIndex d : r.cycle()) claimed_[t * dims_ + d] = 1;
  }

 private:
  std::size_t dims_ = 0;
  std::vector<std::uint8_t> claimed_;
};

/// One unit per distinct rotation, largest support first.
inline std::vector<RepairUnit> collect_repair_units(std::span<const CandidateSchema> phi) {
  std::map<RotationPattern, RepairUnit> units;
  for (const auto& schema : phi) {
    if (schema.oversized) continue;
    for (const auto& r : schema.rotations) {
      auto [it, inserted] = units.try_emplace(r);
      RepairUnit& unit = it->second;
      if (inserted) unit.rotation = r;
      const TimeIndex t = schema.time_index;
      if (!unit.intervals.empty() && unit.intervals.back().end + 1 == t)
        unit.intervals.back().end = t;
      else
        unit.intervals.push_back({t, t});
      ++unit.size;
    }
  }
  std::vector<RepairUnit> out;
  out.reserve(units.size());
  for (auto& [r, unit] : units) out.push_back(std::move(unit));
  std::stable_sort(out.begin(), out.end(),
                   [](const RepairUnit& a, const RepairUnit& b) { return a.size > b.size; });
  return out;
}

/// Bit k is set when schema k proposes `rotation` and none of its dimensions
/// was already claimed at k.
inline BooleanSequence build_boolean_sequence(std::span<const CandidateSchema> phi,
                                              const RotationPattern& rotation,
                                              const ClaimMap& claims, std::size_t length) {
  std::vector<std::uint8_t> bits(length, 0);
  for (const auto& schema : phi) {
    if (schema.oversized || schema.time_index >= length) continue;
    const bool proposed =
        std::binary_search(schema.rotations.begin(), schema.rotations.end(), rotation);
    if (proposed && !claims.any_claimed(schema.time_index, rotation)) bits[schema.time_index] = 1;
  }
  return BooleanSequence(rotation, std::move(bits));
}

/// Absorbs short middle runs into their equal-valued neighbours while
/// tau = |middle| / (|left| + |right|) is below theta_tau, until a full pass
/// makes no change. The first and last runs are never a middle. A 1-run that
/// already reaches len2 is an established interval and is not demoted.
inline BooleanSequence merge_blocks(BooleanSequence seq, const DeterminationConfig& config) {
  for (bool changed = true; changed;) {
    changed = false;
    auto blocks = seq.blocks();
    for (std::size_t i = 0; i + 2 < blocks.size();) {
      const auto& left = blocks[i];
      const auto& mid = blocks[i + 1];
      const auto& right = blocks[i + 2];
      const double tau = static_cast<double>(mid.length()) /
                         static_cast<double>(left.length() + right.length());
      const bool protected_run = mid.bit == 1 && mid.length() >= config.len2;
      if (left.bit == right.bit && tau < config.theta_tau && !protected_run) {
        seq.runs.unite(left.start, mid.start, left.bit);
        seq.runs.unite(left.start, right.start, left.bit);
        for (TimeIndex t = mid.start; t <= mid.end; ++t) seq.bits[t] = left.bit;
        blocks[i] = seq.runs.run_of(left.start);
        blocks.erase(blocks.begin() + static_cast<std::ptrdiff_t>(i) + 1,
                     blocks.begin() + static_cast<std::ptrdiff_t>(i) + 3);
        changed = true;
      } else {
        ++i;
      }
    }
  }
  return seq;
}

/// Every 1-run at least len2 long.
inline std::vector<TimeInterval> extract_intervals(const BooleanSequence& seq,
                                                   const DeterminationConfig& config) {
  std::vector<TimeInterval> out;
  for (const auto& b : seq.blocks())
    if (b.bit == 1 && b.length() >= config.len2) out.push_back({b.start, b.end});
  return out;
}

/// Groups applied repairs whose intervals overlap into instances.
inline std::vector<InconsistencyInstance> assemble_instances(std::vector<AppliedRepair> repairs) {
  std::sort(repairs.begin(), repairs.end(), [](const AppliedRepair& a, const AppliedRepair& b) {
    return std::tie(a.interval, a.rotation) < std::tie(b.interval, b.rotation);
  });
  std::vector<InconsistencyInstance> out;
  for (const auto& rep : repairs) {
    if (!out.empty() && out.back().interval.end >= rep.interval.start) {
      auto& inst = out.back();
      inst.interval.end = std::max(inst.interval.end, rep.interval.end);
      if (std::find(inst.rotations.begin(), inst.rotations.end(), rep.rotation) ==
          inst.rotations.end())
        inst.rotations.push_back(rep.rotation);
    } else {
      out.push_back({{rep.rotation}, rep.interval});
    }
  }
  for (auto& inst : out) std::sort(inst.rotations.begin(), inst.rotations.end());
  return out;
}

struct DeterminationResult {
  MultiSeries repaired;
  RepairReport report;
};

/// Evaluates each repair unit (largest first) and re-applies the accepted
/// rotations to `original`, so candidates that are rejected leave no trace.
inline DeterminationResult determine_repairs(std::span<const CandidateSchema> phi,
                                             const MultiSeries& original,
                                             const DeterminationConfig& config) {
  config.validate();
  DeterminationResult out{original, {}};
  ClaimMap claims(original.length(), original.dims());
  for (const auto& unit : collect_repair_units(phi)) {
    if (unit.size < config.len1) break;  // sorted by size
    if (unit.rotation.max_dim() >= original.dims()) continue;
    auto seq = merge_blocks(build_boolean_sequence(phi, unit.rotation, claims, original.length()),
                            config);
    for (const auto& iv : extract_intervals(seq, config)) {
      // merged gaps may cover cells an earlier unit already rewrote; split there
      TimeIndex t = iv.start;
      while (t <= iv.end) {
        while (t <= iv.end && claims.any_claimed(t, unit.rotation)) ++t;
        const TimeIndex begin = t;
        while (t <= iv.end && !claims.any_claimed(t, unit.rotation)) ++t;
        if (t > begin && t - begin >= config.len2) {
          const TimeInterval piece{begin, t - 1};
          apply_rotation_in_place(out.repaired, unit.rotation, piece);
          for (TimeIndex k = piece.start; k <= piece.end; ++k) claims.claim(k, unit.rotation);
          out.report.repairs.push_back({unit.rotation, piece});
        }
      }
    }
  }
  out.report.instances = assemble_instances(out.report.repairs);
  out.report.config_echo = {{"len1", std::to_string(config.len1)},
                            {"len2", std::to_string(config.len2)},
                            {"theta_tau", std::to_string(config.theta_tau)}};
  return out;
}

}  // namespace isr
