#pragma once

// Evaluation harness: synthetic data, misplacement injection with ground
// truth, interval-level precision/recall scoring and the comparison variants
// (exact / greedy matching, candidate-only, fixed-block modelling).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "isr/behavior.hpp"
#include "isr/core.hpp"
#include "isr/determination.hpp"
#include "isr/matching.hpp"
#include "isr/pipeline.hpp"

namespace isr {

/// Independent Gaussian columns: column d ~ N(means[d], sigmas[d]).
inline MultiSeries synthesize_gaussian(std::size_t length, std::span<const double> means,
                                       std::span<const double> sigmas, std::uint64_t seed) {
  if (means.size() != sigmas.size()) throw StructuralError("means and sigmas differ in size");
  MultiSeries out(length, means.size());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  for (TimeIndex t = 0; t < length; ++t)
    for (DimIndex d = 0; d < means.size(); ++d) out.at(t, d) = means[d] + sigmas[d] * unit(rng);
  return out;
}

/// Evenly spaced means `spacing` sigmas apart, unit variance.
inline MultiSeries synthesize_separated(std::size_t length, std::size_t dims, double spacing,
                                        std::uint64_t seed) {
  std::vector<double> means(dims), sigmas(dims, 1.0);
  for (std::size_t d = 0; d < dims; ++d) means[d] = spacing * static_cast<double>(d);
  return synthesize_gaussian(length, means, sigmas, seed);
}

struct InjectionSpec {
  std::size_t instance_count = 0;
  std::size_t min_length = 50;
  std::size_t max_length = 200;
  std::size_t max_order = 4;  // rotation orders drawn from [2, max_order]
  std::size_t min_dims = 2;   // dims involved per instance drawn from [min_dims, max_dims]
  std::size_t max_dims = 4;
  std::uint64_t seed = 1;
  TimeIndex first_index = 0;  // no injection before this row
  std::size_t min_gap = 0;    // between instances; 0 means max_length
};

struct GroundTruth {
  std::size_t length = 0;
  std::vector<InconsistencyInstance> instances;  // rotations are the repairs
};

struct Injection {
  MultiSeries corrupted;
  GroundTruth truth;
};

namespace detail {

inline bool partitionable(std::size_t k, std::size_t max_order) {
  if (k < 2) return false;
  return max_order >= 3 || k % 2 == 0;
}

/// Splits k into parts in [2, max_order].
template <typename Rng>
std::vector<std::size_t> random_orders(std::size_t k, std::size_t max_order, Rng& rng) {
  std::vector<std::size_t> parts;
  while (k > 0) {
    std::vector<std::size_t> options;
    for (std::size_t o = 2; o <= std::min(max_order, k); ++o)
      if (k - o == 0 || partitionable(k - o, max_order)) options.push_back(o);
    const std::size_t pick =
        options[std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(rng)];
    parts.push_back(pick);
    k -= pick;
  }
  return parts;
}

}  // namespace detail

/// Corrupts the series with non-overlapping misplacement instances. The
/// truth records the rotations that undo each instance.
inline Injection inject(const MultiSeries& series, const InjectionSpec& spec) {
  Injection out{series, {series.length(), {}}};
  if (spec.instance_count == 0) return out;
  const std::size_t dims = series.dims();
  if (spec.min_length < 1 || spec.min_length > spec.max_length)
    throw StructuralError("invalid interval length range");
  if (spec.max_order < 2) throw StructuralError("max_order must be >= 2");
  std::vector<std::size_t> dim_options;
  for (std::size_t k = std::max<std::size_t>(spec.min_dims, 2); k <= std::min(spec.max_dims, dims); ++k)
    if (detail::partitionable(k, spec.max_order)) dim_options.push_back(k);
  if (dim_options.empty()) throw StructuralError("no feasible inconsistent-dimension count");

  std::mt19937_64 rng(spec.seed);
  const std::size_t gap = spec.min_gap ? spec.min_gap : spec.max_length;
  std::vector<std::size_t> lengths(spec.instance_count);
  std::size_t needed = gap * (spec.instance_count - 1);
  for (auto& len : lengths) {
    len = std::uniform_int_distribution<std::size_t>(spec.min_length, spec.max_length)(rng);
    needed += len;
  }
  if (spec.first_index > series.length() || needed > series.length() - spec.first_index)
    throw StructuralError("cannot place " + std::to_string(spec.instance_count) +
                          " non-overlapping intervals in the series");
  const std::size_t slack = series.length() - spec.first_index - needed;
  std::vector<std::size_t> offsets(spec.instance_count);
  for (auto& o : offsets) o = std::uniform_int_distribution<std::size_t>(0, slack)(rng);
  std::sort(offsets.begin(), offsets.end());

  std::vector<DimIndex> pool(dims);
  TimeIndex cursor = spec.first_index;
  for (std::size_t i = 0; i < spec.instance_count; ++i) {
    const TimeInterval interval{cursor + offsets[i], cursor + offsets[i] + lengths[i] - 1};
    cursor += lengths[i] + gap;

    const std::size_t k =
        dim_options[std::uniform_int_distribution<std::size_t>(0, dim_options.size() - 1)(rng)];
    for (std::size_t d = 0; d < dims; ++d) pool[d] = d;
    std::shuffle(pool.begin(), pool.end(), rng);
    InconsistencyInstance truth{{}, interval};
    std::size_t used = 0;
    for (std::size_t order : detail::random_orders(k, spec.max_order, rng)) {
      const RotationPattern corruption(
          std::vector<DimIndex>(pool.begin() + static_cast<std::ptrdiff_t>(used),
                                pool.begin() + static_cast<std::ptrdiff_t>(used + order)));
      used += order;
      apply_rotation_in_place(out.corrupted, corruption, interval);
      truth.rotations.push_back(corruption.inverse());
    }
    std::sort(truth.rotations.begin(), truth.rotations.end());
    out.truth.instances.push_back(std::move(truth));
  }
  return out;
}

/// Applies the truth rotations, which restores the clean series.
template <typename Cell>
BasicMultiSeries<Cell> restore(BasicMultiSeries<Cell> corrupted, const GroundTruth& truth) {
  for (const auto& inst : truth.instances)
    for (const auto& r : inst.rotations) apply_rotation_in_place(corrupted, r, inst.interval);
  return corrupted;
}

struct Scores {
  double p_d = 1.0, r_d = 1.0, p_r = 1.0, r_r = 1.0;
  std::size_t detections = 0;
  std::size_t correct_detections = 0;
  std::size_t true_intervals = 0;
  std::size_t correct_repairs = 0;
  std::vector<std::string> zero_denominator;  // metrics that fell back to the 0/0 rule
};

namespace detail {

/// 0/0 counts as perfect, x/0 as zero.
inline double ratio(std::size_t num, std::size_t den, const char* name,
                    std::vector<std::string>& flags) {
  if (den == 0) {
    flags.emplace_back(name);
    return num == 0 ? 1.0 : 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace detail

/// Matches detections to true instances one-to-one by descending Jaccard.
/// A match needs Jaccard >= jaccard_min; it is a correct repair when the
/// rotation sets are equal.
inline Scores score(std::span<const InconsistencyInstance> detected,
                    std::span<const InconsistencyInstance> truth, double jaccard_min = 0.5) {
  struct Pair {
    double jaccard;
    std::size_t det, tru;
  };
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < detected.size(); ++i)
    for (std::size_t j = 0; j < truth.size(); ++j) {
      const double jac = interval_jaccard(detected[i].interval, truth[j].interval);
      if (jac > 0.0 && jac >= jaccard_min) pairs.push_back({jac, i, j});
    }
  // tie-break on content, not position, so report order does not matter
  std::sort(pairs.begin(), pairs.end(), [&](const Pair& a, const Pair& b) {
    if (a.jaccard != b.jaccard) return a.jaccard > b.jaccard;
    const auto& da = detected[a.det];
    const auto& db = detected[b.det];
    if (da.interval != db.interval) return da.interval < db.interval;
    if (da.rotations != db.rotations) return da.rotations < db.rotations;
    return truth[a.tru].interval < truth[b.tru].interval;
  });
  std::vector<char> det_used(detected.size(), 0), tru_used(truth.size(), 0);
  Scores s;
  s.detections = detected.size();
  s.true_intervals = truth.size();
  for (const auto& p : pairs) {
    if (det_used[p.det] || tru_used[p.tru]) continue;
    det_used[p.det] = tru_used[p.tru] = 1;
    ++s.correct_detections;
    auto a = detected[p.det].rotations;
    auto b = truth[p.tru].rotations;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a == b) ++s.correct_repairs;
  }
  s.p_d = detail::ratio(s.correct_detections, s.detections, "P_d", s.zero_denominator);
  s.r_d = detail::ratio(s.correct_detections, s.true_intervals, "R_d", s.zero_denominator);
  s.p_r = detail::ratio(s.correct_repairs, s.correct_detections, "P_r", s.zero_denominator);
  s.r_r = detail::ratio(s.correct_repairs, s.detections, "R_r", s.zero_denominator);
  return s;
}

inline Scores score(const RepairReport& report, const GroundTruth& truth, double jaccard_min = 0.5) {
  return score(report.instances, truth.instances, jaccard_min);
}

enum class Variant { isr, g_isr, crs, block };

inline std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::isr: return "ISR";
    case Variant::g_isr: return "G-ISR";
    case Variant::crs: return "CRS";
    case Variant::block: return "Block";
  }
  return "?";
}

inline Variant parse_variant(std::string_view name) {
  if (name == "ISR" || name == "isr") return Variant::isr;
  if (name == "G-ISR" || name == "g-isr" || name == "gisr") return Variant::g_isr;
  if (name == "CRS" || name == "crs") return Variant::crs;
  if (name == "Block" || name == "block") return Variant::block;
  throw StructuralError("unknown variant '" + std::string(name) + "'");
}

struct RepairConfig {
  PipelineConfig pipeline;
  DeterminationConfig determination;
  double block_lambda = 1.0;  // Block chunk length is ceil(lambda * sqrt(N))
};

struct VariantResult {
  MultiSeries repaired;
  RepairReport report;
  std::vector<CandidateSchema> candidates;
};

/// Behavior model whose statistics never move; Block uses it for whole-chunk
/// statistics.
class FrozenModel {
 public:
  explicit FrozenModel(SequenceModel m) : model_(std::move(m)) {}
  double membership_probability(double x) const { return model_.membership_probability(x); }
  void accept(double) {}
  const SequenceModel& model() const { return model_; }

 private:
  SequenceModel model_;
};

static_assert(BehaviorModel<FrozenModel>);

namespace detail {

/// Maximal runs of identical, non-empty candidate schemas become instances.
inline RepairReport candidate_runs_report(std::span<const CandidateSchema> phi) {
  RepairReport report;
  std::vector<RotationPattern> current;
  TimeInterval run{};
  auto close = [&] {
    if (current.empty()) return;
    for (const auto& r : current) report.repairs.push_back({r, run});
    report.instances.push_back({std::move(current), run});
    current.clear();
  };
  for (const auto& s : phi) {
    const bool active = !s.oversized && !s.rotations.empty();
    const bool extends = !current.empty() && active && s.rotations == current &&
                         s.time_index == run.end + 1;
    if (extends) {
      run.end = s.time_index;
      continue;
    }
    close();
    if (active) {
      current = s.rotations;
      run = {s.time_index, s.time_index};
    }
  }
  close();
  return report;
}

}  // namespace detail

inline PipelineResult run_blocked_pipeline(const MultiSeries& series, const RepairConfig& config) {
  config.pipeline.validate();
  if (!(config.block_lambda > 0.0)) throw StructuralError("block lambda must be positive");
  const std::size_t n = series.length();
  const auto chunk = static_cast<std::size_t>(
      std::ceil(config.block_lambda * std::sqrt(static_cast<double>(n))));
  PipelineResult out;
  out.candidate = series;
  out.schemas.reserve(n);
  for (TimeIndex begin = 0; begin < n; begin += chunk) {
    const TimeIndex end = std::min(n, begin + chunk);
    ModelConfig mc = config.pipeline.model;
    mc.window_len = std::max<std::size_t>(end - begin, 2);
    std::vector<FrozenModel> models;
    std::vector<double> values(end - begin);
    for (DimIndex d = 0; d < series.dims(); ++d) {
      for (TimeIndex t = begin; t < end; ++t) values[t - begin] = series.at(t, d);
      std::size_t present = 0;
      for (double v : values) present += !is_missing(v);
      if (present >= 2) {
        models.emplace_back(fit(values, mc, d));
      } else {
        // too little data in a trailing chunk: fall back to the whole series
        models.emplace_back(fit(series.column(d), mc, d));
      }
    }
    for (TimeIndex t = begin; t < end; ++t) {
      TupleResult r = process_tuple<FrozenModel>(series, t, std::span<FrozenModel>(models),
                                                 config.pipeline);
      auto dst = out.candidate.row(t);
      std::copy(r.candidate.begin(), r.candidate.end(), dst.begin());
      if (r.review) out.review_queue.push_back(std::move(*r.review));
      out.schemas.push_back(std::move(r.schema));
    }
  }
  return out;
}

inline VariantResult run_variant(const MultiSeries& series, const RepairConfig& config,
                                 Variant variant) {
  RepairConfig cfg = config;
  if (variant == Variant::g_isr) cfg.pipeline.matcher = MatcherKind::greedy;
  if (variant == Variant::isr || variant == Variant::crs) cfg.pipeline.matcher = MatcherKind::exact;

  PipelineResult pipe =
      variant == Variant::block ? run_blocked_pipeline(series, cfg) : run_pipeline(series, cfg.pipeline);
  VariantResult out;
  if (variant == Variant::crs) {
    out.repaired = std::move(pipe.candidate);
    out.report = detail::candidate_runs_report(pipe.schemas);
  } else {
    auto det = determine_repairs(pipe.schemas, series, cfg.determination);
    out.repaired = std::move(det.repaired);
    out.report = std::move(det.report);
  }
  out.report.review_queue = std::move(pipe.review_queue);
  out.report.config_echo["variant"] = std::string(variant_name(variant));
  out.candidates = std::move(pipe.schemas);
  return out;
}

}  // namespace isr
