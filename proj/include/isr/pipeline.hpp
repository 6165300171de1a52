#pragma once

// Candidate repair schemas: scan tuples in time order, find the anomalous
// dimensions, match their observations back to models, and feed the
// candidate-repaired values to the models.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "isr/behavior.hpp"
#include "isr/core.hpp"
#include "isr/matching.hpp"

namespace isr {

struct PipelineConfig {
  ModelConfig model;
  std::size_t size_threshold = 12;  // max involved dims before review
  MatcherKind matcher = MatcherKind::exact;

  void validate() const {
    model.validate();
    if (size_threshold < 2) throw StructuralError("size_threshold must be >= 2");
  }
};

struct CandidateSchema {
  TimeIndex time_index = 0;
  std::vector<RotationPattern> rotations;  // sorted, pairwise disjoint
  bool oversized = false;                  // advisory only, never applied

  friend bool operator==(const CandidateSchema&, const CandidateSchema&) = default;
};

struct TupleResult {
  CandidateSchema schema;
  std::vector<double> candidate;  // cand(S(t_i))
  std::optional<ReviewEntry> review;
};

struct PipelineResult {
  std::vector<CandidateSchema> schemas;  // one per time index
  MultiSeries candidate;
  std::vector<ReviewEntry> review_queue;
};

template <BehaviorModel M>
std::vector<DimIndex> detect_anomalous_set(const MultiSeries& series, TimeIndex t,
                                           std::span<const M> models,
                                           const PipelineConfig& config) {
  std::vector<DimIndex> anomalous;
  for (DimIndex d = 0; d < series.dims(); ++d)
    if (is_anomalous(models[d], series.at(t, d), config.model)) anomalous.push_back(d);
  return anomalous;
}

/// Weight(u, v) = membership of the observation in anomalous[u] under the
/// model of anomalous[v].
template <BehaviorModel M>
WeightMatrix build_weight_matrix(std::span<const double> tuple, std::span<const M> models,
                                 const std::vector<DimIndex>& anomalous) {
  const std::size_t n = anomalous.size();
  std::vector<double> w(n * n);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v)
      w[u * n + v] = models[anomalous[v]].membership_probability(tuple[anomalous[u]]);
  return WeightMatrix(anomalous, std::move(w));
}

/// One step of the scan. Models are advanced in place with the
/// candidate-repaired values. A dimension whose value still does not fit its
/// model (unmatched, or routed to review) is not advanced, so untrusted
/// observations never reach the window.
template <BehaviorModel M>
TupleResult process_tuple(const MultiSeries& series, TimeIndex t, std::span<M> models,
                          const PipelineConfig& config) {
  const std::size_t dims = series.dims();
  TupleResult out;
  out.schema.time_index = t;
  const auto row = series.row(t);
  out.candidate.assign(row.begin(), row.end());

  const auto anomalous = detect_anomalous_set<M>(series, t, models, config);
  if (anomalous.size() >= 2) {
    const WeightMatrix matrix = build_weight_matrix<M>(row, models, anomalous);
    const Matching matching = match(matrix, config.matcher);
    const auto mapping = matching_to_mapping(matching, dims);
    auto rotations = decompose_permutation(mapping);
    if (involved_dims(rotations) > config.size_threshold) {
      out.schema.oversized = true;
      ReviewEntry entry;
      entry.time_index = t;
      entry.dims = anomalous;
      for (DimIndex d : anomalous) entry.mapping.emplace_back(d, mapping[d]);
      entry.rotations = rotations;
      out.review = std::move(entry);
    } else {
      for (DimIndex d : anomalous) out.candidate[mapping[d]] = row[d];
    }
    out.schema.rotations = std::move(rotations);
  }

  for (DimIndex d = 0; d < dims; ++d) {
    const double v = out.candidate[d];
    if (is_missing(v) || is_anomalous(models[d], v, config.model)) continue;
    models[d].accept(v);
  }
  return out;
}

/// Scans rows [first, N) with the given models. Rows before `first` get
/// empty schemas and are copied unchanged.
template <BehaviorModel M>
PipelineResult run_pipeline(const MultiSeries& series, std::vector<M> models,
                            const PipelineConfig& config, TimeIndex first) {
  config.validate();
  if (models.size() != series.dims())
    throw StructuralError("need exactly one model per dimension");
  PipelineResult out;
  out.candidate = series;
  out.schemas.reserve(series.length());
  for (TimeIndex t = 0; t < std::min<std::size_t>(first, series.length()); ++t)
    out.schemas.push_back(CandidateSchema{t, {}, false});
  for (TimeIndex t = first; t < series.length(); ++t) {
    TupleResult r = process_tuple<M>(series, t, std::span<M>(models), config);
    auto dst = out.candidate.row(t);
    std::copy(r.candidate.begin(), r.candidate.end(), dst.begin());
    if (r.review) out.review_queue.push_back(std::move(*r.review));
    out.schemas.push_back(std::move(r.schema));
  }
  return out;
}

/// Fits the models on the first `window_len` rows (assumed clean) and scans
/// the rest.
inline PipelineResult run_pipeline(const MultiSeries& series, const PipelineConfig& config) {
  config.validate();
  const std::size_t w = config.model.window_len;
  if (series.length() < w)
    throw StructuralError("series has " + std::to_string(series.length()) +
                          " rows, shorter than the model window " + std::to_string(w));
  return run_pipeline(series, fit_models(series, w, config.model), config, w);
}

}  // namespace isr
