#pragma once

// Domain types for multivariate series, time intervals and rotation
// patterns, plus the permutation algebra used to turn a one-one dimension
// mapping into disjoint rotations.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace isr {

/// Thrown when an input violates a structural precondition (bad shape,
/// non-bijective mapping, out-of-range index, ...).
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when input data is malformed (parse failures, ordering
/// violations). Carries an optional 1-based line number.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

using DimIndex = std::size_t;
using TimeIndex = std::size_t;

template <typename T>
constexpr bool is_missing(const T& v) {
  if constexpr (std::is_floating_point_v<T>) {
    return std::isnan(v);
  } else if constexpr (std::is_same_v<T, std::string>) {
    return v.empty();
  } else {
    return false;
  }
}

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

struct DataPoint {
  double value = 0.0;
  TimeIndex time_index = 0;
};

/// Closed interval [start, end] of time indices.
struct TimeInterval {
  TimeIndex start = 0;
  TimeIndex end = 0;

  constexpr std::size_t length() const { return end - start + 1; }
  constexpr bool contains(TimeIndex t) const { return start <= t && t <= end; }
  constexpr bool overlaps(const TimeInterval& o) const {
    return start <= o.end && o.start <= end;
  }
  constexpr bool valid(std::size_t n) const { return start <= end && end < n; }

  friend constexpr bool operator==(const TimeInterval&, const TimeInterval&) = default;
  friend constexpr auto operator<=>(const TimeInterval&, const TimeInterval&) = default;
};

/// N x M grid of cells, one column per sensor dimension, with strictly
/// increasing integer timestamps. `Cell` is `double` for numeric work and
/// `std::string` when raw CSV text has to be carried through a repair.
template <typename Cell>
class BasicMultiSeries {
 public:
  BasicMultiSeries() = default;

  BasicMultiSeries(std::size_t length, std::size_t dims, Cell fill = Cell{})
      : length_(length), dims_(dims), cells_(length * dims, fill) {
    if (dims == 0) throw StructuralError("series needs at least one dimension");
    timestamps_.resize(length);
    for (std::size_t i = 0; i < length; ++i) timestamps_[i] = static_cast<std::int64_t>(i);
  }

  BasicMultiSeries(std::vector<std::int64_t> timestamps, std::size_t dims, std::vector<Cell> cells)
      : length_(timestamps.size()), dims_(dims), timestamps_(std::move(timestamps)),
        cells_(std::move(cells)) {
    if (dims == 0) throw StructuralError("series needs at least one dimension");
    if (cells_.size() != length_ * dims_)
      throw StructuralError("cell count does not match length x dims");
    for (std::size_t i = 1; i < length_; ++i) {
      if (timestamps_[i] <= timestamps_[i - 1])
        throw StructuralError("timestamps must be strictly increasing (row " +
                              std::to_string(i) + ")");
    }
  }

  std::size_t length() const { return length_; }
  std::size_t dims() const { return dims_; }
  bool empty() const { return length_ == 0; }

  const Cell& at(TimeIndex t, DimIndex d) const { return cells_[t * dims_ + d]; }
  Cell& at(TimeIndex t, DimIndex d) { return cells_[t * dims_ + d]; }

  /// The sequence tuple at time t.
  std::span<const Cell> row(TimeIndex t) const { return {cells_.data() + t * dims_, dims_}; }
  std::span<Cell> row(TimeIndex t) { return {cells_.data() + t * dims_, dims_}; }

  std::vector<Cell> column(DimIndex d) const {
    std::vector<Cell> out(length_);
    for (std::size_t t = 0; t < length_; ++t) out[t] = at(t, d);
    return out;
  }

  const std::vector<std::int64_t>& timestamps() const { return timestamps_; }
  const std::vector<Cell>& cells() const { return cells_; }

  bool operator==(const BasicMultiSeries& o) const {
    if (length_ != o.length_ || dims_ != o.dims_ || timestamps_ != o.timestamps_) return false;
    for (std::size_t i = 0; i < cells_.size(); ++i) {
      const bool ma = is_missing(cells_[i]);
      const bool mb = is_missing(o.cells_[i]);
      if (ma != mb) return false;
      if (!ma && !(cells_[i] == o.cells_[i])) return false;
    }
    return true;
  }

 private:
  std::size_t length_ = 0;
  std::size_t dims_ = 0;
  std::vector<std::int64_t> timestamps_;
  std::vector<Cell> cells_;
};

using MultiSeries = BasicMultiSeries<double>;

/// A cycle of distinct dimensions (a1 a2 ... am), m >= 2. Applying it moves
/// the value recorded in a_i to a_{i+1}, and the value in a_m to a1. Stored in
/// canonical form with the smallest index first.
class RotationPattern {
 public:
  RotationPattern() = default;

  explicit RotationPattern(std::vector<DimIndex> cycle) : cycle_(std::move(cycle)) {
    if (cycle_.size() < 2) throw StructuralError("rotation pattern needs order >= 2");
    std::vector<DimIndex> sorted = cycle_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw StructuralError("rotation pattern indices must be distinct");
    std::rotate(cycle_.begin(), std::min_element(cycle_.begin(), cycle_.end()), cycle_.end());
  }

  RotationPattern(std::initializer_list<DimIndex> cycle)
      : RotationPattern(std::vector<DimIndex>(cycle)) {}

  std::size_t order() const { return cycle_.size(); }
  const std::vector<DimIndex>& cycle() const { return cycle_; }
  DimIndex max_dim() const { return *std::max_element(cycle_.begin(), cycle_.end()); }

  bool involves(DimIndex d) const {
    return std::find(cycle_.begin(), cycle_.end(), d) != cycle_.end();
  }

  bool disjoint_from(const RotationPattern& o) const {
    for (DimIndex d : cycle_)
      if (o.involves(d)) return false;
    return true;
  }

  /// The rotation that undoes this one.
  RotationPattern inverse() const {
    return RotationPattern(std::vector<DimIndex>(cycle_.rbegin(), cycle_.rend()));
  }

  /// Destination of each cycle member: value in d moves to successor(d).
  DimIndex successor(DimIndex d) const {
    for (std::size_t i = 0; i < cycle_.size(); ++i)
      if (cycle_[i] == d) return cycle_[(i + 1) % cycle_.size()];
    return d;
  }

  friend bool operator==(const RotationPattern&, const RotationPattern&) = default;
  friend auto operator<=>(const RotationPattern&, const RotationPattern&) = default;

 private:
  std::vector<DimIndex> cycle_;
};

inline std::string to_string(const RotationPattern& r) {
  std::string s = "(";
  for (std::size_t i = 0; i < r.order(); ++i) {
    if (i) s += ",";
    s += std::to_string(r.cycle()[i]);
  }
  return s + ")";
}

/// Sum of rotation orders, i.e. the number of dimensions involved.
inline std::size_t involved_dims(std::span<const RotationPattern> rotations) {
  std::size_t n = 0;
  for (const auto& r : rotations) n += r.order();
  return n;
}

/// One inconsistent interval and the disjoint rotations that repair it.
struct InconsistencyInstance {
  std::vector<RotationPattern> rotations;  // sorted, pairwise disjoint
  TimeInterval interval;

  friend bool operator==(const InconsistencyInstance&, const InconsistencyInstance&) = default;
};

/// A tuple routed to human review instead of being repaired.
struct ReviewEntry {
  TimeIndex time_index = 0;
  std::vector<DimIndex> dims;                        // anomalous dimensions
  std::vector<std::pair<DimIndex, DimIndex>> mapping;  // proposed source -> model
  std::vector<RotationPattern> rotations;
};

/// A rotation applied over one interval of the final output.
struct AppliedRepair {
  RotationPattern rotation;
  TimeInterval interval;
  friend bool operator==(const AppliedRepair&, const AppliedRepair&) = default;
};

struct RepairReport {
  std::vector<InconsistencyInstance> instances;  // time-ordered, intervals disjoint
  std::vector<AppliedRepair> repairs;            // in application order
  std::vector<ReviewEntry> review_queue;
  std::map<std::string, std::string> config_echo;
};

/// Cycle decomposition of a bijection on {0..n-1} given as mapping[i] = the
/// destination of i. Fixed points are dropped. Result is sorted.
inline std::vector<RotationPattern> decompose_permutation(std::span<const DimIndex> mapping) {
  const std::size_t n = mapping.size();
  std::vector<char> hit(n, 0);
  for (DimIndex d : mapping) {
    if (d >= n || hit[d]) throw StructuralError("mapping is not a bijection");
    hit[d] = 1;
  }
  std::vector<RotationPattern> out;
  std::vector<char> seen(n, 0);
  for (DimIndex start = 0; start < n; ++start) {
    if (seen[start] || mapping[start] == start) {
      seen[start] = 1;
      continue;
    }
    std::vector<DimIndex> cycle;
    for (DimIndex d = start; !seen[d]; d = mapping[d]) {
      seen[d] = 1;
      cycle.push_back(d);
    }
    out.emplace_back(std::move(cycle));
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Inverse of decompose_permutation: the mapping of size n realised by a set
/// of disjoint rotations.
inline std::vector<DimIndex> compose_rotations(std::span<const RotationPattern> rotations,
                                               std::size_t n) {
  std::vector<DimIndex> mapping(n);
  for (std::size_t i = 0; i < n; ++i) mapping[i] = i;
  for (const auto& r : rotations) {
    if (r.max_dim() >= n) throw StructuralError("rotation index out of range");
    for (DimIndex d : r.cycle()) {
      if (mapping[d] != d) throw StructuralError("rotations are not disjoint");
      mapping[d] = r.successor(d);
    }
  }
  return mapping;
}

/// Moves each cell recorded in dimension a_i to a_{i+1} (cyclically) on every
/// row of `interval`, in place.
template <typename Cell>
void apply_rotation_in_place(BasicMultiSeries<Cell>& series, const RotationPattern& rotation,
                             const TimeInterval& interval) {
  if (rotation.max_dim() >= series.dims())
    throw StructuralError("rotation " + to_string(rotation) + " exceeds dimension count");
  if (!interval.valid(series.length()))
    throw StructuralError("interval [" + std::to_string(interval.start) + "," +
                          std::to_string(interval.end) + "] outside series");
  const auto& cyc = rotation.cycle();
  for (TimeIndex t = interval.start; t <= interval.end; ++t) {
    // the last member's value wraps around to the first member
    Cell carry = std::move(series.at(t, cyc.back()));
    for (std::size_t i = cyc.size() - 1; i > 0; --i)
      series.at(t, cyc[i]) = std::move(series.at(t, cyc[i - 1]));
    series.at(t, cyc.front()) = std::move(carry);
  }
}

template <typename Cell>
BasicMultiSeries<Cell> apply_rotation(BasicMultiSeries<Cell> series,
                                      const RotationPattern& rotation,
                                      const TimeInterval& interval) {
  apply_rotation_in_place(series, rotation, interval);
  return series;
}

/// |a ∩ b| / |a ∪ b| counted in time indices.
constexpr double interval_jaccard(const TimeInterval& a, const TimeInterval& b) {
  const TimeIndex lo = std::max(a.start, b.start);
  const TimeIndex hi = std::min(a.end, b.end);
  const double inter = lo <= hi ? static_cast<double>(hi - lo + 1) : 0.0;
  const double uni = static_cast<double>(a.length() + b.length()) - inter;
  return inter / uni;
}

}  // namespace isr
