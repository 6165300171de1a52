#pragma once

// Per-dimension sequence behavior models. The shipped model is a windowed
// Gaussian: the statistics of the last `w` accepted values give the
// probability that a new observation belongs to the dimension.

#include <cmath>
#include <concepts>
#include <cstddef>
#include <deque>
#include <span>
#include <vector>

#include "isr/core.hpp"

namespace isr {

struct ModelConfig {
  std::size_t window_len = 50;
  double support_threshold = 0.01;  // points with membership below this are anomalous
  double variance_floor = 1e-9;

  void validate() const {
    if (window_len < 2) throw StructuralError("window_len must be >= 2");
    if (!(support_threshold > 0.0 && support_threshold < 1.0))
      throw StructuralError("support_threshold must lie in (0,1)");
    if (!(variance_floor > 0.0)) throw StructuralError("variance_floor must be positive");
  }
};

struct Gamma {
  double mean = 0.0;
  double variance = 0.0;
  std::size_t sample_count = 0;
};

/// Windowed Gaussian behavior model of one dimension.
class SequenceModel {
 public:
  SequenceModel() = default;
  SequenceModel(DimIndex dim, std::size_t window_len, double variance_floor)
      : dim_(dim), window_len_(window_len), variance_floor_(variance_floor) {}

  DimIndex dim() const { return dim_; }
  std::size_t window_len() const { return window_len_; }
  double variance_floor() const { return variance_floor_; }
  const Gamma& gamma() const { return gamma_; }
  const std::deque<double>& window() const { return window_; }

  /// Two-sided Gaussian tail probability of x under the window statistics.
  double membership_probability(double x) const {
    const double z = std::abs(x - gamma_.mean) / std::sqrt(gamma_.variance);
    return std::erfc(z / std::sqrt(2.0));
  }

  /// Pushes a verified-normal or repaired value into the window, evicting the
  /// oldest one. Missing values are ignored.
  void accept(double x) {
    if (is_missing(x)) return;
    window_.push_back(x);
    while (window_.size() > window_len_) window_.pop_front();
    recompute();
  }

  /// Replaces the window wholesale; used by fit and by snapshot restore.
  void reset_window(std::span<const double> values) {
    window_.clear();
    for (double v : values)
      if (!is_missing(v)) window_.push_back(v);
    while (window_.size() > window_len_) window_.pop_front();
    recompute();
  }

 private:
  void recompute() {
    const std::size_t n = window_.size();
    gamma_.sample_count = n;
    if (n == 0) {
      gamma_.variance = variance_floor_;
      return;
    }
    double sum = 0.0;
    for (double v : window_) sum += v;
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (double v : window_) ss += (v - mean) * (v - mean);
    gamma_.mean = mean;
    gamma_.variance = n > 1 ? ss / static_cast<double>(n - 1) : 0.0;
    if (gamma_.variance < variance_floor_) gamma_.variance = variance_floor_;
  }

  DimIndex dim_ = 0;
  std::size_t window_len_ = 50;
  double variance_floor_ = 1e-9;
  Gamma gamma_;
  std::deque<double> window_;
};

/// What the pipeline needs from a behavior model.
template <typename M>
concept BehaviorModel = requires(M m, const M cm, double x) {
  { cm.membership_probability(x) } -> std::convertible_to<double>;
  m.accept(x);
};

static_assert(BehaviorModel<SequenceModel>);

inline SequenceModel fit(std::span<const double> history, const ModelConfig& config,
                         DimIndex dim = 0) {
  std::size_t present = 0;
  for (double v : history)
    if (!is_missing(v)) ++present;
  if (present < 2) throw StructuralError("model history needs at least 2 values");
  SequenceModel model(dim, config.window_len, config.variance_floor);
  model.reset_window(history);
  return model;
}

inline double membership_probability(const SequenceModel& model, double x) {
  return model.membership_probability(x);
}

/// Strict comparison: membership exactly at the threshold is normal.
template <BehaviorModel M>
bool is_anomalous(const M& model, double x, const ModelConfig& config) {
  if (is_missing(x)) return false;
  return model.membership_probability(x) < config.support_threshold;
}

inline SequenceModel accept(SequenceModel model, double repaired_value) {
  model.accept(repaired_value);
  return model;
}

/// Fits one model per dimension from the first `rows` rows of the series.
inline std::vector<SequenceModel> fit_models(const MultiSeries& series, std::size_t rows,
                                             const ModelConfig& config) {
  std::vector<SequenceModel> models;
  models.reserve(series.dims());
  std::vector<double> history(rows);
  for (DimIndex d = 0; d < series.dims(); ++d) {
    for (std::size_t t = 0; t < rows; ++t) history[t] = series.at(t, d);
    models.push_back(fit(history, config, d));
  }
  return models;
}

}  // namespace isr
