#pragma once

// Command implementations behind the `isr` executable. Each command reads and
// writes files and returns its in-memory results so tests can drive it
// without a subprocess.

#include <chrono>
#include <cmath>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "isr/core.hpp"
#include "isr/eval.hpp"
#include "isr/io.hpp"

namespace isr::cli {

using nlohmann::json;

/// Bad flags or configuration values; maps to exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

struct RunConfig {
  RepairConfig repair;
  Variant variant = Variant::isr;
  double jaccard_min = 0.5;
  std::uint64_t seed = 1;

  /// Keys of the flat configuration document; each is also a flag name.
  static const std::vector<std::string>& keys() {
    static const std::vector<std::string> k = {
        "window_len", "support_threshold", "variance_floor", "size_threshold", "matcher",
        "len1",       "len2",              "theta_tau",      "variant",        "lambda",
        "jaccard_min", "seed"};
    return k;
  }

  /// Applies one key. Values may be JSON numbers/strings or flag text.
  void set(const std::string& key, const json& value) {
    try {
      auto num = [&] {
        return value.is_string() ? std::stod(value.get<std::string>()) : value.get<double>();
      };
      auto count = [&]() -> std::size_t {
        const double v = num();
        if (v < 0 || v != std::floor(v)) throw UsageError(key + " must be a non-negative integer");
        return static_cast<std::size_t>(v);
      };
      auto text = [&] { return value.is_string() ? value.get<std::string>() : value.dump(); };
      if (key == "window_len") repair.pipeline.model.window_len = count();
      else if (key == "support_threshold") repair.pipeline.model.support_threshold = num();
      else if (key == "variance_floor") repair.pipeline.model.variance_floor = num();
      else if (key == "size_threshold") repair.pipeline.size_threshold = count();
      else if (key == "matcher") {
        const auto m = text();
        if (m == "exact") repair.pipeline.matcher = MatcherKind::exact;
        else if (m == "greedy") repair.pipeline.matcher = MatcherKind::greedy;
        else throw UsageError("matcher must be 'exact' or 'greedy'");
      } else if (key == "len1") repair.determination.len1 = count();
      else if (key == "len2") repair.determination.len2 = count();
      else if (key == "theta_tau") repair.determination.theta_tau = num();
      else if (key == "variant") variant = parse_variant(text());
      else if (key == "lambda") repair.block_lambda = num();
      else if (key == "jaccard_min") jaccard_min = num();
      else if (key == "seed") seed = count();
      else throw UsageError("unknown configuration key '" + key + "'");
    } catch (const StructuralError& e) {
      throw UsageError(e.what());
    } catch (const std::invalid_argument&) {
      throw UsageError("invalid value for " + key);
    } catch (const json::exception&) {
      throw UsageError("invalid value for " + key);
    }
  }

  void merge(const json& doc) {
    if (!doc.is_object()) throw UsageError("configuration must be a JSON object");
    for (auto it = doc.begin(); it != doc.end(); ++it) set(it.key(), it.value());
  }

  void validate() const {
    try {
      repair.pipeline.validate();
      repair.determination.validate();
    } catch (const StructuralError& e) {
      throw UsageError(e.what());
    }
    if (!(repair.block_lambda > 0.0)) throw UsageError("lambda must be positive");
    if (!(jaccard_min > 0.0 && jaccard_min <= 1.0)) throw UsageError("jaccard_min must lie in (0,1]");
  }

  json echo() const {
    const auto& p = repair.pipeline;
    return {{"window_len", p.model.window_len},
            {"support_threshold", p.model.support_threshold},
            {"variance_floor", p.model.variance_floor},
            {"size_threshold", p.size_threshold},
            {"matcher", p.matcher == MatcherKind::exact ? "exact" : "greedy"},
            {"len1", repair.determination.len1},
            {"len2", repair.determination.len2},
            {"theta_tau", repair.determination.theta_tau},
            {"variant", std::string(variant_name(variant))},
            {"lambda", repair.block_lambda},
            {"jaccard_min", jaccard_min},
            {"seed", seed}};
  }
};

inline RunConfig load_config(const std::string& path) {
  RunConfig cfg;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config '" + path + "'");
    try {
      cfg.merge(json::parse(in));
    } catch (const json::parse_error& e) {
      throw UsageError("config '" + path + "': " + e.what());
    }
  }
  return cfg;
}

template <typename Cell>
void apply_repairs(BasicMultiSeries<Cell>& cells, const std::vector<AppliedRepair>& repairs) {
  for (const auto& r : repairs) apply_rotation_in_place(cells, r.rotation, r.interval);
}

// ---- repair -----------------------------------------------------------------

struct RepairPaths {
  std::string input, output, report, review, candidates;
};

struct RepairOutcome {
  VariantResult result;
  io::CsvTable repaired;
};

inline RepairOutcome cmd_repair(const RepairPaths& paths, const RunConfig& config) {
  config.validate();
  io::CsvTable table = io::read_csv_file(paths.input);
  const MultiSeries series = io::to_numeric(table);
  RepairOutcome out{run_variant(series, config.repair, config.variant), table};
  apply_repairs(out.repaired.cells, out.result.report.repairs);

  const io::Axis axis = io::axis_of(table);
  if (!paths.output.empty()) {
    std::ofstream f(paths.output, std::ios::binary);
    if (!f) throw DataError("cannot write '" + paths.output + "'");
    io::write_csv(f, out.repaired);
  }
  if (!paths.review.empty()) {
    std::ofstream f(paths.review);
    if (!f) throw DataError("cannot write '" + paths.review + "'");
    io::write_review_queue(f, out.result.report.review_queue, axis);
  }
  if (!paths.candidates.empty()) {
    std::ofstream f(paths.candidates);
    if (!f) throw DataError("cannot write '" + paths.candidates + "'");
    io::write_candidates(f, out.result.candidates, axis);
  }
  if (!paths.report.empty())
    io::write_json_file(paths.report,
                        io::report_json(out.result.report, axis, paths.review, config.echo()));
  return out;
}

// ---- inject / verify ----------------------------------------------------------

inline json injection_spec_json(const InjectionSpec& s) {
  return {{"instances", s.instance_count}, {"min_length", s.min_length},
          {"max_length", s.max_length},    {"max_order", s.max_order},
          {"min_dims", s.min_dims},        {"max_dims", s.max_dims},
          {"seed", s.seed},                {"first_index", s.first_index},
          {"min_gap", s.min_gap}};
}

struct InjectOutcome {
  io::CsvTable corrupted;
  GroundTruth truth;
};

/// Corrupts the text grid with the same rotations the numeric injection used,
/// so untouched cells keep their exact bytes.
inline InjectOutcome cmd_inject(const std::string& input, const std::string& output,
                                const std::string& truth_path, const InjectionSpec& spec) {
  io::CsvTable table = io::read_csv_file(input);
  Injection inj;
  try {
    inj = inject(io::to_numeric(table), spec);
  } catch (const StructuralError& e) {
    throw UsageError(e.what());
  }
  for (const auto& inst : inj.truth.instances)
    for (const auto& r : inst.rotations) apply_rotation_in_place(table.cells, r.inverse(), inst.interval);
  if (!output.empty()) {
    std::ofstream f(output, std::ios::binary);
    if (!f) throw DataError("cannot write '" + output + "'");
    io::write_csv(f, table);
  }
  if (!truth_path.empty())
    io::write_json_file(truth_path, io::truth_json(inj.truth, io::axis_of(table), injection_spec_json(spec)));
  return {std::move(table), std::move(inj.truth)};
}

inline GroundTruth truth_from_document(const io::IntervalDocument& doc) {
  return {doc.length, doc.instances};
}

inline void check_axis(const io::IntervalDocument& doc, const io::Axis& axis, const std::string& what) {
  if (doc.length != axis.length)
    throw DataError(what + " covers " + std::to_string(doc.length) + " rows, series has " +
                    std::to_string(axis.length));
  if (!doc.first_timestamp.empty() && axis.length &&
      (doc.first_timestamp != axis.stamp(0) || doc.last_timestamp != axis.stamp(axis.length - 1)))
    throw DataError(what + " time axis does not match the series");
}

/// Applies the truth repairs to a corrupted file. Returns true when the
/// result equals `expect` cell for cell (or when no expectation is given).
inline bool cmd_verify(const std::string& input, const std::string& truth_path,
                       const std::string& expect, const std::string& output) {
  io::CsvTable table = io::read_csv_file(input);
  const auto doc = io::read_interval_document(io::read_json_file(truth_path));
  check_axis(doc, io::axis_of(table), "truth");
  table.cells = restore(std::move(table.cells), truth_from_document(doc));
  if (!output.empty()) {
    std::ofstream f(output, std::ios::binary);
    io::write_csv(f, table);
  }
  if (expect.empty()) return true;
  const io::CsvTable clean = io::read_csv_file(expect);
  return clean.header == table.header && clean.timestamps == table.timestamps &&
         clean.cells == table.cells;
}

// ---- evaluate -------------------------------------------------------------------

inline Scores cmd_evaluate(const std::string& report_path, const std::string& truth_path,
                           const std::string& scores_path, double jaccard_min, std::ostream& table) {
  const auto report = io::read_interval_document(io::read_json_file(report_path));
  const auto truth = io::read_interval_document(io::read_json_file(truth_path));
  if (report.length != truth.length || report.first_timestamp != truth.first_timestamp ||
      report.last_timestamp != truth.last_timestamp)
    throw DataError("report and truth are on different time axes");
  const Scores s = score(report.instances, truth.instances, jaccard_min);
  if (!scores_path.empty()) io::write_json_file(scores_path, io::scores_json(s));
  auto line = [&](const char* name, double v, std::size_t num, std::size_t den) {
    table << "  " << name << "  " << io::format_value(v) << "  (" << num << "/" << den << ")\n";
  };
  table << "metric  value  (counts)\n";
  line("P_d", s.p_d, s.correct_detections, s.detections);
  line("R_d", s.r_d, s.correct_detections, s.true_intervals);
  line("P_r", s.p_r, s.correct_repairs, s.correct_detections);
  line("R_r", s.r_r, s.correct_repairs, s.detections);
  for (const auto& m : s.zero_denominator) table << "  note: " << m << " has a zero denominator\n";
  return s;
}

// ---- sweep ------------------------------------------------------------------------

struct SweepSpec {
  std::vector<std::size_t> lengths;            // rows taken from the input prefix
  std::vector<std::size_t> inconsistent_dims;  // dims involved per instance
  std::vector<Variant> variants;
  InjectionSpec injection;                     // min/max dims overridden per cell
};

inline SweepSpec sweep_from_json(const json& j, const RunConfig& config) {
  SweepSpec s;
  try {
    s.lengths = j.at("lengths").get<std::vector<std::size_t>>();
    s.inconsistent_dims = j.at("inconsistent_dims").get<std::vector<std::size_t>>();
    for (const auto& v : j.value("variants", std::vector<std::string>{"ISR", "G-ISR", "CRS", "Block"}))
      s.variants.push_back(parse_variant(v));
    s.injection.instance_count = j.value("instances", std::size_t{20});
    s.injection.min_length = j.value("min_length", std::size_t{50});
    s.injection.max_length = j.value("max_length", std::size_t{200});
    s.injection.max_order = j.value("max_order", std::size_t{4});
    s.injection.min_gap = j.value("min_gap", std::size_t{0});
    s.injection.seed = j.value("seed", config.seed);
  } catch (const json::exception& e) {
    throw UsageError(std::string("sweep spec: ") + e.what());
  } catch (const StructuralError& e) {
    throw UsageError(std::string("sweep spec: ") + e.what());
  }
  if (s.lengths.empty() || s.inconsistent_dims.empty() || s.variants.empty())
    throw UsageError("sweep spec needs non-empty lengths, inconsistent_dims and variants");
  return s;
}

struct SweepRow {
  std::size_t length = 0;
  std::size_t inconsistent_dims = 0;
  Variant variant = Variant::isr;
  Scores scores;
  double seconds = 0.0;
};

inline std::string sweep_csv_header() {
  return "rows,inconsistent_dims,variant," + io::scores_csv_header() + ",seconds";
}

inline std::string sweep_csv_row(const SweepRow& r) {
  return std::to_string(r.length) + "," + std::to_string(r.inconsistent_dims) + "," +
         std::string(variant_name(r.variant)) + "," + io::scores_csv_row(r.scores) + "," +
         io::format_value(r.seconds);
}

/// Runs every (rows, dims, variant) cell on a prefix of `clean`.
inline std::vector<SweepRow> run_sweep(const MultiSeries& clean, const SweepSpec& spec,
                                       const RunConfig& config) {
  std::vector<SweepRow> rows;
  for (std::size_t n : spec.lengths) {
    if (n > clean.length() || n == 0)
      throw UsageError("sweep length " + std::to_string(n) + " exceeds input rows");
    std::vector<double> prefix(clean.cells().begin(),
                               clean.cells().begin() + static_cast<std::ptrdiff_t>(n * clean.dims()));
    const MultiSeries base(
        std::vector<std::int64_t>(clean.timestamps().begin(),
                                  clean.timestamps().begin() + static_cast<std::ptrdiff_t>(n)),
        clean.dims(), std::move(prefix));
    for (std::size_t k : spec.inconsistent_dims) {
      InjectionSpec is = spec.injection;
      is.min_dims = is.max_dims = k;
      is.first_index = config.repair.pipeline.model.window_len;
      Injection inj;
      try {
        inj = inject(base, is);
      } catch (const StructuralError& e) {
        throw UsageError("sweep cell rows=" + std::to_string(n) + " dims=" + std::to_string(k) +
                         ": " + e.what());
      }
      for (Variant v : spec.variants) {
        const auto t0 = std::chrono::steady_clock::now();
        const VariantResult res = run_variant(inj.corrupted, config.repair, v);
        const auto t1 = std::chrono::steady_clock::now();
        rows.push_back({n, k, v, score(res.report, inj.truth, config.jaccard_min),
                        std::chrono::duration<double>(t1 - t0).count()});
      }
    }
  }
  return rows;
}

inline std::vector<SweepRow> cmd_sweep(const std::string& input, const std::string& spec_path,
                                       const std::string& output, const RunConfig& config) {
  config.validate();
  const MultiSeries clean = io::to_numeric(io::read_csv_file(input));
  const SweepSpec spec = sweep_from_json(io::read_json_file(spec_path), config);
  auto rows = run_sweep(clean, spec, config);
  if (!output.empty()) {
    std::ofstream f(output);
    if (!f) throw DataError("cannot write '" + output + "'");
    f << sweep_csv_header() << '\n';
    for (const auto& r : rows) f << sweep_csv_row(r) << '\n';
  }
  return rows;
}

// ---- generate ---------------------------------------------------------------------

/// Clean synthetic file: `dims` unit-variance Gaussian columns whose means are
/// `spacing` apart.
inline void cmd_generate(const std::string& output, std::size_t rows, std::size_t dims,
                         double spacing, std::uint64_t seed) {
  if (rows == 0 || dims == 0) throw UsageError("rows and dims must be positive");
  const auto table = io::to_table(synthesize_separated(rows, dims, spacing, seed));
  std::ofstream f(output, std::ios::binary);
  if (!f) throw DataError("cannot write '" + output + "'");
  io::write_csv(f, table);
}

}  // namespace isr::cli
