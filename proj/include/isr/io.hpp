#pragma once

// File formats: RFC-4180 CSV with a `timestamp` first column, JSON documents
// for reports, ground truth, scores and model snapshots, JSON-lines streams
// for candidate schemas and the review queue.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "isr/behavior.hpp"
#include "isr/core.hpp"
#include "isr/eval.hpp"
#include "isr/pipeline.hpp"

namespace isr::io {

using nlohmann::json;

/// A CSV file kept as text so values can be written back verbatim.
struct CsvTable {
  std::vector<std::string> header;          // "timestamp", dim names...
  std::vector<std::string> timestamps;      // raw text
  std::vector<std::int64_t> ticks;          // parsed, strictly increasing
  BasicMultiSeries<std::string> cells;      // raw value text, "" = missing

  std::size_t rows() const { return timestamps.size(); }
  std::size_t dims() const { return header.size() - 1; }
  std::vector<std::string> dim_names() const { return {header.begin() + 1, header.end()}; }
};

namespace detail {

inline bool all_digits(std::string_view s) {
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) s.remove_prefix(1);
  if (s.empty()) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  return true;
}

inline std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline bool read_int(std::string_view& s, std::size_t digits, int& out) {
  if (s.size() < digits) return false;
  out = 0;
  for (std::size_t i = 0; i < digits; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    out = out * 10 + (s[i] - '0');
  }
  s.remove_prefix(digits);
  return true;
}

inline bool eat(std::string_view& s, char c) {
  if (s.empty() || s.front() != c) return false;
  s.remove_prefix(1);
  return true;
}

}  // namespace detail

enum class TimestampKind { epoch, iso8601 };

/// Epoch integers are returned as-is. ISO-8601 date-times
/// (YYYY-MM-DD[T| ]HH:MM[:SS[.frac]][Z|+HH:MM|-HH:MM], or a bare date) become
/// microseconds since the Unix epoch, UTC.
inline std::int64_t parse_timestamp(std::string_view text, TimestampKind& kind) {
  if (detail::all_digits(text)) {
    std::int64_t v = 0;
    const char* b = text.data() + (text.front() == '+' ? 1 : 0);
    auto [p, ec] = std::from_chars(b, text.data() + text.size(), v);
    if (ec != std::errc{} || p != text.data() + text.size())
      throw DataError("timestamp out of range: '" + std::string(text) + "'");
    kind = TimestampKind::epoch;
    return v;
  }
  std::string_view s = text;
  int y, mo, d, h = 0, mi = 0, sec = 0;
  std::int64_t micros = 0;
  auto bad = [&] { return DataError("unrecognised timestamp '" + std::string(text) + "'"); };
  if (!detail::read_int(s, 4, y) || !detail::eat(s, '-') || !detail::read_int(s, 2, mo) ||
      !detail::eat(s, '-') || !detail::read_int(s, 2, d))
    throw bad();
  if (!s.empty()) {
    if (!detail::eat(s, 'T') && !detail::eat(s, ' ')) throw bad();
    if (!detail::read_int(s, 2, h) || !detail::eat(s, ':') || !detail::read_int(s, 2, mi)) throw bad();
    if (detail::eat(s, ':')) {
      if (!detail::read_int(s, 2, sec)) throw bad();
      if (detail::eat(s, '.') || detail::eat(s, ',')) {
        std::int64_t scale = 100000;
        std::size_t n = 0;
        while (!s.empty() && s.front() >= '0' && s.front() <= '9') {
          micros += (s.front() - '0') * scale;
          scale /= 10;
          s.remove_prefix(1);
          ++n;
        }
        if (n == 0) throw bad();
      }
    }
    int offset_min = 0;
    if (detail::eat(s, 'Z')) {
    } else if (!s.empty() && (s.front() == '+' || s.front() == '-')) {
      const int sign = s.front() == '+' ? 1 : -1;
      s.remove_prefix(1);
      int oh, om = 0;
      if (!detail::read_int(s, 2, oh)) throw bad();
      detail::eat(s, ':');
      if (!s.empty() && !detail::read_int(s, 2, om)) throw bad();
      offset_min = sign * (oh * 60 + om);
    }
    if (!s.empty()) throw bad();
    micros -= static_cast<std::int64_t>(offset_min) * 60'000'000;
  }
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || sec > 60) throw bad();
  kind = TimestampKind::iso8601;
  const std::int64_t days = detail::days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d));
  return ((days * 86400 + h * 3600 + mi * 60 + sec) * 1'000'000) + micros;
}

/// Splits RFC-4180 records. Each record carries the 1-based line it starts on.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  bool next(std::vector<std::string>& fields, std::size_t& line) {
    fields.clear();
    int c = in_.get();
    if (c == EOF) return false;
    line = line_;
    std::string field;
    bool quoted = false;
    bool was_quoted = false;
    for (;; c = in_.get()) {
      if (quoted) {
        if (c == EOF) throw DataError("unterminated quoted field", line);
        if (c == '"') {
          if (in_.peek() == '"') {
            field += '"';
            in_.get();
          } else {
            quoted = false;
          }
        } else {
          if (c == '\n') ++line_;
          field += static_cast<char>(c);
        }
        continue;
      }
      if (c == '"') {
        if (!field.empty() || was_quoted) throw DataError("stray quote inside field", line);
        quoted = was_quoted = true;
      } else if (c == ',') {
        fields.push_back(std::move(field));
        field.clear();
        was_quoted = false;
      } else if (c == '\r' && in_.peek() == '\n') {
        continue;
      } else if (c == '\n' || c == EOF) {
        ++line_;
        fields.push_back(std::move(field));
        return true;
      } else {
        if (was_quoted) throw DataError("characters after closing quote", line);
        field += static_cast<char>(c);
      }
    }
  }

 private:
  std::istream& in_;
  std::size_t line_ = 1;
};

inline CsvTable read_csv(std::istream& in) {
  CsvReader reader(in);
  CsvTable table;
  std::vector<std::string> fields;
  std::size_t line = 0;
  if (!reader.next(fields, line)) throw DataError("empty CSV input", 1);
  if (fields.size() < 2) throw DataError("header needs a timestamp column and at least one dimension", line);
  if (fields.front() != "timestamp")
    throw DataError("first header column must be 'timestamp'", line);
  table.header = fields;
  const std::size_t width = fields.size();
  std::vector<std::string> cells;
  bool have_kind = false;
  TimestampKind first_kind = TimestampKind::epoch;
  while (reader.next(fields, line)) {
    if (fields.size() == 1 && fields.front().empty()) continue;  // blank line
    if (fields.size() != width)
      throw DataError("expected " + std::to_string(width) + " fields, found " +
                          std::to_string(fields.size()),
                      line);
    TimestampKind kind;
    std::int64_t tick;
    try {
      tick = parse_timestamp(fields.front(), kind);
    } catch (const DataError& e) {
      throw DataError(e.what(), line);
    }
    if (!have_kind) {
      first_kind = kind;
      have_kind = true;
    } else if (kind != first_kind) {
      throw DataError("mixed epoch and ISO-8601 timestamps", line);
    }
    if (!table.ticks.empty() && tick <= table.ticks.back())
      throw DataError("timestamps must be strictly increasing (n < k requires t_n < t_k)", line);
    table.ticks.push_back(tick);
    table.timestamps.push_back(fields.front());
    for (std::size_t i = 1; i < width; ++i) {
      const std::string& v = fields[i];
      if (!v.empty()) {
        double parsed;
        const char* b = v.data();
        const char* e = v.data() + v.size();
        if (*b == '+') ++b;
        auto [p, ec] = std::from_chars(b, e, parsed);
        if (ec != std::errc{} || p != e)
          throw DataError("non-numeric value '" + v + "' in column '" + table.header[i] + "'", line);
      }
      cells.push_back(v);
    }
  }
  if (table.ticks.empty()) throw DataError("CSV has a header but no rows", line);
  table.cells = BasicMultiSeries<std::string>(table.ticks, width - 1, std::move(cells));
  return table;
}

inline CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  return read_csv(in);
}

/// Numeric view of the table; empty cells become missing.
inline MultiSeries to_numeric(const CsvTable& table) {
  std::vector<double> values(table.cells.cells().size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::string& v = table.cells.cells()[i];
    if (v.empty()) {
      values[i] = kMissing;
    } else {
      const char* b = v.data() + (v.front() == '+' ? 1 : 0);
      std::from_chars(b, v.data() + v.size(), values[i]);
    }
  }
  return MultiSeries(table.ticks, table.dims(), std::move(values));
}

inline std::string quote_field(const std::string& f) {
  if (f.find_first_of(",\"\r\n") == std::string::npos) return f;
  std::string out = "\"";
  for (char c : f) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline void write_csv(std::ostream& out, const std::vector<std::string>& header,
                      const std::vector<std::string>& timestamps,
                      const BasicMultiSeries<std::string>& cells) {
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << quote_field(header[i]);
  out << '\n';
  for (TimeIndex t = 0; t < cells.length(); ++t) {
    out << quote_field(timestamps[t]);
    for (const auto& c : cells.row(t)) out << ',' << quote_field(c);
    out << '\n';
  }
}

inline void write_csv(std::ostream& out, const CsvTable& table) {
  write_csv(out, table.header, table.timestamps, table.cells);
}

/// Shortest text that reads back to the same double.
inline std::string format_value(double v) {
  if (is_missing(v)) return "";
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

/// Text table for a numeric series with epoch-index timestamps.
inline CsvTable to_table(const MultiSeries& series, std::vector<std::string> dim_names = {}) {
  CsvTable t;
  t.header.push_back("timestamp");
  if (dim_names.empty())
    for (std::size_t d = 0; d < series.dims(); ++d) dim_names.push_back("s" + std::to_string(d));
  t.header.insert(t.header.end(), dim_names.begin(), dim_names.end());
  t.ticks = series.timestamps();
  for (auto tick : t.ticks) t.timestamps.push_back(std::to_string(tick));
  std::vector<std::string> cells;
  cells.reserve(series.cells().size());
  for (double v : series.cells()) cells.push_back(format_value(v));
  t.cells = BasicMultiSeries<std::string>(t.ticks, series.dims(), std::move(cells));
  return t;
}

// ---- JSON -----------------------------------------------------------------

inline json rotations_json(const std::vector<RotationPattern>& rs) {
  json a = json::array();
  for (const auto& r : rs) a.push_back(r.cycle());
  return a;
}

inline std::vector<RotationPattern> rotations_from_json(const json& a) {
  std::vector<RotationPattern> out;
  for (const auto& c : a) out.emplace_back(c.get<std::vector<DimIndex>>());
  std::sort(out.begin(), out.end());
  return out;
}

/// Time axis shared by report and truth documents; used to reject mismatches.
struct Axis {
  std::size_t length = 0;
  std::vector<std::string> timestamps;  // may be empty: indices are used instead
  std::vector<std::string> dim_names;

  std::string stamp(TimeIndex t) const {
    return t < timestamps.size() ? timestamps[t] : std::to_string(t);
  }
};

inline Axis axis_of(const CsvTable& t) { return {t.rows(), t.timestamps, t.dim_names()}; }

inline json axis_json(const Axis& axis) {
  json j;
  j["length"] = axis.length;
  if (axis.length) {
    j["first_timestamp"] = axis.stamp(0);
    j["last_timestamp"] = axis.stamp(axis.length - 1);
  }
  j["dims"] = axis.dim_names;
  return j;
}

inline json instances_json(const std::vector<InconsistencyInstance>& instances, const Axis& axis) {
  json a = json::array();
  for (const auto& inst : instances) {
    a.push_back({{"interval", {axis.stamp(inst.interval.start), axis.stamp(inst.interval.end)}},
                 {"start_index", inst.interval.start},
                 {"end_index", inst.interval.end},
                 {"rotations", rotations_json(inst.rotations)}});
  }
  return a;
}

inline std::vector<InconsistencyInstance> instances_from_json(const json& a) {
  std::vector<InconsistencyInstance> out;
  for (const auto& j : a) {
    InconsistencyInstance inst;
    inst.interval = {j.at("start_index").get<TimeIndex>(), j.at("end_index").get<TimeIndex>()};
    if (inst.interval.start > inst.interval.end) throw DataError("instance interval is reversed");
    inst.rotations = rotations_from_json(j.at("rotations"));
    out.push_back(std::move(inst));
  }
  return out;
}

inline json report_json(const RepairReport& report, const Axis& axis,
                        const std::string& review_path, const json& config) {
  json j = axis_json(axis);
  j["instances"] = instances_json(report.instances, axis);
  json reps = json::array();
  for (const auto& r : report.repairs)
    reps.push_back({{"rotation", r.rotation.cycle()},
                    {"start_index", r.interval.start},
                    {"end_index", r.interval.end}});
  j["repairs"] = reps;
  j["review_queue"] = review_path;
  j["review_count"] = report.review_queue.size();
  j["config"] = config;
  return j;
}

inline json truth_json(const GroundTruth& truth, const Axis& axis, const json& spec) {
  json j = axis_json(axis);
  j["instances"] = instances_json(truth.instances, axis);
  j["injection"] = spec;
  return j;
}

/// Both reports and truth files carry `instances` in the same layout.
struct IntervalDocument {
  std::size_t length = 0;
  std::string first_timestamp, last_timestamp;
  std::vector<InconsistencyInstance> instances;
};

inline IntervalDocument read_interval_document(const json& j) {
  IntervalDocument doc;
  try {
    doc.length = j.at("length").get<std::size_t>();
    doc.first_timestamp = j.value("first_timestamp", "");
    doc.last_timestamp = j.value("last_timestamp", "");
    doc.instances = instances_from_json(j.at("instances"));
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed interval document: ") + e.what());
  } catch (const StructuralError& e) {
    throw DataError(std::string("malformed interval document: ") + e.what());
  }
  for (const auto& inst : doc.instances)
    if (inst.interval.end >= doc.length) throw DataError("instance interval beyond series length");
  return doc;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError("'" + path + "': " + e.what());
  }
}

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

inline json candidate_json(const CandidateSchema& s, const Axis& axis) {
  return {{"time_index", s.time_index},
          {"timestamp", axis.stamp(s.time_index)},
          {"rotations", rotations_json(s.rotations)},
          {"oversized", s.oversized}};
}

/// One line per time index whose schema is non-empty.
inline void write_candidates(std::ostream& out, const std::vector<CandidateSchema>& phi,
                             const Axis& axis) {
  for (const auto& s : phi)
    if (!s.rotations.empty()) out << candidate_json(s, axis).dump() << '\n';
}

inline json review_json(const ReviewEntry& e, const Axis& axis) {
  json mapping = json::array();
  for (auto [src, dst] : e.mapping) mapping.push_back({src, dst});
  return {{"time_index", e.time_index},
          {"timestamp", axis.stamp(e.time_index)},
          {"dims", e.dims},
          {"mapping", mapping},
          {"rotations", rotations_json(e.rotations)}};
}

inline void write_review_queue(std::ostream& out, const std::vector<ReviewEntry>& queue,
                               const Axis& axis) {
  for (const auto& e : queue) out << review_json(e, axis).dump() << '\n';
}

inline json scores_json(const Scores& s) {
  return {{"P_d", s.p_d},
          {"R_d", s.r_d},
          {"P_r", s.p_r},
          {"R_r", s.r_r},
          {"detections", s.detections},
          {"correct_detections", s.correct_detections},
          {"inconsistent_intervals", s.true_intervals},
          {"correct_repairs", s.correct_repairs},
          {"zero_denominator", s.zero_denominator}};
}

inline std::string scores_csv_header() {
  return "P_d,R_d,P_r,R_r,detections,correct_detections,inconsistent_intervals,correct_repairs";
}

inline std::string scores_csv_row(const Scores& s) {
  std::ostringstream o;
  o << format_value(s.p_d) << ',' << format_value(s.r_d) << ',' << format_value(s.p_r) << ','
    << format_value(s.r_r) << ',' << s.detections << ',' << s.correct_detections << ','
    << s.true_intervals << ',' << s.correct_repairs;
  return o.str();
}

// ---- model snapshots --------------------------------------------------------

inline json model_json(const SequenceModel& m) {
  return {{"dim", m.dim()},
          {"w", m.window_len()},
          {"variance_floor", m.variance_floor()},
          {"mean", m.gamma().mean},
          {"variance", m.gamma().variance},
          {"sample_count", m.gamma().sample_count},
          {"window", std::vector<double>(m.window().begin(), m.window().end())}};
}

/// Restores a model; gamma is recomputed from the window contents.
inline SequenceModel model_from_json(const json& j) {
  SequenceModel m(j.at("dim").get<DimIndex>(), j.at("w").get<std::size_t>(),
                  j.value("variance_floor", 1e-9));
  const auto window = j.at("window").get<std::vector<double>>();
  m.reset_window(window);
  return m;
}

}  // namespace isr::io
