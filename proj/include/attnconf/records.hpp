#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "attnconf/error.hpp"
#include "attnconf/matrix.hpp"
#include "attnconf/metrics.hpp"

namespace attnconf {

using Tokens = std::vector<std::string>;
using Meta = std::map<std::string, std::string>;

/// One sentence pair with its output-by-input attention matrix.
struct AttentionRecord {
  std::string id;
  Tokens source_tokens;  // J tokens, one matrix column each
  Tokens target_tokens;  // I_out tokens, one matrix row each
  AttentionMatrix attn;
  std::optional<std::string> system_id;
  Meta meta;

  friend bool operator==(const AttentionRecord&, const AttentionRecord&) = default;
};

/// A record whose matrix holds unnormalized energies.
struct RawRecord {
  std::string id;
  Tokens source_tokens;
  Tokens target_tokens;
  Matrix values;
  std::optional<std::string> system_id;
  Meta meta;
};

/// Averaged human category scores (1 = worst ... 5 = best) for the two
/// competing translations of one source sentence.
struct HumanJudgment {
  std::string id;
  double score_a = 0.0;
  double score_b = 0.0;

  friend bool operator==(const HumanJudgment&, const HumanJudgment&) = default;
};

/// An externally produced per-sentence score, higher is better.
struct ExternalScore {
  std::string id;
  double score = 0.0;
};

/// One row of a score table.
struct ScoreRow {
  std::string id;
  ConfidenceScores scores;
};

inline constexpr double kMinJudgment = 1.0;
inline constexpr double kMaxJudgment = 5.0;

namespace io {

/// Decimal text with 17 significant digits, enough to round-trip any double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v + 0.0, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace detail {

inline void append_json_string(std::string& out, const std::string& s) {
  out += nlohmann::json(s).dump();
}

inline void append_tokens(std::string& out, const Tokens& tokens) {
  out += '[';
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    if (k) out += ',';
    append_json_string(out, tokens[k]);
  }
  out += ']';
}

inline Tokens parse_tokens(const nlohmann::json& j, const char* field, std::optional<std::size_t> line,
                           const std::string& id) {
  if (!j.is_array())
    throw Error(ErrorKind::ParseError, std::string("field '") + field + "' must be an array", id, line);
  Tokens tokens;
  tokens.reserve(j.size());
  for (const auto& t : j) {
    if (!t.is_string())
      throw Error(ErrorKind::ParseError, std::string("field '") + field + "' must hold strings", id, line);
    tokens.push_back(t.get<std::string>());
  }
  if (tokens.empty())
    throw Error(ErrorKind::ParseError, std::string("field '") + field + "' is empty", id, line);
  return tokens;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

inline bool is_blank(std::string_view s) {
  for (char c : s)
    if (c != ' ' && c != '\t' && c != '\r' && c != '\n') return false;
  return true;
}

inline std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

}  // namespace detail

/// Parses one record line without validating the weights as probabilities.
inline RawRecord parse_raw_record(std::string_view line, std::size_t line_no = 0) {
  const std::optional<std::size_t> where = line_no ? std::optional(line_no) : std::nullopt;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, e.what(), std::nullopt, where);
  }
  if (!j.is_object()) throw Error(ErrorKind::ParseError, "record is not an object", std::nullopt, where);

  RawRecord rec;
  const auto id_it = j.find("id");
  if (id_it == j.end() || !id_it->is_string() || id_it->get_ref<const std::string&>().empty())
    throw Error(ErrorKind::ParseError, "missing or empty 'id'", std::nullopt, where);
  rec.id = id_it->get<std::string>();

  for (const char* field : {"src", "tgt", "attn"})
    if (!j.contains(field))
      throw Error(ErrorKind::ParseError, std::string("missing field '") + field + "'", rec.id, where);
  rec.source_tokens = detail::parse_tokens(j["src"], "src", where, rec.id);
  rec.target_tokens = detail::parse_tokens(j["tgt"], "tgt", where, rec.id);

  const auto& attn = j["attn"];
  if (!attn.is_array()) throw Error(ErrorKind::ParseError, "field 'attn' must be an array", rec.id, where);
  const std::size_t rows = attn.size();
  const std::size_t cols = rec.source_tokens.size();
  if (rows != rec.target_tokens.size())
    throw Error(ErrorKind::DimensionMismatch,
                std::to_string(rows) + " attention rows for " +
                    std::to_string(rec.target_tokens.size()) + " target tokens",
                rec.id, where);
  rec.values = Matrix(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const auto& row = attn[i];
    if (!row.is_array()) throw Error(ErrorKind::ParseError, "attention row is not an array", rec.id, where);
    if (row.size() != cols)
      throw Error(ErrorKind::DimensionMismatch,
                  "attention row " + std::to_string(i) + " has " + std::to_string(row.size()) +
                      " entries for " + std::to_string(cols) + " source tokens",
                  rec.id, where);
    for (std::size_t k = 0; k < cols; ++k) {
      if (!row[k].is_number())
        throw Error(ErrorKind::ParseError, "attention entry is not a number", rec.id, where);
      rec.values(i, k) = row[k].get<double>();
    }
  }

  if (const auto sys = j.find("system"); sys != j.end() && !sys->is_null()) {
    if (!sys->is_string()) throw Error(ErrorKind::ParseError, "field 'system' must be a string", rec.id, where);
    rec.system_id = sys->get<std::string>();
  }
  if (const auto meta = j.find("meta"); meta != j.end() && !meta->is_null()) {
    if (!meta->is_object()) throw Error(ErrorKind::ParseError, "field 'meta' must be an object", rec.id, where);
    for (const auto& [key, value] : meta->items()) {
      if (!value.is_string())
        throw Error(ErrorKind::ParseError, "meta values must be strings", rec.id, where);
      rec.meta.emplace(key, value.get<std::string>());
    }
  }
  return rec;
}

/// Validates the weights of a raw record as a row-stochastic matrix.
inline AttentionRecord validate_record(RawRecord raw, IngestMode mode = IngestMode::Strict,
                                       std::size_t line_no = 0) {
  AttentionRecord rec;
  bool renormalized = false;
  try {
    rec.attn = AttentionMatrix::validate(std::move(raw.values), mode, &renormalized);
  } catch (const Error& e) {
    throw e.with_context(raw.id, line_no ? std::optional(line_no) : std::nullopt);
  }
  rec.id = std::move(raw.id);
  rec.source_tokens = std::move(raw.source_tokens);
  rec.target_tokens = std::move(raw.target_tokens);
  rec.system_id = std::move(raw.system_id);
  rec.meta = std::move(raw.meta);
  if (renormalized) rec.meta["renormalized"] = "true";
  return rec;
}

inline AttentionRecord parse_record(std::string_view line, IngestMode mode = IngestMode::Strict,
                                    std::size_t line_no = 0) {
  return validate_record(parse_raw_record(line, line_no), mode, line_no);
}

/// Serializes one record as a single line without the trailing newline.
template <typename Rec>
std::string format_record(const Rec& rec, const Matrix& values) {
  std::string out;
  out.reserve(64 + values.rows() * values.cols() * 24);
  out += "{\"id\":";
  detail::append_json_string(out, rec.id);
  out += ",\"src\":";
  detail::append_tokens(out, rec.source_tokens);
  out += ",\"tgt\":";
  detail::append_tokens(out, rec.target_tokens);
  out += ",\"attn\":[";
  for (std::size_t i = 0; i < values.rows(); ++i) {
    if (i) out += ',';
    out += '[';
    const auto row = values.row(i);
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k) out += ',';
      out += format_double(row[k]);
    }
    out += ']';
  }
  out += ']';
  if (rec.system_id) {
    out += ",\"system\":";
    detail::append_json_string(out, *rec.system_id);
  }
  if (!rec.meta.empty()) {
    out += ",\"meta\":{";
    bool first = true;
    for (const auto& [key, value] : rec.meta) {
      if (!first) out += ',';
      first = false;
      detail::append_json_string(out, key);
      out += ':';
      detail::append_json_string(out, value);
    }
    out += '}';
  }
  out += '}';
  return out;
}

inline std::string format_record(const AttentionRecord& rec) { return format_record(rec, rec.attn.values()); }
inline std::string format_record(const RawRecord& rec) { return format_record(rec, rec.values); }

struct ReaderOptions {
  IngestMode mode = IngestMode::Strict;
  /// Rejecting duplicate ids keeps every id seen so far in memory.
  bool reject_duplicates = true;
};

/// Pulls records one line at a time; memory is bounded by the longest line
/// (plus the id set when duplicates are rejected).
class RecordReader {
 public:
  explicit RecordReader(std::istream& in, ReaderOptions options = {}) : in_(in), options_(options) {}

  /// Next non-blank line as a raw record, or nullopt at end of stream.
  std::optional<RawRecord> next_raw() {
    while (std::getline(in_, line_)) {
      ++line_no_;
      if (detail::is_blank(line_)) continue;
      RawRecord rec = parse_raw_record(line_, line_no_);
      if (options_.reject_duplicates && !seen_.insert(rec.id).second)
        throw Error(ErrorKind::DuplicateId, "id appears more than once", rec.id, line_no_);
      return rec;
    }
    if (in_.bad()) throw Error(ErrorKind::Io, "read failure", std::nullopt, line_no_);
    return std::nullopt;
  }

  std::optional<AttentionRecord> next() {
    auto raw = next_raw();
    if (!raw) return std::nullopt;
    return validate_record(std::move(*raw), options_.mode, line_no_);
  }

  /// Line number of the record most recently returned.
  std::size_t line_no() const noexcept { return line_no_; }

 private:
  std::istream& in_;
  ReaderOptions options_;
  std::string line_;
  std::size_t line_no_ = 0;
  std::unordered_set<std::string> seen_;
};

inline std::vector<AttentionRecord> read_records(std::istream& in, IngestMode mode = IngestMode::Strict) {
  RecordReader reader(in, {.mode = mode});
  std::vector<AttentionRecord> out;
  while (auto rec = reader.next()) out.push_back(std::move(*rec));
  return out;
}

inline void write_record(std::ostream& out, const AttentionRecord& rec) {
  out << format_record(rec) << '\n';
}

inline void write_records(std::ostream& out, std::span<const AttentionRecord> records) {
  for (const auto& rec : records) write_record(out, rec);
}

/// Reads `id<TAB>score_a<TAB>score_b` lines. Blank lines and lines starting
/// with '#' are skipped.
inline std::vector<HumanJudgment> read_judgments(std::istream& in) {
  std::vector<HumanJudgment> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_blank(line) || line.front() == '#') continue;
    const auto fields = detail::split_tabs(detail::trim(line));
    if (fields.size() != 3 || fields[0].empty())
      throw Error(ErrorKind::ParseError, "expected id, score_a, score_b", std::nullopt, line_no);
    HumanJudgment j{std::string(fields[0]), 0.0, 0.0};
    const auto a = detail::parse_number(fields[1]);
    const auto b = detail::parse_number(fields[2]);
    if (!a || !b) throw Error(ErrorKind::ParseError, "score is not a number", j.id, line_no);
    for (double v : {*a, *b})
      if (!(v >= kMinJudgment && v <= kMaxJudgment))
        throw Error(ErrorKind::ScoreOutOfRange, "score outside [1, 5]", j.id, line_no);
    j.score_a = *a;
    j.score_b = *b;
    out.push_back(std::move(j));
  }
  return out;
}

/// Averages repeated judgments of the same id (one line per annotator).
/// Output keeps the order of first appearance.
inline std::vector<HumanJudgment> average_judgments(std::span<const HumanJudgment> judgments) {
  std::vector<HumanJudgment> out;
  std::vector<std::size_t> counts;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& j : judgments) {
    auto [it, inserted] = index.emplace(j.id, out.size());
    if (inserted) {
      out.push_back(j);
      counts.push_back(1);
    } else {
      out[it->second].score_a += j.score_a;
      out[it->second].score_b += j.score_b;
      ++counts[it->second];
    }
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k].score_a /= static_cast<double>(counts[k]);
    out[k].score_b /= static_cast<double>(counts[k]);
  }
  return out;
}

/// Reads `id<TAB>score` lines, higher score meaning better.
inline std::vector<ExternalScore> read_external_scores(std::istream& in) {
  std::vector<ExternalScore> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_blank(line) || line.front() == '#') continue;
    const auto fields = detail::split_tabs(detail::trim(line));
    if (fields.size() != 2 || fields[0].empty())
      throw Error(ErrorKind::ParseError, "expected id, score", std::nullopt, line_no);
    const auto v = detail::parse_number(fields[1]);
    if (!v || !std::isfinite(*v))
      throw Error(ErrorKind::ParseError, "score is not a finite number", std::string(fields[0]), line_no);
    out.push_back({std::string(fields[0]), *v});
  }
  return out;
}

inline void write_score_row(std::ostream& out, std::string_view id, const ConfidenceScores& s) {
  out << id << '\t' << format_double(s.cdp) << '\t' << format_double(s.ap_out) << '\t'
      << format_double(s.ap_in) << '\t' << format_double(s.total);
  if (s.cp) out << '\t' << format_double(*s.cp);
  out << '\n';
}

/// Reads a score table (`id cdp ap_out ap_in total [cp]`, tab separated).
/// Lines starting with '#' are comments.
inline std::vector<ScoreRow> read_score_table(std::istream& in) {
  std::vector<ScoreRow> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_blank(line) || line.front() == '#') continue;
    const auto fields = detail::split_tabs(detail::trim(line));
    if ((fields.size() != 5 && fields.size() != 6) || fields[0].empty())
      throw Error(ErrorKind::ParseError, "expected id, cdp, ap_out, ap_in, total[, cp]", std::nullopt, line_no);
    ScoreRow row{std::string(fields[0]), {}};
    std::vector<double> values;
    for (std::size_t k = 1; k < fields.size(); ++k) {
      const auto v = detail::parse_number(fields[k]);
      if (!v) throw Error(ErrorKind::ParseError, "score is not a number", row.id, line_no);
      values.push_back(*v);
    }
    row.scores.cdp = values[0];
    row.scores.ap_out = values[1];
    row.scores.ap_in = values[2];
    row.scores.total = values[3];
    if (values.size() == 5) row.scores.cp = values[4];
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace io
}  // namespace attnconf
