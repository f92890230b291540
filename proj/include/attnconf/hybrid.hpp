#pragma once

#include <cmath>
#include <cstddef>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "attnconf/error.hpp"
#include "attnconf/filter.hpp"
#include "attnconf/records.hpp"

namespace attnconf {

enum class Side { A, B };

inline std::string_view to_string(Side side) { return side == Side::A ? "A" : "B"; }
inline Side other(Side side) { return side == Side::A ? Side::B : Side::A; }

struct HybridChoice {
  std::string id;
  Side winner = Side::A;
  double margin = 0.0;  // |total_a - total_b|
  double total_a = 0.0;
  double total_b = 0.0;
  bool tie = false;
  ScoredTranslation chosen;
};

/// Per-system share of a hybrid run. Ties are credited to the tie-break
/// side and also counted separately.
struct HybridReport {
  std::size_t n = 0;
  std::size_t wins_a = 0;
  std::size_t wins_b = 0;
  std::size_t ties = 0;
  std::size_t unmatched = 0;  // ids skipped in lenient join mode
  double mean_margin = 0.0;

  nlohmann::json to_json() const {
    return {{"n", n},       {"wins_a", wins_a},       {"wins_b", wins_b},
            {"ties", ties}, {"unmatched", unmatched}, {"mean_margin", mean_margin}};
  }
};

enum class JoinMode { Strict, Lenient };

namespace hybrid {

/// Picks the translation with the strictly higher total; exact ties go to
/// `tie_break`.
inline HybridChoice select_pair(const ScoredTranslation& a, const ScoredTranslation& b, Side tie_break = Side::A) {
  if (a.record.id != b.record.id)
    throw Error(ErrorKind::IdMismatch, "pair joins '" + a.record.id + "' with '" + b.record.id + "'", a.record.id);
  HybridChoice c;
  c.id = a.record.id;
  c.total_a = a.scores.total;
  c.total_b = b.scores.total;
  c.margin = std::abs(c.total_a - c.total_b);
  c.tie = c.total_a == c.total_b;
  c.winner = c.tie ? tie_break : (c.total_a > c.total_b ? Side::A : Side::B);
  c.chosen = c.winner == Side::A ? a : b;
  return c;
}

struct HybridResult {
  std::vector<HybridChoice> choices;
  HybridReport report;
};

/// Inner join of two scored streams on id, one choice per common id in the
/// order of stream A. In strict mode an id present in only one stream fails
/// with UnmatchedId; in lenient mode it is skipped and counted.
inline HybridResult hybrid_corpus(const std::vector<ScoredTranslation>& stream_a,
                                  const std::vector<ScoredTranslation>& stream_b, Side tie_break = Side::A,
                                  JoinMode join = JoinMode::Strict) {
  std::unordered_map<std::string_view, std::size_t> index_b;
  index_b.reserve(stream_b.size());
  for (std::size_t k = 0; k < stream_b.size(); ++k) {
    if (!index_b.emplace(stream_b[k].record.id, k).second)
      throw Error(ErrorKind::DuplicateId, "id appears more than once in stream B", stream_b[k].record.id);
  }

  HybridResult result;
  auto& report = result.report;
  std::vector<bool> used_b(stream_b.size(), false);
  double margin_sum = 0.0;
  for (const auto& a : stream_a) {
    const auto it = index_b.find(a.record.id);
    if (it == index_b.end()) {
      if (join == JoinMode::Strict) throw Error(ErrorKind::UnmatchedId, "id missing from stream B", a.record.id);
      ++report.unmatched;
      continue;
    }
    if (used_b[it->second])
      throw Error(ErrorKind::DuplicateId, "id appears more than once in stream A", a.record.id);
    used_b[it->second] = true;
    auto choice = select_pair(a, stream_b[it->second], tie_break);
    (choice.winner == Side::A ? report.wins_a : report.wins_b) += 1;
    if (choice.tie) ++report.ties;
    margin_sum += choice.margin;
    result.choices.push_back(std::move(choice));
  }
  for (std::size_t k = 0; k < stream_b.size(); ++k) {
    if (used_b[k]) continue;
    if (join == JoinMode::Strict)
      throw Error(ErrorKind::UnmatchedId, "id missing from stream A", stream_b[k].record.id);
    ++report.unmatched;
  }
  report.n = result.choices.size();
  report.mean_margin = report.n ? margin_sum / static_cast<double>(report.n) : 0.0;
  return result;
}

/// Decision log line: id, winner, total_a, total_b, margin.
inline void write_decision(std::ostream& out, const HybridChoice& c) {
  out << c.id << '\t' << to_string(c.winner) << '\t' << io::format_double(c.total_a) << '\t'
      << io::format_double(c.total_b) << '\t' << io::format_double(c.margin) << '\n';
}

}  // namespace hybrid
}  // namespace attnconf
