#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "attnconf/error.hpp"
#include "attnconf/hybrid.hpp"
#include "attnconf/records.hpp"

namespace attnconf {

/// Human and metric preference between translations A and B of one sentence.
struct PairedComparison {
  std::string id;
  double human_delta = 0.0;   // score_a - score_b
  double metric_delta = 0.0;  // metric_a - metric_b
};

struct TauResult {
  double tau = 0.0;  // NaN when no pair is comparable
  std::size_t pos = 0;
  std::size_t neg = 0;
  std::size_t excluded_human_ties = 0;
  std::size_t excluded_metric_ties = 0;

  nlohmann::json to_json() const {
    return {{"tau", std::isnan(tau) ? nlohmann::json(nullptr) : nlohmann::json(tau)},
            {"pos", pos},
            {"neg", neg},
            {"excluded_human_ties", excluded_human_ties},
            {"excluded_metric_ties", excluded_metric_ties}};
  }
};

/// One tau per score column, in the column order CDP, AP_in, AP_out, total.
struct MetricTaus {
  TauResult cdp;
  TauResult ap_in;
  TauResult ap_out;
  TauResult total;
  std::size_t joined = 0;   // judgments with scores on both sides
  std::size_t missing = 0;  // judgments lacking a score on either side
};

struct Selection {
  std::string id;
  Side side = Side::A;
};

struct OverlapResult {
  double percentage = 0.0;
  std::size_t matched = 0;
  std::size_t compared = 0;
  std::size_t excluded_ties = 0;

  nlohmann::json to_json() const {
    return {{"percentage", percentage},
            {"matched", matched},
            {"compared", compared},
            {"excluded_ties", excluded_ties}};
  }
};

namespace eval {

inline int sign(double v) { return (v > 0.0) - (v < 0.0); }

/// Sign counts without the comparable-pair check; tau is NaN when
/// pos + neg == 0.
inline TauResult tau_counts(std::span<const PairedComparison> pairs) {
  TauResult r;
  for (const auto& p : pairs) {
    const int h = sign(p.human_delta);
    const int m = sign(p.metric_delta);
    if (h == 0)
      ++r.excluded_human_ties;
    else if (m == 0)
      ++r.excluded_metric_ties;
    else if (h == m)
      ++r.pos;
    else
      ++r.neg;
  }
  if (r.pos + r.neg == 0) {
    r.tau = std::numeric_limits<double>::quiet_NaN();
    return r;
  }
  const auto pos = static_cast<double>(r.pos);
  const auto neg = static_cast<double>(r.neg);
  r.tau = (pos - neg) / (pos + neg);
  return r;
}

/// tau = (pos - neg) / (pos + neg) over pairs where humans expressed a
/// preference. Pairs the metric scores as a tie are excluded and counted.
inline TauResult kendall_tau(std::span<const PairedComparison> pairs) {
  auto r = tau_counts(pairs);
  if (r.pos + r.neg == 0) throw Error(ErrorKind::NoComparablePairs, "no pair has both a human and a metric preference");
  return r;
}

/// Joins judgments with the two systems' score tables and computes a tau per
/// score column.
inline MetricTaus per_metric_tau(std::span<const HumanJudgment> judgments, std::span<const ScoreRow> scores_a,
                                 std::span<const ScoreRow> scores_b) {
  std::unordered_map<std::string_view, const ConfidenceScores*> by_id_a, by_id_b;
  for (const auto& r : scores_a) by_id_a.emplace(r.id, &r.scores);
  for (const auto& r : scores_b) by_id_b.emplace(r.id, &r.scores);

  MetricTaus out;
  std::vector<PairedComparison> cdp, ap_in, ap_out, total;
  for (const auto& j : judgments) {
    const auto a = by_id_a.find(j.id);
    const auto b = by_id_b.find(j.id);
    if (a == by_id_a.end() || b == by_id_b.end()) {
      ++out.missing;
      continue;
    }
    ++out.joined;
    const double human = j.score_a - j.score_b;
    const ConfidenceScores& sa = *a->second;
    const ConfidenceScores& sb = *b->second;
    cdp.push_back({j.id, human, sa.cdp - sb.cdp});
    ap_in.push_back({j.id, human, sa.ap_in - sb.ap_in});
    ap_out.push_back({j.id, human, sa.ap_out - sb.ap_out});
    total.push_back({j.id, human, sa.total - sb.total});
  }
  // A column whose scores never differ gets an undefined tau; only a table
  // with nothing comparable in any column is an error.
  out.cdp = tau_counts(cdp);
  out.ap_in = tau_counts(ap_in);
  out.ap_out = tau_counts(ap_out);
  out.total = tau_counts(total);
  bool any = false;
  for (const auto* t : {&out.cdp, &out.ap_in, &out.ap_out, &out.total}) any = any || t->pos + t->neg > 0;
  if (!any) throw Error(ErrorKind::NoComparablePairs, "no pair has both a human and a metric preference");
  return out;
}

/// Share of judged items (human ties excluded) where the method picked the
/// side humans preferred. Judgments without a selection are ignored.
inline OverlapResult selection_overlap(std::span<const Selection> selections,
                                       std::span<const HumanJudgment> judgments) {
  std::unordered_map<std::string_view, Side> chosen;
  for (const auto& s : selections) chosen.emplace(s.id, s.side);
  OverlapResult r;
  for (const auto& j : judgments) {
    const auto it = chosen.find(j.id);
    if (it == chosen.end()) continue;
    if (j.score_a == j.score_b) {
      ++r.excluded_ties;
      continue;
    }
    const Side preferred = j.score_a > j.score_b ? Side::A : Side::B;
    ++r.compared;
    if (it->second == preferred) ++r.matched;
  }
  if (r.compared == 0) throw Error(ErrorKind::NoComparablePairs, "no judged item has a strict human preference");
  r.percentage = 100.0 * static_cast<double>(r.matched) / static_cast<double>(r.compared);
  return r;
}

/// Share of common ids on which two methods picked the same side.
inline OverlapResult selection_agreement(std::span<const Selection> first, std::span<const Selection> second) {
  std::unordered_map<std::string_view, Side> other_side;
  for (const auto& s : second) other_side.emplace(s.id, s.side);
  OverlapResult r;
  for (const auto& s : first) {
    const auto it = other_side.find(s.id);
    if (it == other_side.end()) continue;
    ++r.compared;
    if (it->second == s.side) ++r.matched;
  }
  if (r.compared == 0) throw Error(ErrorKind::NoComparablePairs, "the selections share no id");
  r.percentage = 100.0 * static_cast<double>(r.matched) / static_cast<double>(r.compared);
  return r;
}

inline std::vector<Selection> selections_from(std::span<const HybridChoice> choices) {
  std::vector<Selection> out;
  out.reserve(choices.size());
  for (const auto& c : choices) out.push_back({c.id, c.winner});
  return out;
}

/// Argmax selection over two per-id score lists (higher is better), inner
/// joined on id in the order of `a`.
inline std::vector<Selection> select_by_score(std::span<const ExternalScore> a, std::span<const ExternalScore> b,
                                              Side tie_break = Side::A) {
  std::unordered_map<std::string_view, double> by_id_b;
  for (const auto& s : b) by_id_b.emplace(s.id, s.score);
  std::vector<Selection> out;
  for (const auto& s : a) {
    const auto it = by_id_b.find(s.id);
    if (it == by_id_b.end()) continue;
    const Side side = s.score == it->second ? tie_break : (s.score > it->second ? Side::A : Side::B);
    out.push_back({s.id, side});
  }
  return out;
}

inline std::vector<ExternalScore> totals_of(std::span<const ScoreRow> rows) {
  std::vector<ExternalScore> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back({r.id, r.scores.total});
  return out;
}

}  // namespace eval
}  // namespace attnconf
