#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <functional>
#include <istream>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "attnconf/error.hpp"
#include "attnconf/metrics.hpp"
#include "attnconf/parallel.hpp"
#include "attnconf/records.hpp"

namespace attnconf {

struct ScoredTranslation {
  AttentionRecord record;
  ConfidenceScores scores;
};

struct ScoringOptions {
  std::size_t workers = 1;
  std::optional<double> beta{};  // enables the coverage-penalty column
};

/// Audit summary of one filtering run.
struct FilterReport {
  std::size_t total_in = 0;
  std::size_t removed_unk = 0;
  std::size_t kept = 0;
  std::size_t dropped = 0;
  double keep_fraction = 0.5;
  std::optional<double> cutoff_score;  // lowest kept total; empty when nothing is kept
  double duration_seconds = 0.0;

  nlohmann::json to_json() const {
    nlohmann::json j = {{"total_in", total_in},       {"removed_unk", removed_unk},
                        {"kept", kept},               {"dropped", dropped},
                        {"keep_fraction", keep_fraction}, {"duration_seconds", duration_seconds}};
    j["cutoff_score"] = cutoff_score ? nlohmann::json(*cutoff_score) : nlohmann::json(nullptr);
    return j;
  }
};

namespace filter {

inline ConfidenceScores score_record(const AttentionRecord& rec, std::optional<double> beta = std::nullopt) {
  try {
    return metrics::confidence(rec.attn, beta);
  } catch (const Error& e) {
    throw e.with_context(rec.id, std::nullopt);
  }
}

/// Scores every record; output order equals input order for any worker count.
inline std::vector<ScoredTranslation> score_corpus(std::vector<AttentionRecord> records,
                                                   const ScoringOptions& options = {}) {
  std::vector<ConfidenceScores> scores(records.size());
  parallel_for(records.size(), options.workers,
               [&](std::size_t k) { scores[k] = score_record(records[k], options.beta); });
  std::vector<ScoredTranslation> out;
  out.reserve(records.size());
  for (std::size_t k = 0; k < records.size(); ++k)
    out.push_back({std::move(records[k]), scores[k]});
  return out;
}

inline constexpr std::size_t kDefaultBatch = 4096;

/// Streams records from `reader` in batches, scores each batch in parallel and
/// hands the results to `sink` in input order.
inline std::size_t score_stream(io::RecordReader& reader, const ScoringOptions& options,
                                const std::function<void(ScoredTranslation&&)>& sink,
                                std::size_t batch_size = kDefaultBatch) {
  std::size_t count = 0;
  std::vector<AttentionRecord> batch;
  batch.reserve(batch_size);
  bool done = false;
  while (!done) {
    batch.clear();
    while (batch.size() < batch_size) {
      auto rec = reader.next();
      if (!rec) {
        done = true;
        break;
      }
      batch.push_back(std::move(*rec));
    }
    for (auto& s : score_corpus(std::move(batch), options)) {
      sink(std::move(s));
      ++count;
    }
    batch = {};
  }
  return count;
}

/// Exact token match on the target side; no substring matching.
inline bool contains_token(const Tokens& tokens, std::string_view token) {
  return std::find(tokens.begin(), tokens.end(), token) != tokens.end();
}

struct UnkRemoval {
  std::vector<ScoredTranslation> kept;
  std::size_t removed = 0;
};

inline UnkRemoval remove_unk(std::vector<ScoredTranslation> scored, const std::string& unk_token = "<unk>") {
  if (unk_token.empty()) throw std::invalid_argument("unk token must not be empty");
  UnkRemoval out;
  out.kept.reserve(scored.size());
  for (auto& s : scored) {
    if (contains_token(s.record.target_tokens, unk_token))
      ++out.removed;
    else
      out.kept.push_back(std::move(s));
  }
  return out;
}

inline void check_fraction(double keep_fraction) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
    throw Error(ErrorKind::InvalidFraction, "keep fraction must lie in (0, 1]");
}

/// floor(fraction * n), but at least one record when n > 0.
inline std::size_t kept_count(std::size_t n, double keep_fraction) {
  check_fraction(keep_fraction);
  const auto k = static_cast<std::size_t>(std::floor(keep_fraction * static_cast<double>(n)));
  return (k == 0 && n > 0) ? 1 : std::min(k, n);
}

/// Input positions of the top `keep` totals (ties go to the earlier
/// position), returned in ascending position order.
inline std::vector<std::size_t> select_top(std::span<const double> totals, std::size_t keep) {
  std::vector<std::size_t> order(totals.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return totals[a] > totals[b]; });
  order.resize(keep);
  std::sort(order.begin(), order.end());
  return order;
}

struct FilterResult {
  std::vector<ScoredTranslation> kept;
  FilterReport report;
};

/// Keeps the best `keep_fraction` of `scored` by total score and returns the
/// survivors in their original order.
inline FilterResult filter_top(std::vector<ScoredTranslation> scored, double keep_fraction = 0.5) {
  const std::size_t keep = kept_count(scored.size(), keep_fraction);
  std::vector<double> totals(scored.size());
  for (std::size_t k = 0; k < scored.size(); ++k) totals[k] = scored[k].scores.total;

  FilterResult result;
  result.report.total_in = scored.size();
  result.report.keep_fraction = keep_fraction;
  result.report.kept = keep;
  result.report.dropped = scored.size() - keep;
  result.kept.reserve(keep);
  for (std::size_t pos : select_top(totals, keep)) {
    const double total = scored[pos].scores.total;
    if (!result.report.cutoff_score || total < *result.report.cutoff_score) result.report.cutoff_score = total;
    result.kept.push_back(std::move(scored[pos]));
  }
  return result;
}

/// Joins tokens with single spaces.
inline std::string join_tokens(const Tokens& tokens) {
  std::string out;
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    if (k) out += ' ';
    out += tokens[k];
  }
  return out;
}

/// Writes the parallel-corpus view of kept translations. Any stream may be
/// null. Line k of every output comes from the same record.
struct ParallelSink {
  std::ostream* source = nullptr;
  std::ostream* target = nullptr;
  std::ostream* scores = nullptr;

  void operator()(const ScoredTranslation& s) const {
    if (source) *source << join_tokens(s.record.source_tokens) << '\n';
    if (target) *target << join_tokens(s.record.target_tokens) << '\n';
    if (scores) io::write_score_row(*scores, s.record.id, s.scores);
  }
};

inline void emit_parallel(std::span<const ScoredTranslation> kept, std::ostream& source, std::ostream& target,
                          std::ostream& score_table) {
  const ParallelSink sink{&source, &target, &score_table};
  for (const auto& s : kept) sink(s);
}

struct FilterOptions {
  double keep_fraction = 0.5;
  std::string unk_token = "<unk>";
  ScoringOptions scoring;
};

/// Scores, drops unk-bearing translations, then keeps the top fraction of
/// the remainder. Everything is held in memory.
inline FilterResult run_filter(std::vector<AttentionRecord> records, const FilterOptions& options = {}) {
  const auto start = std::chrono::steady_clock::now();
  check_fraction(options.keep_fraction);
  const std::size_t total_in = records.size();
  auto scored = score_corpus(std::move(records), options.scoring);
  auto cleaned = remove_unk(std::move(scored), options.unk_token);
  auto result = filter_top(std::move(cleaned.kept), options.keep_fraction);
  result.report.total_in = total_in;
  result.report.removed_unk = cleaned.removed;
  result.report.duration_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

/// Same selection as run_filter for inputs that do not fit in memory. The
/// first pass keeps only one total per record and derives the cutoff; the
/// second pass re-reads the input and emits records above the cutoff, letting
/// ties at the cutoff through in input order until the quota is filled.
/// `open` must return a fresh stream over the same data on every call.
inline FilterReport run_filter_two_pass(const std::function<std::unique_ptr<std::istream>()>& open,
                                        const FilterOptions& options, const io::ReaderOptions& reader_options,
                                        const std::function<void(const ScoredTranslation&)>& sink) {
  const auto start = std::chrono::steady_clock::now();
  check_fraction(options.keep_fraction);
  constexpr double kUnk = std::numeric_limits<double>::quiet_NaN();

  ScoringOptions totals_only = options.scoring;
  totals_only.beta.reset();
  std::vector<double> totals;
  {
    auto in = open();
    io::RecordReader reader(*in, reader_options);
    score_stream(reader, totals_only, [&](ScoredTranslation&& s) {
      totals.push_back(contains_token(s.record.target_tokens, options.unk_token) ? kUnk : s.scores.total);
    });
  }

  FilterReport report;
  report.total_in = totals.size();
  report.keep_fraction = options.keep_fraction;
  std::vector<double> ranked;
  ranked.reserve(totals.size());
  for (double t : totals)
    if (!std::isnan(t)) ranked.push_back(t);
  report.removed_unk = totals.size() - ranked.size();
  const std::size_t keep = kept_count(ranked.size(), options.keep_fraction);
  report.kept = keep;
  report.dropped = ranked.size() - keep;

  double cutoff = std::numeric_limits<double>::infinity();
  std::size_t tie_quota = 0;
  if (keep > 0) {
    std::nth_element(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep - 1), ranked.end(),
                     std::greater<>());
    cutoff = ranked[keep - 1];
    const auto above = static_cast<std::size_t>(
        std::count_if(ranked.begin(), ranked.end(), [&](double t) { return t > cutoff; }));
    tie_quota = keep - above;
    report.cutoff_score = cutoff;
  }
  ranked = {};

  if (keep > 0) {
    auto in = open();
    io::RecordReader reader(*in, reader_options);
    std::size_t pos = 0;
    score_stream(reader, options.scoring, [&](ScoredTranslation&& s) {
      const double t = totals[pos++];
      if (std::isnan(t)) return;
      if (t > cutoff || (t == cutoff && tie_quota > 0)) {
        if (t == cutoff) --tie_quota;
        sink(s);
      }
    });
  }
  report.duration_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace filter
}  // namespace attnconf
