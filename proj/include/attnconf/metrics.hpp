#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "attnconf/error.hpp"
#include "attnconf/matrix.hpp"

namespace attnconf {

/// Attention-derived confidence of one translation. Every component is a
/// penalty: 0 is best, more negative is worse.
struct ConfidenceScores {
  double cdp = 0.0;
  double ap_out = 0.0;
  double ap_in = 0.0;
  double total = 0.0;
  std::optional<double> cp;  // coverage-penalty baseline, not part of total

  friend bool operator==(const ConfidenceScores&, const ConfidenceScores&) = default;
};

namespace metrics {

/// Coverage below this is clamped before the logarithm in the coverage penalty.
inline constexpr double kCoverageFloor = 1e-12;
/// Columns whose coverage is at most this are treated as unattended.
inline constexpr double kZeroCoverage = 1e-12;

namespace detail {
// Turns -0.0 into +0.0 so that printed scores never read "-0".
inline double unsigned_zero(double v) noexcept { return v + 0.0; }

inline double plogp(double p) noexcept { return p > 0.0 ? p * std::log(p) : 0.0; }
}  // namespace detail

/// Row-wise softmax, stabilized by subtracting each row's maximum.
inline AttentionMatrix softmax_normalize(const RawAttentionMatrix& raw) {
  Matrix out(raw.output_len(), raw.input_len());
  for (std::size_t i = 0; i < raw.output_len(); ++i) {
    const auto in = raw.values().row(i);
    auto dst = out.row(i);
    const double peak = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      dst[j] = std::exp(in[j] - peak);
      sum += dst[j];
    }
    for (double& v : dst) v /= sum;
  }
  return AttentionMatrix::validate(std::move(out));
}

/// Total attention each input token receives: column sums.
inline std::vector<double> coverage_per_input(const AttentionMatrix& attn) {
  std::vector<double> coverage(attn.input_len(), 0.0);
  for (std::size_t i = 0; i < attn.output_len(); ++i) {
    const auto row = attn.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) coverage[j] += row[j];
  }
  return coverage;
}

/// Baseline coverage penalty: beta * sum_j ln(min(c_j, 1)). Punishes only
/// under-coverage and is not length normalized.
inline double coverage_penalty(std::span<const double> coverage, double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta))
    throw Error(ErrorKind::InvalidBeta, "beta must be a positive finite number");
  double sum = 0.0;
  for (double c : coverage) sum += std::log(std::max(std::min(c, 1.0), kCoverageFloor));
  return detail::unsigned_zero(beta * sum);
}

inline double coverage_penalty(const AttentionMatrix& attn, double beta = 1.0) {
  return coverage_penalty(coverage_per_input(attn), beta);
}

/// Coverage deviation penalty over a coverage vector:
/// -(1/J) * sum_j ln(1 + (1 - c_j)^2). Zero iff every coverage is exactly 1.
inline double coverage_deviation_penalty(std::span<const double> coverage) {
  if (coverage.empty()) throw Error(ErrorKind::EmptyMatrix, "coverage vector is empty");
  double sum = 0.0;
  for (double c : coverage) {
    const double dev = 1.0 - c;
    sum += std::log1p(dev * dev);
  }
  return detail::unsigned_zero(-sum / static_cast<double>(coverage.size()));
}

inline double coverage_deviation_penalty(const AttentionMatrix& attn) {
  return coverage_deviation_penalty(coverage_per_input(attn));
}

namespace detail {
// Single pass over the matrix shared by both absentmindedness penalties.
struct EntropyTerms {
  std::vector<double> coverage;     // column sums
  std::vector<double> column_plogp; // sum_i a_ij ln a_ij per column
  double plogp_total = 0.0;         // sum over all entries of a ln a
};

inline EntropyTerms entropy_terms(const AttentionMatrix& attn) {
  EntropyTerms t;
  t.coverage.assign(attn.input_len(), 0.0);
  t.column_plogp.assign(attn.input_len(), 0.0);
  for (std::size_t i = 0; i < attn.output_len(); ++i) {
    const auto row = attn.row(i);
    double row_sum = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      const double term = plogp(row[j]);
      t.coverage[j] += row[j];
      t.column_plogp[j] += term;
      row_sum += term;
    }
    t.plogp_total += row_sum;
  }
  return t;
}

inline double ap_out_from(const EntropyTerms& t, std::size_t output_len) {
  const double mean = t.plogp_total / static_cast<double>(output_len);
  const double floor = -std::log(static_cast<double>(t.coverage.size()));
  return unsigned_zero(std::clamp(mean, floor, 0.0));
}

// With b_ij = a_ij / c_j the column term sum_i b ln b equals
// (sum_i a ln a) / c_j - ln c_j, so no per-entry logarithm is repeated.
inline double ap_in_from(const EntropyTerms& t, std::size_t output_len) {
  const double max_entropy = std::log(static_cast<double>(output_len));
  double sum = 0.0;
  for (std::size_t j = 0; j < t.coverage.size(); ++j) {
    const double c = t.coverage[j];
    if (c <= kZeroCoverage) {
      sum -= max_entropy;
      continue;
    }
    sum += t.column_plogp[j] / c - std::log(c);
  }
  const double mean = sum / static_cast<double>(t.coverage.size());
  return unsigned_zero(std::clamp(mean, -max_entropy, 0.0));
}
}  // namespace detail

/// Negated mean entropy of the output rows, in [-ln J, 0].
inline double absentmindedness_out(const AttentionMatrix& attn) {
  return detail::ap_out_from(detail::entropy_terms(attn), attn.output_len());
}

/// Negated mean entropy of the columns after rescaling each column to a
/// distribution, in [-ln I_out, 0]. An unattended column scores ln I_out.
inline double absentmindedness_in(const AttentionMatrix& attn) {
  return detail::ap_in_from(detail::entropy_terms(attn), attn.output_len());
}

/// All scores for one matrix. `total` is cdp + ap_out + ap_in in that order.
/// The coverage penalty is filled only when `beta` is given.
inline ConfidenceScores confidence(const AttentionMatrix& attn,
                                   std::optional<double> beta = std::nullopt) {
  const auto terms = detail::entropy_terms(attn);
  ConfidenceScores s;
  s.cdp = coverage_deviation_penalty(terms.coverage);
  s.ap_out = detail::ap_out_from(terms, attn.output_len());
  s.ap_in = detail::ap_in_from(terms, attn.output_len());
  s.total = s.cdp + s.ap_out + s.ap_in;
  if (beta) s.cp = coverage_penalty(terms.coverage, *beta);
  return s;
}

}  // namespace metrics
}  // namespace attnconf
