#pragma once

// Single-worker scoring throughput on random row-stochastic matrices.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "attnconf/metrics.hpp"

namespace attnconf::bench {

struct Throughput {
  std::size_t records = 0;
  double seconds = 0.0;
  double records_per_second = 0.0;
  double checksum = 0.0;  // sum of totals, keeps the work observable
};

inline std::vector<AttentionMatrix> random_matrices(std::size_t count, std::size_t rows, std::size_t cols,
                                                    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::gamma_distribution<double> gamma(0.3, 1.0);
  std::vector<AttentionMatrix> out;
  out.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
      double sum = 0.0;
      for (double& v : m.row(i)) sum += (v = gamma(rng) + 1e-300);
      for (double& v : m.row(i)) v /= sum;
    }
    out.push_back(AttentionMatrix::validate(std::move(m)));
  }
  return out;
}

/// Scores `pool` repeatedly until `records` scorings have been done.
inline Throughput measure(const std::vector<AttentionMatrix>& pool, std::size_t records) {
  Throughput t;
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t n = 0; n < records; ++n) t.checksum += metrics::confidence(pool[n % pool.size()]).total;
  t.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  t.records = records;
  t.records_per_second = static_cast<double>(records) / t.seconds;
  return t;
}

}  // namespace attnconf::bench
