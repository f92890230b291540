#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <random>

#include "attnconf/metrics.hpp"
#include "generators.hpp"
#include "oracle.hpp"

using attnconf::AttentionMatrix;
using attnconf::Error;
using attnconf::ErrorKind;
using attnconf::Matrix;
using attnconf::RawAttentionMatrix;
namespace metrics = attnconf::metrics;

namespace {

const double kLn2 = std::log(2.0);

AttentionMatrix attn(Matrix m) { return AttentionMatrix::validate(std::move(m)); }

AttentionMatrix mixed() { return attn(Matrix{{0.5, 0.5}, {1.0, 0.0}}); }
AttentionMatrix uniform2() { return attn(Matrix{{0.5, 0.5}, {0.5, 0.5}}); }

template <typename Fn>
void expect_error(ErrorKind kind, Fn&& fn) {
  try {
    fn();
    FAIL() << "expected " << attnconf::to_string(kind);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), kind) << e.what();
  }
}

}  // namespace

TEST(Softmax, SymmetricRowIsUniform) {
  const auto out = metrics::softmax_normalize(RawAttentionMatrix(Matrix{{0.0, 0.0}}));
  EXPECT_DOUBLE_EQ(out(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(out(0, 1), 0.5);
}

TEST(Softmax, SingleElement) {
  const auto out = metrics::softmax_normalize(RawAttentionMatrix(Matrix{{42.0}}));
  EXPECT_EQ(out(0, 0), 1.0);
}

TEST(Softmax, MatchesExtendedPrecision) {
  // exp(k) / sum exp, evaluated to 40 digits.
  const auto out = metrics::softmax_normalize(RawAttentionMatrix(Matrix{{1.0, 2.0, 3.0}}));
  EXPECT_NEAR(out(0, 0), 0.0900305731703804580, 1e-15);
  EXPECT_NEAR(out(0, 1), 0.2447284710547976525, 1e-15);
  EXPECT_NEAR(out(0, 2), 0.6652409557748218895, 1e-15);
}

TEST(Softmax, LargeEnergiesStayFinite) {
  const auto out = metrics::softmax_normalize(RawAttentionMatrix(Matrix{{1000.0, 999.0, -1000.0}}));
  const auto expected = oracle::softmax({1000.0, 999.0, -1000.0});
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(out(0, j), expected[j], 1e-15);
}

TEST(Softmax, RejectsEmptyAndNonFinite) {
  expect_error(ErrorKind::EmptyMatrix, [] { RawAttentionMatrix(Matrix(0, 3)); });
  expect_error(ErrorKind::EmptyMatrix, [] { RawAttentionMatrix(Matrix(2, 0)); });
  expect_error(ErrorKind::NonFinite,
               [] { RawAttentionMatrix(Matrix{{1.0, std::numeric_limits<double>::quiet_NaN()}}); });
  expect_error(ErrorKind::NonFinite,
               [] { RawAttentionMatrix(Matrix{{std::numeric_limits<double>::infinity()}}); });
}

TEST(Softmax, RowsSumToOneAndShiftInvariant) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> energy(0.0, 5.0);
  std::uniform_real_distribution<double> shift(-50.0, 50.0);
  for (int trial = 0; trial < 200; ++trial) {
    Matrix raw(1 + trial % 7, 1 + trial % 11);
    for (std::size_t i = 0; i < raw.rows(); ++i)
      for (double& v : raw.row(i)) v = energy(rng);
    Matrix shifted = raw;
    for (std::size_t i = 0; i < raw.rows(); ++i) {
      const double s = shift(rng);
      for (double& v : shifted.row(i)) v += s;
    }
    const auto a = metrics::softmax_normalize(RawAttentionMatrix(raw));
    const auto b = metrics::softmax_normalize(RawAttentionMatrix(shifted));
    for (std::size_t i = 0; i < raw.rows(); ++i) {
      const auto row = a.row(i);
      EXPECT_NEAR(std::accumulate(row.begin(), row.end(), 0.0), 1.0, 1e-12);
      for (std::size_t j = 0; j < raw.cols(); ++j) EXPECT_NEAR(a(i, j), b(i, j), 1e-12);
    }
  }
}

TEST(Coverage, ColumnSums) {
  EXPECT_EQ(metrics::coverage_per_input(attn(Matrix::identity(3))), (std::vector<double>{1, 1, 1}));
  EXPECT_EQ(metrics::coverage_per_input(attn(Matrix{{1.0}, {1.0}})), (std::vector<double>{2}));
  EXPECT_EQ(metrics::coverage_per_input(mixed()), (std::vector<double>{1.5, 0.5}));
}

TEST(CoveragePenalty, Examples) {
  EXPECT_EQ(metrics::coverage_penalty(attn(Matrix::identity(3)), 1.0), 0.0);
  EXPECT_EQ(metrics::coverage_penalty(attn(Matrix{{1.0}, {1.0}}), 1.0), 0.0);
  EXPECT_NEAR(metrics::coverage_penalty(attn(Matrix{{0.5, 0.5}}), 1.0), -1.3862943611198906, 1e-15);
}

TEST(CoveragePenalty, ClampsZeroCoverageAndRejectsBadBeta) {
  const double cp = metrics::coverage_penalty(attn(Matrix{{1.0, 0.0}}), 2.0);
  EXPECT_TRUE(std::isfinite(cp));
  EXPECT_NEAR(cp, 2.0 * std::log(1e-12), 1e-9);
  expect_error(ErrorKind::InvalidBeta, [] { metrics::coverage_penalty(attn(Matrix{{1.0}}), 0.0); });
  expect_error(ErrorKind::InvalidBeta, [] { metrics::coverage_penalty(attn(Matrix{{1.0}}), -1.0); });
}

TEST(Cdp, IdentityIsExactlyZero) {
  for (std::size_t n : {1u, 2u, 5u, 17u}) EXPECT_EQ(metrics::coverage_deviation_penalty(attn(Matrix::identity(n))), 0.0);
}

TEST(Cdp, DoubleCoverage) {
  EXPECT_NEAR(metrics::coverage_deviation_penalty(attn(Matrix{{1.0}, {1.0}})), -kLn2, 1e-15);
}

TEST(Cdp, MatchesNaiveOracle) {
  std::mt19937_64 rng(3);
  const Matrix m = gen::stochastic(rng, 4, 5);
  EXPECT_NEAR(metrics::coverage_deviation_penalty(attn(m)), oracle::cdp(gen::to_grid(m)), 1e-12);
}

TEST(Cdp, StrictlyDecreasesAsOneCoverageMovesAwayFromOne) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> cov(0.0, 3.0);
  std::uniform_real_distribution<double> step(0.01, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> coverage(1 + trial % 9);
    for (double& c : coverage) c = cov(rng);
    const std::size_t j = static_cast<std::size_t>(trial) % coverage.size();
    const double before = metrics::coverage_deviation_penalty(coverage);
    // Move c_j farther from 1 on whichever side it already lies.
    coverage[j] += (coverage[j] >= 1.0 ? 1.0 : -1.0) * step(rng);
    EXPECT_LT(metrics::coverage_deviation_penalty(coverage), before);
  }
}

TEST(ApOut, Examples) {
  EXPECT_EQ(metrics::absentmindedness_out(attn(Matrix{{0, 1, 0}, {1, 0, 0}, {0, 0, 1}})), 0.0);
  EXPECT_NEAR(metrics::absentmindedness_out(uniform2()), -kLn2, 1e-15);
  EXPECT_NEAR(metrics::absentmindedness_out(mixed()), -0.34657359027997265, 1e-15);
}

TEST(ApIn, Examples) {
  EXPECT_EQ(metrics::absentmindedness_in(attn(Matrix::identity(4))), 0.0);
  EXPECT_NEAR(metrics::absentmindedness_in(uniform2()), -kLn2, 1e-15);
  EXPECT_NEAR(metrics::absentmindedness_in(mixed()), -0.31825708414740641, 1e-15);
}

TEST(ApIn, UnattendedColumnGetsMaximalEntropy) {
  // Column 0 is uniform over 3 outputs (entropy ln 3), column 1 is empty (ln 3).
  const auto a = attn(Matrix{{1.0, 0.0}, {1.0, 0.0}, {1.0, 0.0}});
  EXPECT_NEAR(metrics::absentmindedness_in(a), -std::log(3.0), 1e-15);
  EXPECT_NEAR(metrics::absentmindedness_in(a), oracle::ap_in(gen::to_grid(a.values())), 1e-15);
}

TEST(Confidence, IdentityAndUniform) {
  const auto id = metrics::confidence(attn(Matrix::identity(6)));
  EXPECT_EQ(id, (attnconf::ConfidenceScores{0.0, 0.0, 0.0, 0.0, std::nullopt}));
  EXPECT_FALSE(std::signbit(id.total));

  const auto u = metrics::confidence(uniform2());
  EXPECT_NEAR(u.cdp, 0.0, 1e-15);
  EXPECT_NEAR(u.ap_out, -kLn2, 1e-15);
  EXPECT_NEAR(u.ap_in, -kLn2, 1e-15);
  EXPECT_NEAR(u.total, -2.0 * kLn2, 1e-15);
}

TEST(Confidence, MixedMatrixHandValues) {
  const auto s = metrics::confidence(mixed(), 1.0);
  EXPECT_NEAR(s.cdp, -0.22314355131420976, 1e-15);
  EXPECT_NEAR(s.total, -0.88797422574158882, 1e-15);
  ASSERT_TRUE(s.cp.has_value());
  EXPECT_NEAR(*s.cp, std::log(0.5), 1e-15);
}

TEST(Confidence, TotalIsBitExactSumAndMatchesOracle) {
  std::mt19937_64 rng(8);
  const Matrix m = gen::stochastic(rng, 6, 8);
  const auto s = metrics::confidence(attn(m));
  const double sum = s.cdp + s.ap_out + s.ap_in;
  EXPECT_EQ(std::memcmp(&sum, &s.total, sizeof sum), 0);
  const auto g = gen::to_grid(m);
  EXPECT_NEAR(s.cdp, oracle::cdp(g), 1e-12);
  EXPECT_NEAR(s.ap_out, oracle::ap_out(g), 1e-12);
  EXPECT_NEAR(s.ap_in, oracle::ap_in(g), 1e-12);
  EXPECT_NEAR(s.total, oracle::cdp(g) + oracle::ap_out(g) + oracle::ap_in(g), 1e-12);
}

TEST(Confidence, ExactZerosGiveFiniteScores) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 300; ++trial) {
    const auto s = metrics::confidence(attn(gen::stochastic(rng, 1 + trial % 13, 1 + trial % 9, 0.5, 0.6)), 1.0);
    EXPECT_TRUE(std::isfinite(s.cdp) && std::isfinite(s.ap_out) && std::isfinite(s.ap_in) && std::isfinite(s.total));
    EXPECT_TRUE(std::isfinite(*s.cp));
  }
}

TEST(Confidence, ZeroOnlyForOneToOneAlignment) {
  // One-hot rows that leave an input uncovered are penalized.
  const auto s = metrics::confidence(attn(Matrix{{1, 0, 0}, {1, 0, 0}, {0, 0, 1}}));
  EXPECT_LT(s.total, 0.0);
  EXPECT_EQ(s.ap_out, 0.0);
  EXPECT_LT(s.cdp, 0.0);
}

TEST(AttentionMatrix, StrictAndLenientRowSums) {
  expect_error(ErrorKind::RowSumViolation, [] { AttentionMatrix::validate(Matrix{{0.5, 0.499}}); });
  bool renormalized = false;
  const auto m = AttentionMatrix::validate(Matrix{{0.5, 0.499}}, attnconf::IngestMode::Lenient, &renormalized);
  EXPECT_TRUE(renormalized);
  EXPECT_NEAR(m(0, 0) + m(0, 1), 1.0, 1e-12);
  // Within tolerance: accepted untouched.
  const auto kept = AttentionMatrix::validate(Matrix{{0.5, 0.49995}}, attnconf::IngestMode::Lenient, &renormalized);
  EXPECT_FALSE(renormalized);
  EXPECT_EQ(kept(0, 1), 0.49995);
  expect_error(ErrorKind::InvalidWeight, [] { AttentionMatrix::validate(Matrix{{1.5, -0.5}}); });
  expect_error(ErrorKind::RowSumViolation,
               [] { AttentionMatrix::validate(Matrix{{0.0, 0.0}}, attnconf::IngestMode::Lenient); });
}
