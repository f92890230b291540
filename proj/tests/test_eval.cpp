#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "attnconf/eval.hpp"
#include "oracle.hpp"

using namespace attnconf;

namespace {

std::vector<PairedComparison> pairs_from(const std::vector<double>& human, const std::vector<double>& metric) {
  std::vector<PairedComparison> out;
  for (std::size_t k = 0; k < human.size(); ++k) out.push_back({std::to_string(k), human[k], metric[k]});
  return out;
}

ScoreRow row(std::string id, double cdp, double ap_out, double ap_in) {
  return {std::move(id), {cdp, ap_out, ap_in, cdp + ap_out + ap_in, std::nullopt}};
}

template <typename Fn>
void expect_no_pairs(Fn&& fn) {
  try {
    fn();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoComparablePairs);
  }
}

}  // namespace

TEST(KendallTau, AllAgree) {
  const auto r = eval::kendall_tau(pairs_from({1, -2, 0.5, -1}, {0.1, -0.3, 2, -9}));
  EXPECT_EQ(r.tau, 1.0);
  EXPECT_EQ(r.pos, 4u);
}

TEST(KendallTau, ThreeAgainstOne) {
  const auto r = eval::kendall_tau(pairs_from({1, 1, 1, 1}, {1, 1, 1, -1}));
  EXPECT_EQ(r.pos, 3u);
  EXPECT_EQ(r.neg, 1u);
  EXPECT_EQ(r.tau, 0.5);
}

TEST(KendallTau, TiesAreExcludedAndCounted) {
  const auto r = eval::kendall_tau(pairs_from({0, 1, -1, 0, 2}, {1, 0, 1, 0, 3}));
  EXPECT_EQ(r.excluded_human_ties, 2u);
  EXPECT_EQ(r.excluded_metric_ties, 1u);
  EXPECT_EQ(r.pos, 1u);
  EXPECT_EQ(r.neg, 1u);
  EXPECT_EQ(r.tau, 0.0);
  expect_no_pairs([] { eval::kendall_tau(pairs_from({0, 0}, {1, -1})); });
  expect_no_pairs([] { eval::kendall_tau(pairs_from({1, -1}, {0, 0})); });
  expect_no_pairs([] { eval::kendall_tau({}); });
}

TEST(KendallTau, MatchesBruteForceSignCounter) {
  std::mt19937_64 rng(500);
  std::uniform_int_distribution<int> small(-3, 3);
  for (std::size_t n : {500u, 10000u}) {
    std::vector<double> human(n), metric(n);
    for (std::size_t k = 0; k < n; ++k) {
      human[k] = small(rng) * 0.5;
      metric[k] = small(rng) * 0.25;
    }
    const auto r = eval::kendall_tau(pairs_from(human, metric));
    const auto expected = oracle::sign_count(human, metric);
    EXPECT_EQ(static_cast<long long>(r.pos), expected.pos);
    EXPECT_EQ(static_cast<long long>(r.neg), expected.neg);
    EXPECT_EQ(r.tau, static_cast<double>(expected.pos - expected.neg) / static_cast<double>(expected.pos + expected.neg));
    EXPECT_GE(r.tau, -1.0);
    EXPECT_LE(r.tau, 1.0);

    // Negating every metric delta negates tau exactly.
    for (double& m : metric) m = -m;
    EXPECT_EQ(eval::kendall_tau(pairs_from(human, metric)).tau, -r.tau);
  }
}

TEST(KendallTau, InvariantUnderMonotoneTransformOfScores) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> score(-5, 0);
  std::uniform_int_distribution<int> cat(1, 5);
  std::vector<PairedComparison> plain, transformed;
  for (int k = 0; k < 300; ++k) {
    const double a = score(rng), b = score(rng);
    const double h = cat(rng) - cat(rng);
    plain.push_back({"", h, a - b});
    transformed.push_back({"", h, std::exp(2 * a) - std::exp(2 * b)});
  }
  EXPECT_EQ(eval::kendall_tau(plain).tau, eval::kendall_tau(transformed).tau);
}

TEST(PerMetricTau, ConstructedFixture) {
  // Humans prefer A on s1..s3 and B on s4. The total agrees on all four.
  // CDP agrees on s1..s3 and prefers A on s4 as well: 3 agree, 1 disagrees.
  const std::vector<HumanJudgment> judgments{{"s1", 4, 2}, {"s2", 5, 3}, {"s3", 3, 1}, {"s4", 2, 4}, {"s5", 3, 3}};
  const std::vector<ScoreRow> a{row("s1", -0.1, -1.0, -1.0), row("s2", -0.1, -1.0, -1.0),
                                row("s3", -0.1, -1.0, -1.0), row("s4", -0.1, -3.0, -3.0),
                                row("s5", -0.1, -1.0, -1.0)};
  const std::vector<ScoreRow> b{row("s1", -0.2, -1.5, -1.5), row("s2", -0.2, -1.5, -1.5),
                                row("s3", -0.2, -1.5, -1.5), row("s4", -0.2, -1.0, -1.0)};
  const auto taus = eval::per_metric_tau(judgments, a, b);
  EXPECT_EQ(taus.total.tau, 1.0);
  EXPECT_EQ(taus.cdp.tau, 0.5);
  EXPECT_EQ(taus.cdp.pos, 3u);
  EXPECT_EQ(taus.cdp.neg, 1u);
  EXPECT_EQ(taus.ap_in.tau, 1.0);
  EXPECT_EQ(taus.ap_out.tau, 1.0);
  EXPECT_EQ(taus.joined, 4u);
  EXPECT_EQ(taus.missing, 1u);
}

TEST(PerMetricTau, AllHumanTies) {
  const std::vector<HumanJudgment> judgments{{"s1", 3, 3}, {"s2", 2.5, 2.5}};
  const std::vector<ScoreRow> a{row("s1", -1, -1, -1), row("s2", -1, -1, -1)};
  const std::vector<ScoreRow> b{row("s1", -2, -2, -2), row("s2", -2, -2, -2)};
  expect_no_pairs([&] { eval::per_metric_tau(judgments, a, b); });
}

TEST(SelectionOverlap, Counting) {
  std::vector<HumanJudgment> judgments;
  std::vector<Selection> selections;
  for (int k = 0; k < 100; ++k) {
    judgments.push_back({std::to_string(k), 4, 2});
    selections.push_back({std::to_string(k), k < 57 ? Side::A : Side::B});
  }
  judgments.push_back({"tie", 3, 3});
  selections.push_back({"tie", Side::A});
  const auto r = eval::selection_overlap(selections, judgments);
  EXPECT_EQ(r.matched, 57u);
  EXPECT_EQ(r.compared, 100u);
  EXPECT_EQ(r.excluded_ties, 1u);
  EXPECT_DOUBLE_EQ(r.percentage, 57.0);
}

TEST(SelectionOverlap, PerfectAndAllTies) {
  const std::vector<HumanJudgment> judgments{{"a", 5, 1}, {"b", 1, 5}};
  const std::vector<Selection> perfect{{"a", Side::A}, {"b", Side::B}};
  EXPECT_DOUBLE_EQ(eval::selection_overlap(perfect, judgments).percentage, 100.0);
  const std::vector<HumanJudgment> ties{{"a", 3, 3}, {"b", 2, 2}};
  expect_no_pairs([&] { eval::selection_overlap(perfect, ties); });
}

TEST(SelectionOverlap, FromScoresAndAgreement) {
  const std::vector<ExternalScore> a{{"1", -10}, {"2", -3}, {"3", -7}, {"4", 0}};
  const std::vector<ExternalScore> b{{"2", -4}, {"1", -5}, {"3", -7}};
  const auto sel = eval::select_by_score(a, b, Side::B);
  ASSERT_EQ(sel.size(), 3u);
  EXPECT_EQ(sel[0].side, Side::B);
  EXPECT_EQ(sel[1].side, Side::A);
  EXPECT_EQ(sel[2].side, Side::B);  // tie
  const std::vector<Selection> other{{"1", Side::B}, {"2", Side::B}, {"9", Side::A}};
  const auto agree = eval::selection_agreement(sel, other);
  EXPECT_EQ(agree.compared, 2u);
  EXPECT_EQ(agree.matched, 1u);
  EXPECT_DOUBLE_EQ(agree.percentage, 50.0);
}

TEST(PerMetricTau, ConstantColumnIsUndefinedNotFatal) {
  const std::vector<HumanJudgment> judgments{{"s1", 4, 2}, {"s2", 1, 3}};
  const std::vector<ScoreRow> a{row("s1", 0, -1, -1), row("s2", 0, -2, -2)};
  const std::vector<ScoreRow> b{row("s1", 0, -2, -2), row("s2", 0, -1, -1)};
  const auto taus = eval::per_metric_tau(judgments, a, b);
  EXPECT_TRUE(std::isnan(taus.cdp.tau));
  EXPECT_EQ(taus.cdp.excluded_metric_ties, 2u);
  EXPECT_TRUE(taus.cdp.to_json()["tau"].is_null());
  EXPECT_EQ(taus.total.tau, 1.0);
}
