#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "vitals/io.hpp"
#include "vitals/stats.hpp"

using namespace vitals;

namespace {

std::vector<PairedSample> pairs_from(const std::vector<double>& dev, const std::vector<double>& ref,
                                     Quantity q = Quantity::Pulse) {
  std::vector<PairedSample> out;
  for (std::size_t i = 0; i < dev.size(); ++i) out.push_back({"s" + std::to_string(i), q, dev[i], ref[i]});
  return out;
}

// Two-sided permutation p-value for Spearman's rho over all n! orderings.
double exact_spearman_p(const std::vector<double>& x, const std::vector<double>& y) {
  const double rho = std::abs(spearman_rho(x, y));
  std::vector<double> perm = y;
  std::sort(perm.begin(), perm.end());
  std::size_t hits = 0, total = 0;
  do {
    ++total;
    if (std::abs(spearman_rho(x, perm)) >= rho - 1e-12) ++hits;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace

TEST(ErrorMetrics, MedianIgnoresOutlier) {
  const auto p = pairs_from({61.0, 62.0, 160.0}, {60.0, 60.0, 60.0});
  const auto m = error_metrics(p);
  EXPECT_DOUBLE_EQ(m.medae, 2.0);
  EXPECT_NEAR(m.mae, 103.0 / 3.0, 1e-12);
  EXPECT_NEAR(m.rmse, std::sqrt((1.0 + 4.0 + 10000.0) / 3.0), 1e-12);
  EXPECT_NEAR(m.pct_error, 100.0 * (103.0 / 60.0) / 3.0, 1e-12);
}

TEST(ErrorMetrics, IdenticalPairsAreZero) {
  const auto p = pairs_from({70, 80, 90, 100}, {70, 80, 90, 100});
  const auto m = error_metrics(p);
  EXPECT_EQ(m.mae, 0.0);
  EXPECT_EQ(m.rmse, 0.0);
  EXPECT_EQ(m.medae, 0.0);
  EXPECT_EQ(m.pct_error, 0.0);
  const auto ba = bland_altman(p);
  EXPECT_EQ(ba.bias, 0.0);
  EXPECT_EQ(ba.sd, 0.0);
}

TEST(ErrorMetrics, RmseDominatesMae) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 5.0);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> d, r;
    for (int i = 0; i < 12; ++i) {
      r.push_back(100.0 + 10.0 * i);
      d.push_back(r.back() + g(rng));
    }
    const auto m = error_metrics(pairs_from(d, r));
    EXPECT_GE(m.rmse, m.mae - 1e-12);
  }
}

TEST(ErrorMetrics, EmptyInput) {
  try {
    error_metrics(std::vector<PairedSample>{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyInput);
  }
}

TEST(BlandAltman, LimitsIdentity) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(-3.0, 7.0);
  std::vector<double> d, r;
  for (int i = 0; i < 40; ++i) {
    r.push_back(90.0 + i);
    d.push_back(r.back() + g(rng));
  }
  const auto ba = bland_altman(pairs_from(d, r));
  EXPECT_NEAR(ba.loa_low, ba.bias - 1.96 * ba.sd, 1e-9);
  EXPECT_NEAR(ba.loa_high, ba.bias + 1.96 * ba.sd, 1e-9);
}

TEST(BlandAltman, SampleStandardDeviation) {
  const auto ba = bland_altman(pairs_from({11, 12, 13, 14}, {10, 10, 10, 10}));
  EXPECT_DOUBLE_EQ(ba.bias, 2.5);
  EXPECT_NEAR(ba.sd, std::sqrt(5.0 / 3.0), 1e-12);
}

TEST(BlandAltman, ReportedSystolicLimits) {
  const auto ba = limits_of_agreement(-6.68, 13.69);
  EXPECT_NEAR(ba.loa_low, -33.51, 0.02);
  EXPECT_NEAR(ba.loa_high, 20.15, 0.02);
}

TEST(BlandAltman, ReportedDiastolicLimits) {
  const auto ba = limits_of_agreement(-4.94, 11.71);
  EXPECT_NEAR(ba.loa_low, -27.89, 0.03);
  EXPECT_NEAR(ba.loa_high, 18.01, 0.03);
}

TEST(BlandAltman, ConstantDifferences) {
  const auto p = pairs_from({105, 125, 145, 165, 185}, {100, 120, 140, 160, 180});
  const auto ba = bland_altman(p);
  EXPECT_DOUBLE_EQ(ba.bias, 5.0);
  EXPECT_DOUBLE_EQ(ba.sd, 0.0);
  EXPECT_DOUBLE_EQ(ba.loa_low, 5.0);
  EXPECT_DOUBLE_EQ(ba.loa_high, 5.0);
  const auto h = spearman_homoscedasticity(p);
  EXPECT_EQ(h.rho, 0.0);
}

TEST(BlandAltman, NeedsTwo) {
  EXPECT_THROW(bland_altman(pairs_from({1}, {1})), Error);
}

TEST(Ranks, TiesAveraged) {
  const std::vector<double> v = {10, 20, 20, 5, 30};
  EXPECT_EQ(average_ranks(v), (std::vector<double>{2.0, 3.5, 3.5, 1.0, 5.0}));
}

TEST(Spearman, PerfectMonotone) {
  const std::vector<double> x = {1, 2, 3, 4, 5, 6};
  const std::vector<double> y = {2, 4, 8, 16, 32, 64};
  EXPECT_DOUBLE_EQ(spearman_rho(x, y), 1.0);
  std::vector<double> z(y.rbegin(), y.rend());
  EXPECT_DOUBLE_EQ(spearman_rho(x, z), -1.0);
}

TEST(Spearman, InvariantUnderMonotoneTransform) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> x(15), y(15), ex(15), cy(15);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = g(rng);
      y[i] = x[i] + g(rng);
      ex[i] = std::exp(x[i]);
      cy[i] = y[i] * y[i] * y[i] + 4.0;
    }
    EXPECT_NEAR(spearman_rho(x, y), spearman_rho(ex, cy), 1e-12);
  }
}

TEST(Spearman, ClassicFormulaWithoutTies) {
  const std::vector<double> x = {3, 1, 4, 1.5, 5, 9, 2.6};
  const std::vector<double> y = {2.7, 1.8, 2.8, 1.9, 4.5, 0.9, 4.4};
  const auto rx = average_ranks(x), ry = average_ranks(y);
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  const double n = static_cast<double>(x.size());
  EXPECT_NEAR(spearman_rho(x, y), 1.0 - 6.0 * d2 / (n * (n * n - 1.0)), 1e-12);
}

TEST(Spearman, PValueNearExactPermutation) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<double> x(7), y(7);
    for (std::size_t i = 0; i < 7; ++i) {
      x[i] = g(rng);
      y[i] = 0.8 * x[i] + g(rng);
    }
    const double rho = spearman_rho(x, y);
    const double p = correlation_p_value(rho, 7);
    const double exact = exact_spearman_p(x, y);
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
    EXPECT_NEAR(p, exact, 0.12) << "rho " << rho;
  }
}

TEST(Spearman, PValueEdges) {
  EXPECT_EQ(correlation_p_value(1.0, 10), 0.0);
  EXPECT_EQ(correlation_p_value(0.0, 10), 1.0);
  EXPECT_EQ(correlation_p_value(0.5, 2), 1.0);
}

TEST(Spearman, TooFewPairs) {
  try {
    spearman_homoscedasticity(pairs_from({1, 2, 3}, {1, 2, 4}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooFewSamples);
  }
  const auto r = agreement_report(pairs_from({1, 2, 3}, {1, 2, 4}), Quantity::Sbp);
  EXPECT_FALSE(r.spearman_rho.has_value());
}

TEST(Agreement, GroupsAndExcludes) {
  auto p = pairs_from({70, 72, 74, 76}, {71, 71, 75, 75}, Quantity::Pulse);
  auto s = pairs_from({120, 118, 130, 125}, {121, 121, 128, 124}, Quantity::Sbp);
  p.insert(p.end(), s.begin(), s.end());
  const auto reports = agreement_reports(p);
  ASSERT_EQ(reports.size(), 2u);
  EXPECT_EQ(reports[0].quantity, Quantity::Pulse);
  EXPECT_EQ(reports[1].quantity, Quantity::Sbp);
  EXPECT_EQ(reports[0].n, 4u);
  const auto fewer = exclude_subject(p, "s0");
  EXPECT_EQ(fewer.size(), 6u);
}

TEST(Agreement, RenderEmptyFails) {
  try {
    render_report(std::vector<AgreementReport>{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyInput);
  }
}

TEST(Agreement, RenderedDocument) {
  const auto reports = agreement_reports(pairs_from({70, 72, 74, 76, 90}, {71, 71, 75, 75, 88}));
  const auto r = render_report(reports);
  const auto& j = r.document.at("reports").at(0);
  EXPECT_EQ(j.at("quantity"), "pulse");
  EXPECT_EQ(j.at("n"), 5);
  ASSERT_TRUE(r.plot_csv.count(Quantity::Pulse));
  EXPECT_EQ(r.plot_csv.at(Quantity::Pulse).rfind("series,mean,difference\n", 0), 0u);
}

TEST(Quantity, Names) {
  EXPECT_EQ(parse_quantity("sbp"), Quantity::Sbp);
  EXPECT_EQ(parse_quantity("Pulse"), Quantity::Pulse);
  EXPECT_EQ(parse_quantity("dbp"), Quantity::Dbp);
  EXPECT_FALSE(parse_quantity("spo2").has_value());
}
