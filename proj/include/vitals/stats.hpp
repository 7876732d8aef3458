#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "vitals/error.hpp"
#include "vitals/numeric.hpp"

namespace vitals {

enum class Quantity { Pulse, Sbp, Dbp };

constexpr std::string_view to_string(Quantity q) {
  switch (q) {
    case Quantity::Pulse: return "pulse";
    case Quantity::Sbp: return "sbp";
    case Quantity::Dbp: return "dbp";
  }
  return "?";
}

inline std::optional<Quantity> parse_quantity(std::string_view s) {
  if (s == "pulse" || s == "Pulse" || s == "hr") return Quantity::Pulse;
  if (s == "sbp" || s == "Sbp" || s == "systolic") return Quantity::Sbp;
  if (s == "dbp" || s == "Dbp" || s == "diastolic") return Quantity::Dbp;
  return std::nullopt;
}

struct PairedSample {
  std::string subject_id;
  Quantity quantity = Quantity::Pulse;
  double device_value = 0.0;
  double reference_value = 0.0;

  double difference() const noexcept { return device_value - reference_value; }
  double pair_mean() const noexcept { return 0.5 * (device_value + reference_value); }

  bool operator==(const PairedSample&) const = default;
};

inline void require_valid(const PairedSample& p) {
  if (!(std::isfinite(p.device_value) && std::isfinite(p.reference_value) && p.device_value > 0.0 &&
        p.reference_value > 0.0))
    throw Error(ErrorCode::MalformedRow, "paired values must be finite and positive (subject " + p.subject_id + ")");
}

struct ErrorMetrics {
  double mae = 0.0;
  double rmse = 0.0;
  double medae = 0.0;
  double pct_error = 0.0;
};

inline ErrorMetrics error_metrics(std::span<const PairedSample> pairs) {
  if (pairs.empty()) throw Error(ErrorCode::EmptyInput, "error metrics need at least one pair");
  std::vector<double> abs_err;
  abs_err.reserve(pairs.size());
  double sq = 0.0, pct = 0.0;
  for (const auto& p : pairs) {
    const double e = std::abs(p.difference());
    abs_err.push_back(e);
    sq += e * e;
    pct += e / p.reference_value;
  }
  const auto n = static_cast<double>(pairs.size());
  ErrorMetrics m;
  m.mae = mean(abs_err);
  m.rmse = std::sqrt(sq / n);
  m.medae = median(abs_err);
  m.pct_error = 100.0 * pct / n;
  return m;
}

struct BlandAltman {
  double bias = 0.0;
  double sd = 0.0;
  double loa_low = 0.0;
  double loa_high = 0.0;
};

inline BlandAltman limits_of_agreement(double bias, double sd) { return {bias, sd, bias - 1.96 * sd, bias + 1.96 * sd}; }

inline BlandAltman bland_altman(std::span<const PairedSample> pairs) {
  if (pairs.size() < 2) throw Error(ErrorCode::EmptyInput, "Bland-Altman needs at least two pairs");
  std::vector<double> d;
  d.reserve(pairs.size());
  for (const auto& p : pairs) d.push_back(p.difference());
  const double bias = mean(d);
  double ss = 0.0;
  for (double v : d) ss += (v - bias) * (v - bias);
  return limits_of_agreement(bias, std::sqrt(ss / static_cast<double>(d.size() - 1)));
}

// 1-based ranks; tied values share the mean of the ranks they span.
inline std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = rank;
    i = j + 1;
  }
  return r;
}

// Pearson correlation of the two samples; 0 when either has no spread.
inline double pearson(std::span<const double> x, std::span<const double> y) {
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

inline double spearman_rho(std::span<const double> x, std::span<const double> y) {
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

// Two-sided p-value for a correlation coefficient over n samples.
inline double correlation_p_value(double rho, std::size_t n) {
  if (n < 3) return 1.0;
  if (std::abs(rho) >= 1.0) return 0.0;
  const double df = static_cast<double>(n - 2);
  const double t = rho * std::sqrt(df / (1.0 - rho * rho));
  boost::math::students_t dist(df);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
}

struct Homoscedasticity {
  double rho = 0.0;
  double p_value = 1.0;
};

// Spearman correlation between the paired differences and the pairwise means.
inline Homoscedasticity spearman_homoscedasticity(std::span<const PairedSample> pairs) {
  if (pairs.size() < 4) throw Error(ErrorCode::TooFewSamples, "Spearman test needs at least four pairs");
  std::vector<double> d, m;
  for (const auto& p : pairs) {
    d.push_back(p.difference());
    m.push_back(p.pair_mean());
  }
  Homoscedasticity h;
  h.rho = spearman_rho(d, m);
  h.p_value = correlation_p_value(h.rho, pairs.size());
  return h;
}

struct AgreementReport {
  Quantity quantity = Quantity::Pulse;
  double mae = 0.0;
  double rmse = 0.0;
  double medae = 0.0;
  double pct_error_mae = 0.0;
  double bias = 0.0;
  double sd = 0.0;
  double loa_low = 0.0;
  double loa_high = 0.0;
  std::optional<double> spearman_rho;
  std::optional<double> p_value;
  std::size_t n = 0;
  std::vector<double> means;        // Bland-Altman x
  std::vector<double> differences;  // Bland-Altman y
};

// Spearman fields stay empty below four pairs.
inline AgreementReport agreement_report(std::span<const PairedSample> pairs, Quantity q) {
  const ErrorMetrics e = error_metrics(pairs);
  const BlandAltman ba = bland_altman(pairs);
  AgreementReport r;
  r.quantity = q;
  r.n = pairs.size();
  r.mae = e.mae;
  r.rmse = e.rmse;
  r.medae = e.medae;
  r.pct_error_mae = e.pct_error;
  r.bias = ba.bias;
  r.sd = ba.sd;
  r.loa_low = ba.loa_low;
  r.loa_high = ba.loa_high;
  if (pairs.size() >= 4) {
    const Homoscedasticity h = spearman_homoscedasticity(pairs);
    r.spearman_rho = h.rho;
    r.p_value = h.p_value;
  }
  for (const auto& p : pairs) {
    r.means.push_back(p.pair_mean());
    r.differences.push_back(p.difference());
  }
  return r;
}

inline std::map<Quantity, std::vector<PairedSample>> group_by_quantity(std::span<const PairedSample> pairs) {
  std::map<Quantity, std::vector<PairedSample>> out;
  for (const auto& p : pairs) out[p.quantity].push_back(p);
  return out;
}

inline std::vector<PairedSample> exclude_subject(std::span<const PairedSample> pairs, std::string_view subject_id) {
  std::vector<PairedSample> out;
  for (const auto& p : pairs)
    if (p.subject_id != subject_id) out.push_back(p);
  return out;
}

// One report per quantity present, in enum order.
inline std::vector<AgreementReport> agreement_reports(std::span<const PairedSample> pairs) {
  std::vector<AgreementReport> out;
  for (auto& [q, group] : group_by_quantity(pairs)) out.push_back(agreement_report(group, q));
  return out;
}

}  // namespace vitals
