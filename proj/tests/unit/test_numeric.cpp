#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "vitals/numeric.hpp"

using namespace vitals;

namespace {

// Normal equations solved by Gaussian elimination with partial pivoting, in
// the same scaled variable as polyfit so the comparison is well conditioned.
std::vector<double> normal_equations_fit(const std::vector<double>& xs, const std::vector<double>& ys, int degree) {
  const std::size_t n = static_cast<std::size_t>(degree) + 1;
  std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
  for (std::size_t k = 0; k < xs.size(); ++k) {
    std::vector<double> pw(2 * n, 1.0);
    for (std::size_t j = 1; j < 2 * n; ++j) pw[j] = pw[j - 1] * xs[k];
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) a[r][c] += pw[r + c];
      a[r][n] += pw[r] * ys[k];
    }
  }
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k <= n; ++k) a[r][k] -= f * a[c][k];
    }
  }
  std::vector<double> coef(n);
  for (std::size_t r = 0; r < n; ++r) coef[r] = a[r][n] / a[r][r];
  return coef;
}

double eval(const std::vector<double>& c, double x) {
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
  return acc;
}

}  // namespace

TEST(Derivative, RampIsConstant) {
  std::vector<double> x(500);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 100.0 + 3.0 * static_cast<double>(i) / 100.0;
  const auto d = derivative(x, 100.0);
  for (std::size_t i = 1; i + 1 < d.size(); ++i) EXPECT_NEAR(d[i], 3.0, 1e-9);
}

TEST(Derivative, ConstantIsZero) {
  const auto d = derivative(std::vector<double>(50, 7.0), 100.0);
  for (double v : d) EXPECT_EQ(v, 0.0);
}

TEST(Derivative, SineMaximum) {
  std::vector<double> x(1000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / 100.0);
  const auto d = derivative(x, 100.0);
  const double mx = *std::max_element(d.begin(), d.end());
  EXPECT_NEAR(mx, 2.0 * std::numbers::pi, 2.0 * std::numbers::pi * 1e-3);
}

TEST(Derivative, TooShort) {
  EXPECT_THROW(derivative(std::vector<double>{1.0}, 100.0), Error);
}

TEST(Median, RobustToOutlier) {
  EXPECT_EQ(median({1.0, 2.0, 100.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 3.0, 2.0}), 2.5);
  EXPECT_THROW(median({}), Error);
}

TEST(Polyfit, CubicReproducedExactly) {
  std::vector<double> xs, ys;
  for (int i = 0; i < 30; ++i) {
    const double x = 40.0 + 5.0 * i;
    xs.push_back(x);
    ys.push_back(0.001 * x * x * x - 0.3 * x * x + 2.0 * x - 7.0);
  }
  const auto fit = polyfit_smooth(xs, ys, 3);
  for (std::size_t i = 0; i < ys.size(); ++i) EXPECT_NEAR(fit[i], ys[i], 1e-8 * std::max(1.0, std::abs(ys[i])));
}

TEST(Polyfit, NoisyCubicAgainstNormalEquations) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> xs, ys, us;
  auto cubic = [](double x) { return 0.5 * x * x * x - x * x + 3.0; };
  for (int i = 0; i < 50; ++i) {
    const double x = -2.0 + 4.0 * i / 49.0;
    xs.push_back(x);
    us.push_back(x);
    ys.push_back(cubic(x) + g(rng));
  }
  const auto fit = polyfit_smooth(xs, ys, 3);
  const auto ref = normal_equations_fit(us, ys, 3);
  double maxdev = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    EXPECT_NEAR(fit[i], eval(ref, xs[i]), 1e-9);
    maxdev = std::max(maxdev, std::abs(fit[i] - cubic(xs[i])));
  }
  EXPECT_LT(maxdev, 1.0);
}

TEST(Polyfit, ResidualIsMinimal) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> xs, ys;
  for (int i = 0; i < 40; ++i) {
    xs.push_back(i * 0.25);
    ys.push_back(std::sin(xs.back()) + 0.1 * g(rng));
  }
  const auto p = polyfit(xs, ys, 3);
  auto sse = [&](const Polynomial& q) {
    double s = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) s += (q(xs[i]) - ys[i]) * (q(xs[i]) - ys[i]);
    return s;
  };
  const double best = sse(p);
  for (std::size_t j = 0; j < p.coeffs.size(); ++j) {
    for (double eps : {-1e-3, 1e-3}) {
      Polynomial q = p;
      q.coeffs[j] += eps;
      EXPECT_GT(sse(q), best);
    }
  }
}

TEST(Polyfit, Idempotent) {
  std::vector<double> xs, ys;
  for (int i = 0; i < 25; ++i) {
    xs.push_back(i);
    ys.push_back(std::cos(0.3 * i));
  }
  const auto once = polyfit_smooth(xs, ys, 3);
  const auto twice = polyfit_smooth(xs, once, 3);
  for (std::size_t i = 0; i < xs.size(); ++i) EXPECT_NEAR(once[i], twice[i], 1e-8);
}

TEST(Polyfit, Errors) {
  try {
    polyfit_smooth(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooFewPoints);
  }
  try {
    polyfit_smooth(std::vector<double>{1, 3, 2, 4, 5}, std::vector<double>{1, 2, 3, 4, 5}, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonMonotoneX);
  }
}

TEST(LocalPolyfit, ReproducesCubicAnywhere) {
  std::vector<double> xs, ys;
  for (int i = 0; i < 60; ++i) {
    xs.push_back(i * 0.9);
    ys.push_back(0.01 * xs.back() * xs.back() * xs.back() - xs.back());
  }
  const auto s = local_polyfit_smooth(xs, ys, 3, 5.0, 7);
  for (std::size_t i = 0; i < ys.size(); ++i) EXPECT_NEAR(s[i], ys[i], 1e-7);
}

TEST(LocalPolyfit, WindowHonoursMinimumPoints) {
  const std::vector<double> xs = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  const auto [lo, hi] = detail::local_window(xs, 0, 0.5, 7);
  EXPECT_EQ(lo, 0u);
  EXPECT_EQ(hi, 6u);
  const auto [lo2, hi2] = detail::local_window(xs, 5, 1.0, 3);
  EXPECT_EQ(lo2, 4u);
  EXPECT_EQ(hi2, 6u);
}

TEST(FitLine, RecoversSlope) {
  std::vector<double> xs, ys;
  for (int i = 0; i < 100; ++i) {
    xs.push_back(i * 0.01);
    ys.push_back(190.0 - 4.0 * xs.back());
  }
  const auto f = fit_line(xs, ys);
  EXPECT_NEAR(f.slope, -4.0, 1e-9);
  EXPECT_NEAR(f.intercept, 190.0, 1e-9);
}
