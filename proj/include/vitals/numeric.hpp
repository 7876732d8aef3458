#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <numeric>
#include <span>
#include <vector>

#include "vitals/error.hpp"

namespace vitals {

// Central differences scaled by fs; one-sided at the two endpoints.
inline std::vector<double> derivative(std::span<const double> signal, double fs_hz) {
  const std::size_t n = signal.size();
  if (n < 2) throw Error(ErrorCode::SignalTooShort, "derivative needs at least two samples");
  std::vector<double> d(n);
  d[0] = (signal[1] - signal[0]) * fs_hz;
  d[n - 1] = (signal[n - 1] - signal[n - 2]) * fs_hz;
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (signal[i + 1] - signal[i - 1]) * fs_hz * 0.5;
  return d;
}

inline double mean(std::span<const double> v) {
  if (v.empty()) throw Error(ErrorCode::EmptyInput, "mean of empty range");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw Error(ErrorCode::EmptyInput, "median of empty range");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

// Least-squares straight line; returns {slope, intercept}.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

inline LineFit fit_line(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw Error(ErrorCode::TooFewPoints, "line fit needs >= 2 points");
  const double mx = mean(xs), my = mean(ys);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0) throw Error(ErrorCode::NonMonotoneX, "line fit needs distinct x values");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

// Polynomial in the scaled variable u = (x - center) / scale, coefficients
// lowest power first.
struct Polynomial {
  std::vector<double> coeffs;
  double center = 0.0;
  double scale = 1.0;

  double operator()(double x) const {
    const double u = (x - center) / scale;
    double acc = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * u + *it;
    return acc;
  }
};

// Least-squares polynomial via Householder QR of the scaled Vandermonde matrix.
inline Polynomial polyfit(std::span<const double> xs, std::span<const double> ys, int degree) {
  if (degree < 0) throw Error(ErrorCode::InvalidArgument, "polynomial degree must be >= 0");
  if (xs.size() != ys.size()) throw Error(ErrorCode::InvalidArgument, "xs and ys differ in length");
  const std::size_t m = xs.size();
  const std::size_t n = static_cast<std::size_t>(degree) + 1;
  if (m < n) throw Error(ErrorCode::TooFewPoints, "polynomial fit needs at least degree+1 points");
  for (std::size_t i = 1; i < m; ++i)
    if (!(xs[i] > xs[i - 1])) throw Error(ErrorCode::NonMonotoneX, "xs must be strictly increasing");

  Polynomial p;
  p.center = 0.5 * (xs.front() + xs.back());
  p.scale = m > 1 ? 0.5 * (xs.back() - xs.front()) : 1.0;
  if (p.scale == 0.0) p.scale = 1.0;

  // Column-major A (m x n), right-hand side b.
  std::vector<double> a(m * n);
  std::vector<double> b(ys.begin(), ys.end());
  for (std::size_t i = 0; i < m; ++i) {
    const double u = (xs[i] - p.center) / p.scale;
    double pw = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      a[j * m + i] = pw;
      pw *= u;
    }
  }

  std::vector<double> diag(n);
  for (std::size_t j = 0; j < n; ++j) {
    double norm = 0.0;
    for (std::size_t i = j; i < m; ++i) norm += a[j * m + i] * a[j * m + i];
    norm = std::sqrt(norm);
    if (norm == 0.0) throw Error(ErrorCode::TooFewPoints, "rank-deficient polynomial fit");
    const double alpha = a[j * m + j] > 0.0 ? -norm : norm;
    // v = a_j - alpha e_j, stored in place
    a[j * m + j] -= alpha;
    double vnorm2 = 0.0;
    for (std::size_t i = j; i < m; ++i) vnorm2 += a[j * m + i] * a[j * m + i];
    diag[j] = alpha;
    if (vnorm2 == 0.0) continue;
    for (std::size_t k = j + 1; k < n; ++k) {
      double dot = 0.0;
      for (std::size_t i = j; i < m; ++i) dot += a[j * m + i] * a[k * m + i];
      const double f = 2.0 * dot / vnorm2;
      for (std::size_t i = j; i < m; ++i) a[k * m + i] -= f * a[j * m + i];
    }
    double dot = 0.0;
    for (std::size_t i = j; i < m; ++i) dot += a[j * m + i] * b[i];
    const double f = 2.0 * dot / vnorm2;
    for (std::size_t i = j; i < m; ++i) b[i] -= f * a[j * m + i];
  }

  p.coeffs.assign(n, 0.0);
  for (std::size_t jj = n; jj-- > 0;) {
    double acc = b[jj];
    for (std::size_t k = jj + 1; k < n; ++k) acc -= a[k * m + jj] * p.coeffs[k];
    p.coeffs[jj] = acc / diag[jj];
  }
  return p;
}

// Fitted polynomial evaluated back at xs.
inline std::vector<double> polyfit_smooth(std::span<const double> xs, std::span<const double> ys, int degree) {
  const Polynomial p = polyfit(xs, ys, degree);
  std::vector<double> out(xs.size());
  std::transform(xs.begin(), xs.end(), out.begin(), [&](double x) { return p(x); });
  return out;
}

namespace detail {

// Neighbourhood [lo, hi] of point i: all points within +-half_width in x,
// widened toward the nearer side until it holds min_points.
inline std::pair<std::size_t, std::size_t> local_window(std::span<const double> xs, std::size_t i, double half_width,
                                                        std::size_t min_points) {
  const std::size_t m = xs.size();
  std::size_t lo = i, hi = i;
  while (lo > 0 && xs[i] - xs[lo - 1] <= half_width) --lo;
  while (hi + 1 < m && xs[hi + 1] - xs[i] <= half_width) ++hi;
  while (hi - lo + 1 < min_points) {
    const bool can_left = lo > 0;
    const bool can_right = hi + 1 < m;
    if (can_left && (!can_right || xs[i] - xs[lo - 1] <= xs[hi + 1] - xs[i]))
      --lo;
    else
      ++hi;
  }
  return {lo, hi};
}

inline void require_local_fit(std::span<const double> xs, std::span<const double> ys, int degree) {
  if (degree < 0) throw Error(ErrorCode::InvalidArgument, "polynomial degree must be >= 0");
  if (xs.size() != ys.size()) throw Error(ErrorCode::InvalidArgument, "xs and ys differ in length");
  if (xs.size() < static_cast<std::size_t>(degree) + 1)
    throw Error(ErrorCode::TooFewPoints, "local fit needs at least degree+1 points");
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (!(xs[i] > xs[i - 1])) throw Error(ErrorCode::NonMonotoneX, "xs must be strictly increasing");
}

}  // namespace detail

// Local polynomial smoothing: each point is replaced by the value at that point
// of a least-squares fit of the given degree over its neighbours within
// +-half_width in x, the neighbourhood widened to at least min_points.
inline std::vector<double> local_polyfit_smooth(std::span<const double> xs, std::span<const double> ys, int degree,
                                                double half_width, std::size_t min_points) {
  detail::require_local_fit(xs, ys, degree);
  const std::size_t m = xs.size();
  min_points = std::clamp(min_points, static_cast<std::size_t>(degree) + 1, m);
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto [lo, hi] = detail::local_window(xs, i, half_width, min_points);
    const auto p = polyfit(xs.subspan(lo, hi - lo + 1), ys.subspan(lo, hi - lo + 1), degree);
    out[i] = p(xs[i]);
  }
  return out;
}

}  // namespace vitals
