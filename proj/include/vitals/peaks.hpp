#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

namespace vitals {

struct Peak {
  std::size_t index = 0;
  double time_s = 0.0;
  double value = 0.0;
  double prominence = 0.0;

  bool operator==(const Peak&) const = default;
};

// Ordered by strictly increasing index.
using PeakSet = std::vector<Peak>;

struct PeakOptions {
  std::size_t min_distance = 1;
  std::optional<double> min_height;
  std::optional<double> min_prominence;
  // Total width (samples) of the window the saddle search is confined to.
  std::optional<std::size_t> prominence_window;
  double fs_hz = 1.0;
};

// Topographic prominence of the peak at `peak`: height above the higher of the
// two lowest points reached before the signal climbs above the peak on either
// side. With a window, the search is restricted to [peak - w/2, peak + w/2].
inline double peak_prominence(std::span<const double> x, std::size_t peak,
                              std::optional<std::size_t> window = std::nullopt) {
  std::size_t lo = 0, hi = x.size() - 1;
  if (window && *window > 1) {
    const std::size_t half = *window / 2;
    lo = peak > half ? peak - half : 0;
    hi = std::min(x.size() - 1, peak + half);
  }
  const double h = x[peak];

  double left_min = h;
  for (std::size_t i = peak; i-- > lo;) {
    if (x[i] > h) break;
    left_min = std::min(left_min, x[i]);
  }
  double right_min = h;
  for (std::size_t i = peak + 1; i <= hi; ++i) {
    if (x[i] > h) break;
    right_min = std::min(right_min, x[i]);
  }
  return h - std::max(left_min, right_min);
}

// Strict local maxima filtered by height, then by distance (taller kept,
// earlier index wins ties), then by prominence.
inline PeakSet find_peaks(std::span<const double> x, const PeakOptions& opt = {}) {
  std::vector<std::size_t> cand;
  for (std::size_t i = 1; i + 1 < x.size(); ++i) {
    if (x[i] > x[i - 1] && x[i] > x[i + 1]) {
      if (opt.min_height && x[i] < *opt.min_height) continue;
      cand.push_back(i);
    }
  }

  const std::size_t dist = std::max<std::size_t>(opt.min_distance, 1);
  if (dist > 1 && cand.size() > 1) {
    std::vector<std::size_t> order(cand.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[cand[a]] > x[cand[b]]; });
    std::vector<bool> keep(cand.size(), true);
    for (std::size_t o : order) {
      if (!keep[o]) continue;
      for (std::size_t j = o; j-- > 0 && cand[o] - cand[j] < dist;) keep[j] = false;
      for (std::size_t j = o + 1; j < cand.size() && cand[j] - cand[o] < dist; ++j) keep[j] = false;
    }
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < cand.size(); ++i)
      if (keep[i]) kept.push_back(cand[i]);
    cand.swap(kept);
  }

  PeakSet out;
  out.reserve(cand.size());
  for (std::size_t i : cand) {
    const double prom = peak_prominence(x, i, opt.prominence_window);
    if (opt.min_prominence && prom < *opt.min_prominence) continue;
    out.push_back(Peak{i, static_cast<double>(i) / opt.fs_hz, x[i], prom});
  }
  return out;
}

}  // namespace vitals
