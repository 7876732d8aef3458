#pragma once

// Oscillometric blood-pressure estimation from one cuff-deflation trace.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "vitals/error.hpp"
#include "vitals/filter.hpp"
#include "vitals/numeric.hpp"
#include "vitals/peaks.hpp"
#include "vitals/trace.hpp"

namespace vitals {

enum class SmoothingMode { GlobalCubic, LocalCubic };

struct BpConfig {
  double band_low_hz = 0.5;
  double band_high_hz = 4.0;
  int fir_taps = 201;

  double hr_min_bpm = 40.0;
  double hr_max_bpm = 230.0;
  double histogram_bin_s = 0.090;
  std::size_t histogram_max_bins = 5;

  // Morphological filter on the derivative. Relative thresholds scale with
  // the largest derivative in the deflation segment; the absolute floor keeps
  // pure sensor noise from being read as pulses.
  double min_height_ratio = 0.05;
  double min_prominence_ratio = 0.10;
  double min_height_abs = 1.0;  // mmHg/s
  // Peaks closer than this fraction of the dominant pulse period (from the
  // derivative's autocorrelation) are thinned, taller first. 0 disables.
  double refractory_fraction = 0.6;

  double amplitude_window_s = 0.4;

  SmoothingMode smoothing = SmoothingMode::LocalCubic;
  int smoothing_degree = 3;
  double smoothing_half_width_mmhg = 20.0;
  std::size_t smoothing_min_points = 7;
  // The systolic flank, from the first peak to a few past the local maximum,
  // is refit with one global polynomial in sample index. 0 disables.
  int systolic_refit_degree = 4;
  std::size_t systolic_refit_overlap = 3;
  bool interpolate_crossings = true;

  double sbp_ratio = 0.88;
  double dbp_ratio = 0.42;

  double sbp_min = 70.0, sbp_max = 240.0;
  double dbp_min = 40.0, dbp_max = 140.0;

  // Deflation ends where the cuff falls faster than this over half a second.
  double release_slope_mmhg_s = -20.0;
};

enum class FailureReason { NoPeaks, ImplausibleSbp, ImplausibleDbp, TooFewGroupedPeaks };

constexpr std::string_view to_string(FailureReason r) {
  switch (r) {
    case FailureReason::NoPeaks: return "NoPeaks";
    case FailureReason::ImplausibleSbp: return "ImplausibleSbp";
    case FailureReason::ImplausibleDbp: return "ImplausibleDbp";
    case FailureReason::TooFewGroupedPeaks: return "TooFewGroupedPeaks";
  }
  return "?";
}

inline std::optional<FailureReason> parse_failure_reason(std::string_view s) {
  for (auto r : {FailureReason::NoPeaks, FailureReason::ImplausibleSbp, FailureReason::ImplausibleDbp,
                 FailureReason::TooFewGroupedPeaks})
    if (to_string(r) == s) return r;
  return std::nullopt;
}

struct VitalsEstimate {
  double hr_bpm = -1.0;
  double sbp_mmhg = -1.0;
  double dbp_mmhg = -1.0;
  double map_mmhg = -1.0;
  bool valid = false;
  std::optional<FailureReason> failure_reason;

  static VitalsEstimate failed(FailureReason r) {
    VitalsEstimate v;
    v.failure_reason = r;
    return v;
  }

  bool operator==(const VitalsEstimate&) const = default;
};

struct DistanceHistogram {
  std::vector<std::size_t> bin_edges;  // samples; bin i is [edges[i], edges[i+1])
  std::vector<std::size_t> counts;
  std::vector<std::size_t> selected_bins;
  std::pair<std::size_t, std::size_t> valid_range{0, 0};  // [first, second)

  bool in_range(std::size_t d) const noexcept { return d >= valid_range.first && d < valid_range.second; }
};

struct OscillometricEnvelope {
  PeakSet peaks;                              // on the derivative signal
  std::vector<std::size_t> foot_index;        // pulse foot preceding each peak
  std::vector<double> cuff_pressure_at_peak;  // raw cuff pressure at the foot
  std::vector<double> amplitude;
  std::vector<double> amplitude_smoothed;
  std::size_t map_index = 0;
  double map_mmhg = 0.0;
};

struct DeflationSegment {
  std::size_t begin = 0;  // first index of maximum cuff pressure
  std::size_t end = 0;    // one past the last controlled-deflation sample
};

inline std::size_t inflation_end_index(std::span<const double> cuff) {
  return static_cast<std::size_t>(std::max_element(cuff.begin(), cuff.end()) - cuff.begin());
}

inline DeflationSegment find_deflation_segment(const Trace& cuff, const BpConfig& cfg = {}) {
  require_processable(cuff);
  DeflationSegment seg;
  seg.begin = inflation_end_index(cuff.samples);
  seg.end = cuff.size();
  const auto lag = static_cast<std::size_t>(std::llround(0.5 * cuff.fs_hz));
  for (std::size_t i = seg.begin + lag; i < cuff.size(); ++i) {
    const double slope = (cuff.samples[i] - cuff.samples[i - lag]) / 0.5;
    if (slope < cfg.release_slope_mmhg_s) {
      seg.end = i - lag;
      break;
    }
  }
  return seg;
}

// Zero-phase band-pass of the whole cuff trace.
inline std::vector<double> preprocess(const Trace& cuff, const BpConfig& cfg = {}) {
  require_processable(cuff);
  if (cuff.channel != Channel::CuffPressure)
    throw Error(ErrorCode::InvalidArgument, "blood-pressure preprocessing expects a cuff pressure trace");
  const auto spec = design_fir_bandpass(cfg.band_low_hz, cfg.band_high_hz, cuff.fs_hz, cfg.fir_taps);
  return filter_zero_phase(spec, cuff.samples);
}

// Band-pass of the deflation plus short margins, zero elsewhere. The cuff
// baseline is first removed as the lower hull of straight-line fits to the end
// of inflation, the deflation and the start of release, so the corners between
// those phases do not ring through the filter as spurious pulses.
inline std::vector<double> preprocess_segment(const Trace& cuff, const DeflationSegment& seg,
                                              const BpConfig& cfg = {}) {
  if (cuff.channel != Channel::CuffPressure)
    throw Error(ErrorCode::InvalidArgument, "blood-pressure preprocessing expects a cuff pressure trace");
  const auto spec = design_fir_bandpass(cfg.band_low_hz, cfg.band_high_hz, cuff.fs_hz, cfg.fir_taps);
  const std::size_t n = cuff.size();
  const auto lead = static_cast<std::size_t>(std::llround(1.5 * cuff.fs_hz));
  const auto tail = static_cast<std::size_t>(std::llround(0.5 * cuff.fs_hz));
  const std::size_t lo = seg.begin - std::min(seg.begin, lead);
  const std::size_t hi = std::min(n, seg.end + tail);

  std::vector<LineFit> pieces;
  auto fit_piece = [&](std::size_t a, std::size_t b) {
    if (b < a + 2) return;
    std::vector<double> xs(b - a);
    for (std::size_t i = a; i < b; ++i) xs[i - a] = static_cast<double>(i);
    pieces.push_back(fit_line(xs, std::span<const double>(cuff.samples.data() + a, b - a)));
  };
  fit_piece(lo, seg.begin + 1);
  fit_piece(seg.begin, seg.end);
  fit_piece(seg.end, hi);

  std::vector<double> residual(hi - lo);
  for (std::size_t i = lo; i < hi; ++i) {
    double base = std::numeric_limits<double>::infinity();
    for (const LineFit& f : pieces) base = std::min(base, f.slope * static_cast<double>(i) + f.intercept);
    residual[i - lo] = cuff.samples[i] - (pieces.empty() ? 0.0 : base);
  }
  std::vector<double> out(n, 0.0);
  const auto filtered = filter_zero_phase(spec, residual);
  std::copy(filtered.begin(), filtered.end(), out.begin() + static_cast<std::ptrdiff_t>(lo));
  return out;
}

// 2 x the longest expected inter-beat interval.
inline std::size_t oscillation_prominence_window(double fs_hz, double hr_min_bpm = 40.0) {
  return static_cast<std::size_t>(std::llround(2.0 * 60.0 / hr_min_bpm * fs_hz));
}

// Pulse period in samples from the autocorrelation of d[begin, end): the
// shortest lag in the heart-rate range whose autocorrelation is a local
// maximum within 15% of the largest, so multiples of the period lose to it.
// 0 when the segment is too short.
inline std::size_t dominant_period(std::span<const double> d, std::size_t begin, std::size_t end, double fs_hz,
                                   const BpConfig& cfg = {}) {
  const auto lo = static_cast<std::size_t>(std::floor(60.0 / cfg.hr_max_bpm * fs_hz));
  const auto hi = static_cast<std::size_t>(std::llround(60.0 / cfg.hr_min_bpm * fs_hz));
  end = std::min(end, d.size());
  if (end <= begin || end - begin <= 2 * hi) return 0;
  std::vector<double> r(hi + 2, 0.0);
  for (std::size_t lag = lo - 1; lag <= hi + 1; ++lag) {
    double acc = 0.0;
    for (std::size_t i = begin; i + lag < end; ++i) acc += d[i] * d[i + lag];
    r[lag] = acc / static_cast<double>(end - begin - lag);
  }
  const double top = *std::max_element(r.begin() + static_cast<std::ptrdiff_t>(lo), r.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
  if (!(top > 0.0)) return 0;
  for (std::size_t lag = lo; lag <= hi; ++lag)
    if (r[lag] >= 0.85 * top && r[lag] >= r[lag - 1] && r[lag] >= r[lag + 1]) return lag;
  return 0;
}

inline PeakSet detect_oscillation_peaks(std::span<const double> d, double fs_hz, std::size_t inflation_end,
                                        const BpConfig& cfg = {},
                                        std::size_t segment_end = std::numeric_limits<std::size_t>::max()) {
  segment_end = std::min(segment_end, d.size());
  double dmax = 0.0;
  for (std::size_t i = std::min(inflation_end, segment_end); i < segment_end; ++i) dmax = std::max(dmax, std::abs(d[i]));

  PeakOptions opt;
  opt.fs_hz = fs_hz;
  opt.min_height = std::max(cfg.min_height_ratio * dmax, cfg.min_height_abs);
  opt.min_prominence = cfg.min_prominence_ratio * dmax;
  opt.prominence_window = oscillation_prominence_window(fs_hz, cfg.hr_min_bpm);
  if (cfg.refractory_fraction > 0.0) {
    // The period is read off the integrated derivative: the pulse waveform's
    // own autocorrelation has no strong half-period lobe.
    std::vector<double> level(d.size(), 0.0);
    const std::size_t b = std::min(inflation_end, segment_end);
    for (std::size_t i = b + 1; i < segment_end; ++i) level[i] = level[i - 1] + d[i] / fs_hz;
    if (segment_end > b) {
      const double m = std::accumulate(level.begin() + static_cast<std::ptrdiff_t>(b), level.begin() + static_cast<std::ptrdiff_t>(segment_end), 0.0) /
                       static_cast<double>(segment_end - b);
      for (std::size_t i = b; i < segment_end; ++i) level[i] -= m;
    }
    const std::size_t period = dominant_period(level, b, segment_end, fs_hz, cfg);
    opt.min_distance = static_cast<std::size_t>(std::llround(cfg.refractory_fraction * static_cast<double>(period)));
  }
  PeakSet all = find_peaks(d, opt);

  PeakSet out;
  for (const Peak& p : all)
    if (p.index > inflation_end && p.index < segment_end) out.push_back(p);
  return out;
}

inline DistanceHistogram make_distance_histogram(const PeakSet& peaks, double fs_hz, const BpConfig& cfg = {}) {
  DistanceHistogram h;
  const auto first = static_cast<std::size_t>(std::floor(60.0 / cfg.hr_max_bpm * fs_hz));
  const auto last = static_cast<std::size_t>(std::llround(60.0 / cfg.hr_min_bpm * fs_hz));
  const auto width = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.histogram_bin_s * fs_hz)));
  const std::size_t nbins = (last - first + width - 1) / width;
  for (std::size_t i = 0; i <= nbins; ++i) h.bin_edges.push_back(first + i * width);
  h.counts.assign(nbins, 0);
  for (std::size_t i = 1; i < peaks.size(); ++i) {
    const std::size_t d = peaks[i].index - peaks[i - 1].index;
    if (d < first || d >= h.bin_edges.back()) continue;
    ++h.counts[(d - first) / width];
  }

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < nbins; ++i)
    if (h.counts[i] > 0) order.push_back(i);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return h.counts[a] > h.counts[b]; });
  if (order.size() > cfg.histogram_max_bins) order.resize(cfg.histogram_max_bins);
  std::sort(order.begin(), order.end());
  h.selected_bins = order;
  if (!order.empty()) h.valid_range = {h.bin_edges[order.front()], h.bin_edges[order.back() + 1]};
  return h;
}

// Longest run of peaks whose successive distances fall in the histogram's
// valid range. A peak whose distances on both sides are out of range is
// skipped when the two distances together are in range.
inline std::pair<PeakSet, DistanceHistogram> distance_histogram_filter(const PeakSet& peaks, double fs_hz,
                                                                       const BpConfig& cfg = {}) {
  if (peaks.size() < 3) throw Error(ErrorCode::TooFewGroupedPeaks, "distance filter needs at least 3 peaks");
  DistanceHistogram h = make_distance_histogram(peaks, fs_hz, cfg);

  // next[i]: following member of i's run, or n when the run ends at i.
  const std::size_t n = peaks.size();
  std::vector<std::size_t> next(n, n);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (h.in_range(peaks[i + 1].index - peaks[i].index))
      next[i] = i + 1;
    else if (i + 2 < n && h.in_range(peaks[i + 2].index - peaks[i].index))
      next[i] = i + 2;
  }
  std::vector<std::size_t> run_len(n, 1);
  for (std::size_t i = n; i-- > 0;)
    if (next[i] < n) run_len[i] = 1 + run_len[next[i]];
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (run_len[i] > run_len[best]) best = i;

  PeakSet run;
  for (std::size_t i = best; i < n; i = next[i]) {
    run.push_back(peaks[i]);
    if (next[i] == n) break;
  }
  if (run.size() < 3) throw Error(ErrorCode::TooFewGroupedPeaks, "no run of 3 regularly spaced peaks");
  return {std::move(run), std::move(h)};
}

// Smoothed amplitudes indexed like `amplitude`; x is the peak time, which is
// monotone even when sensor noise perturbs the cuff readings.
inline std::vector<double> smooth_amplitudes(const PeakSet& peaks, std::span<const double> pressures,
                                            std::span<const double> amplitude, double fs_hz, const BpConfig& cfg) {
  std::vector<double> xs(peaks.size());
  for (std::size_t i = 0; i < peaks.size(); ++i) xs[i] = static_cast<double>(peaks[i].index) / fs_hz;
  if (cfg.smoothing == SmoothingMode::GlobalCubic) return polyfit_smooth(xs, amplitude, cfg.smoothing_degree);
  double rate = 1.0;
  if (peaks.size() >= 2) rate = std::max(0.1, std::abs(fit_line(xs, pressures).slope));
  return local_polyfit_smooth(xs, amplitude, cfg.smoothing_degree, cfg.smoothing_half_width_mmhg / rate,
                              cfg.smoothing_min_points);
}

inline OscillometricEnvelope build_envelope(const PeakSet& peaks, std::span<const double> filtered,
                                            const Trace& raw_cuff, const BpConfig& cfg = {}) {
  if (peaks.size() < 4) throw Error(ErrorCode::TooFewGroupedPeaks, "envelope needs at least 4 peaks");
  OscillometricEnvelope env;
  env.peaks = peaks;
  const auto w = static_cast<std::size_t>(std::llround(cfg.amplitude_window_s * raw_cuff.fs_hz));
  const std::size_t n = filtered.size();
  for (const Peak& p : peaks) {
    const std::size_t k = p.index;
    const std::size_t lo = k > w ? k - w : 0;
    const std::size_t hi = std::min(n - 1, k + w);
    const auto top = static_cast<std::size_t>(
        std::max_element(filtered.begin() + static_cast<std::ptrdiff_t>(k), filtered.begin() + static_cast<std::ptrdiff_t>(hi) + 1) -
        filtered.begin());
    const auto foot = static_cast<std::size_t>(
        std::min_element(filtered.begin() + static_cast<std::ptrdiff_t>(lo), filtered.begin() + static_cast<std::ptrdiff_t>(k) + 1) -
        filtered.begin());
    const double after = *std::min_element(filtered.begin() + static_cast<std::ptrdiff_t>(top),
                                           filtered.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
    env.foot_index.push_back(foot);
    env.cuff_pressure_at_peak.push_back(raw_cuff.samples[foot]);
    env.amplitude.push_back(filtered[top] - 0.5 * (filtered[foot] + after));
  }
  env.amplitude_smoothed =
      smooth_amplitudes(env.peaks, env.cuff_pressure_at_peak, env.amplitude, raw_cuff.fs_hz, cfg);
  auto& sm = env.amplitude_smoothed;
  if (cfg.systolic_refit_degree > 0) {
    const auto m0 = static_cast<std::size_t>(std::max_element(sm.begin(), sm.end()) - sm.begin());
    const std::size_t np = env.peaks.size();
    const std::size_t end = std::min(np, m0 + cfg.systolic_refit_overlap + 1);
    if (end >= static_cast<std::size_t>(cfg.systolic_refit_degree) + 2) {
      std::vector<double> xs(end);
      for (std::size_t i = 0; i < end; ++i) xs[i] = static_cast<double>(env.peaks[i].index);
      const auto fit = polyfit(xs, std::span<const double>(env.amplitude).subspan(0, end), cfg.systolic_refit_degree);
      for (std::size_t i = 0; i <= m0; ++i) sm[i] = fit(xs[i]);
    }
  }
  // max_element returns the first maximum: ties go to the higher-pressure peak.
  env.map_index = static_cast<std::size_t>(
      std::max_element(env.amplitude_smoothed.begin(), env.amplitude_smoothed.end()) - env.amplitude_smoothed.begin());
  env.map_mmhg = env.cuff_pressure_at_peak[env.map_index];
  return env;
}

struct BpReading {
  double sbp_mmhg = 0.0;
  double dbp_mmhg = 0.0;
  std::size_t sbp_index = 0;  // into the envelope's peak list
  std::size_t dbp_index = 0;
};

// SBP: nearest peak before MAP that, together with the peak before it, sits at
// or below sbp_ratio of the MAP amplitude. DBP: nearest peak after MAP that,
// together with the one after it, sits at or below dbp_ratio.
inline BpReading estimate_bp(const OscillometricEnvelope& env, const BpConfig& cfg = {}) {
  const auto& a = env.amplitude_smoothed;
  const std::size_t m = env.map_index;
  if (a.empty() || m == 0 || m + 1 >= a.size())
    throw Error(ErrorCode::ThresholdNotReached, "MAP needs at least one peak on each side");
  const double sbp_thr = cfg.sbp_ratio * a[m];
  const double dbp_thr = cfg.dbp_ratio * a[m];

  std::optional<std::size_t> s;
  for (std::size_t i = m - 1; i >= 1; --i) {
    if (a[i] <= sbp_thr && a[i - 1] <= sbp_thr) {
      s = i;
      break;
    }
  }
  if (!s) throw Error(ErrorCode::ThresholdNotReached, "systolic threshold not reached before MAP");

  std::optional<std::size_t> d;
  for (std::size_t i = m + 1; i + 1 < a.size(); ++i) {
    if (a[i] <= dbp_thr && a[i + 1] <= dbp_thr) {
      d = i;
      break;
    }
  }
  if (!d) throw Error(ErrorCode::ThresholdNotReached, "diastolic threshold not reached after MAP");
  const auto& pr = env.cuff_pressure_at_peak;
  // Pressure where the smoothed envelope crosses the threshold, between the
  // qualifying peak and its neighbour toward MAP.
  auto cross = [&](std::size_t i, std::size_t j, double thr) {
    if (!cfg.interpolate_crossings || a[j] <= a[i] || a[j] < thr) return pr[i];
    return pr[i] + (thr - a[i]) / (a[j] - a[i]) * (pr[j] - pr[i]);
  };
  return {cross(*s, *s + 1, sbp_thr), cross(*d, *d - 1, dbp_thr), *s, *d};
}

inline double estimate_hr_from_peaks(const PeakSet& peaks, double fs_hz) {
  if (peaks.size() < 2) throw Error(ErrorCode::InsufficientBeats, "heart rate needs at least 2 peaks");
  const double span = static_cast<double>(peaks.back().index - peaks.front().index);
  return 60.0 * fs_hz / (span / static_cast<double>(peaks.size() - 1));
}

inline VitalsEstimate validate(double sbp, double dbp, double hr, const BpConfig& cfg = {},
                               std::optional<double> map = std::nullopt) {
  if (!(sbp >= cfg.sbp_min && sbp <= cfg.sbp_max)) return VitalsEstimate::failed(FailureReason::ImplausibleSbp);
  if (!(dbp >= cfg.dbp_min && dbp <= cfg.dbp_max) || !(dbp < sbp))
    return VitalsEstimate::failed(FailureReason::ImplausibleDbp);
  if (map && !(*map > dbp && *map < sbp)) return VitalsEstimate::failed(FailureReason::ImplausibleDbp);
  VitalsEstimate v;
  v.valid = true;
  v.hr_bpm = hr;
  v.sbp_mmhg = sbp;
  v.dbp_mmhg = dbp;
  v.map_mmhg = map.value_or(dbp + (sbp - dbp) / 3.0);
  return v;
}

// Everything the pipeline computed on one trace, for debug dumps and plots.
struct BpAnalysis {
  VitalsEstimate estimate;
  DeflationSegment segment;
  std::vector<double> filtered;
  std::vector<double> derivative;
  PeakSet morphological_peaks;
  PeakSet grouped_peaks;
  std::optional<DistanceHistogram> histogram;
  std::optional<OscillometricEnvelope> envelope;
  std::optional<BpReading> reading;
};

inline BpAnalysis analyze_cuff_trace(const Trace& cuff, const BpConfig& cfg = {}) {
  require_processable(cuff);
  BpAnalysis r;
  r.segment = find_deflation_segment(cuff, cfg);
  r.filtered = preprocess_segment(cuff, r.segment, cfg);
  r.derivative = derivative(r.filtered, cuff.fs_hz);
  r.morphological_peaks = detect_oscillation_peaks(r.derivative, cuff.fs_hz, r.segment.begin, cfg, r.segment.end);
  if (r.morphological_peaks.empty()) {
    r.estimate = VitalsEstimate::failed(FailureReason::NoPeaks);
    return r;
  }
  try {
    auto [grouped, hist] = distance_histogram_filter(r.morphological_peaks, cuff.fs_hz, cfg);
    r.grouped_peaks = std::move(grouped);
    r.histogram = std::move(hist);
    r.envelope = build_envelope(r.grouped_peaks, r.filtered, cuff, cfg);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::TooFewGroupedPeaks) throw;
    r.estimate = VitalsEstimate::failed(FailureReason::TooFewGroupedPeaks);
    return r;
  }
  try {
    r.reading = estimate_bp(*r.envelope, cfg);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ThresholdNotReached) throw;
    const bool map_at_start = r.envelope->map_index == 0;
    const bool sbp_side = map_at_start || std::string_view(e.what()).find("systolic") != std::string_view::npos;
    r.estimate = VitalsEstimate::failed(sbp_side ? FailureReason::ImplausibleSbp : FailureReason::ImplausibleDbp);
    return r;
  }
  const PeakSet between(r.envelope->peaks.begin() + static_cast<std::ptrdiff_t>(r.reading->sbp_index),
                        r.envelope->peaks.begin() + static_cast<std::ptrdiff_t>(r.reading->dbp_index) + 1);
  const double hr = estimate_hr_from_peaks(between, cuff.fs_hz);
  r.estimate = validate(r.reading->sbp_mmhg, r.reading->dbp_mmhg, hr, cfg, r.envelope->map_mmhg);
  return r;
}

inline VitalsEstimate estimate_vitals(const Trace& cuff, const BpConfig& cfg = {}) {
  return analyze_cuff_trace(cuff, cfg).estimate;
}

// Raised after max_attempts consecutive invalid measurements.
struct DeceasedAlert {
  std::size_t attempts = 0;
  std::vector<VitalsEstimate> results;
};

struct MeasurementOutcome {
  std::variant<VitalsEstimate, DeceasedAlert> result;
  std::size_t attempts = 0;

  bool deceased() const noexcept { return std::holds_alternative<DeceasedAlert>(result); }
  const VitalsEstimate* estimate() const noexcept { return std::get_if<VitalsEstimate>(&result); }
};

// One cuff trace per attempt; nullopt from the source means it cannot supply one.
using TraceSource = std::function<std::optional<Trace>()>;

inline MeasurementOutcome run_measurement(const TraceSource& source, const BpConfig& cfg = {},
                                          std::size_t max_attempts = 3) {
  DeceasedAlert alert;
  for (std::size_t attempt = 1; attempt <= max_attempts; ++attempt) {
    std::optional<Trace> trace = source();
    if (!trace) throw Error(ErrorCode::SourceExhausted, "trace source has no trace for attempt " + std::to_string(attempt));
    VitalsEstimate est = estimate_vitals(*trace, cfg);
    if (est.valid) return {est, attempt};
    alert.results.push_back(est);
  }
  alert.attempts = max_attempts;
  return {alert, max_attempts};
}

}  // namespace vitals
