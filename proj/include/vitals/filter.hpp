#pragma once

// Filter design and application: Butterworth low-pass as cascaded biquads,
// Hamming-windowed FIR band-pass, stateful chunked filtering and zero-phase
// (forward-backward) filtering.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "vitals/error.hpp"

namespace vitals {

enum class FilterKind { IirButterworthLowpass, FirBandpass };

// Normalized biquad, a0 == 1. First-order sections carry b2 == a2 == 0.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;

  // Both poles strictly inside the unit circle (Jury criterion for z^2 + a1 z + a2).
  bool stable() const noexcept { return std::abs(a2) < 1.0 && std::abs(a1) < 1.0 + a2; }
};

struct FilterSpec {
  FilterKind kind = FilterKind::IirButterworthLowpass;
  int order_or_taps = 0;
  std::vector<double> corner_hz;
  double fs_hz = 0.0;
  std::vector<Biquad> sections;  // IIR only
  std::vector<double> taps;      // FIR only

  // Number of delay-line values a FilterState needs.
  std::size_t state_size() const noexcept {
    return kind == FilterKind::FirBandpass ? (taps.empty() ? 0 : taps.size() - 1) : 2 * sections.size();
  }

  // Samples of input the filter remembers; used for the zero-phase length check.
  std::size_t memory() const noexcept {
    return kind == FilterKind::FirBandpass ? state_size() : static_cast<std::size_t>(order_or_taps);
  }

  // Reflection pad used by filter_zero_phase.
  std::size_t padding() const noexcept {
    return kind == FilterKind::FirBandpass ? taps.size() : 3 * (static_cast<std::size_t>(order_or_taps) + 1);
  }

  bool stable() const noexcept {
    return std::all_of(sections.begin(), sections.end(), [](const Biquad& s) { return s.stable(); });
  }
};

// Delay line: two transposed-direct-form-II values per section (IIR), or the
// most recent inputs, newest first (FIR).
struct FilterState {
  std::vector<double> z;

  static FilterState zeros(const FilterSpec& spec) { return FilterState{std::vector<double>(spec.state_size(), 0.0)}; }

  bool operator==(const FilterState&) const = default;
};

inline FilterSpec design_butterworth_lowpass(int order, double cutoff_hz, double fs_hz) {
  if (order < 1) throw Error(ErrorCode::InvalidArgument, "Butterworth order must be >= 1");
  if (!(fs_hz > 0.0)) throw Error(ErrorCode::InvalidArgument, "sample rate must be positive");
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < fs_hz / 2.0))
    throw Error(ErrorCode::InvalidCorner, "cutoff must lie in (0, fs/2)");

  FilterSpec spec;
  spec.kind = FilterKind::IirButterworthLowpass;
  spec.order_or_taps = order;
  spec.corner_hz = {cutoff_hz};
  spec.fs_hz = fs_hz;

  // Prewarped bilinear transform: the analog corner maps exactly onto cutoff_hz.
  const double k = std::tan(std::numbers::pi * cutoff_hz / fs_hz);
  const double k2 = k * k;
  for (int i = 0; i < order / 2; ++i) {
    const double theta = std::numbers::pi * (2.0 * i + 1.0) / (2.0 * order);
    const double inv_q = 2.0 * std::cos(theta);  // 1/Q of the conjugate pole pair
    const double norm = 1.0 / (1.0 + k * inv_q + k2);
    Biquad s;
    s.b0 = k2 * norm;
    s.b1 = 2.0 * s.b0;
    s.b2 = s.b0;
    s.a1 = 2.0 * (k2 - 1.0) * norm;
    s.a2 = (1.0 - k * inv_q + k2) * norm;
    spec.sections.push_back(s);
  }
  if (order % 2 == 1) {
    Biquad s;
    s.b0 = k / (1.0 + k);
    s.b1 = s.b0;
    s.a1 = (k - 1.0) / (k + 1.0);
    spec.sections.push_back(s);
  }
  return spec;
}

namespace detail {

inline double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

// Hamming-windowed sinc low-pass normalized to unit DC gain.
inline std::vector<double> windowed_lowpass(double cutoff_hz, double fs_hz, int taps) {
  std::vector<double> h(static_cast<std::size_t>(taps));
  const double fc = cutoff_hz / fs_hz;
  const double mid = (taps - 1) / 2.0;
  double sum = 0.0;
  for (int n = 0; n < taps; ++n) {
    const double w = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / (taps - 1));
    h[n] = 2.0 * fc * sinc(2.0 * fc * (n - mid)) * w;
    sum += h[n];
  }
  for (double& v : h) v /= sum;
  return h;
}

}  // namespace detail

inline FilterSpec design_fir_bandpass(double low_hz, double high_hz, double fs_hz, int taps = 201) {
  if (!(fs_hz > 0.0)) throw Error(ErrorCode::InvalidArgument, "sample rate must be positive");
  if (!(low_hz > 0.0) || !(low_hz < high_hz) || !(high_hz < fs_hz / 2.0))
    throw Error(ErrorCode::InvalidCorner, "band corners must satisfy 0 < low < high < fs/2");
  if (taps % 2 == 0) throw Error(ErrorCode::EvenTaps, "FIR band-pass needs an odd tap count");
  if (taps < 3) throw Error(ErrorCode::InvalidArgument, "FIR band-pass needs at least 3 taps");

  FilterSpec spec;
  spec.kind = FilterKind::FirBandpass;
  spec.order_or_taps = taps;
  spec.corner_hz = {low_hz, high_hz};
  spec.fs_hz = fs_hz;
  const auto hi = detail::windowed_lowpass(high_hz, fs_hz, taps);
  const auto lo = detail::windowed_lowpass(low_hz, fs_hz, taps);
  spec.taps.resize(hi.size());
  for (std::size_t i = 0; i < hi.size(); ++i) spec.taps[i] = hi[i] - lo[i];
  return spec;
}

// Complex response at freq_hz, evaluated from the coefficients.
inline std::complex<double> frequency_response(const FilterSpec& spec, double freq_hz) {
  const double w = 2.0 * std::numbers::pi * freq_hz / spec.fs_hz;
  const std::complex<double> zinv = std::polar(1.0, -w);
  if (spec.kind == FilterKind::FirBandpass) {
    std::complex<double> acc = 0.0, zk = 1.0;
    for (double h : spec.taps) {
      acc += h * zk;
      zk *= zinv;
    }
    return acc;
  }
  std::complex<double> total = 1.0;
  for (const auto& s : spec.sections) {
    const auto num = s.b0 + s.b1 * zinv + s.b2 * zinv * zinv;
    const auto den = 1.0 + s.a1 * zinv + s.a2 * zinv * zinv;
    total *= num / den;
  }
  return total;
}

inline double magnitude_response(const FilterSpec& spec, double freq_hz) {
  return std::abs(frequency_response(spec, freq_hz));
}

// Filters `in` into `out` (same length), advancing `state` in place.
inline void filter_into(const FilterSpec& spec, FilterState& state, std::span<const double> in,
                        std::span<double> out) {
  if (state.z.size() != spec.state_size())
    throw Error(ErrorCode::StateShapeMismatch, "filter state does not match filter spec");
  if (out.size() != in.size()) throw Error(ErrorCode::InvalidArgument, "output span length mismatch");

  if (spec.kind == FilterKind::FirBandpass) {
    const auto& h = spec.taps;
    auto& hist = state.z;  // hist[0] is x[n-1]
    const std::size_t m = hist.size();
    for (std::size_t n = 0; n < in.size(); ++n) {
      double acc = h[0] * in[n];
      for (std::size_t k = 1; k <= m; ++k) acc += h[k] * hist[k - 1];
      out[n] = acc;
      if (m > 0) {
        std::copy_backward(hist.begin(), hist.end() - 1, hist.end());
        hist[0] = in[n];
      }
    }
    return;
  }

  auto& z = state.z;
  for (std::size_t n = 0; n < in.size(); ++n) {
    double x = in[n];
    for (std::size_t s = 0; s < spec.sections.size(); ++s) {
      const Biquad& q = spec.sections[s];
      double& z1 = z[2 * s];
      double& z2 = z[2 * s + 1];
      const double y = q.b0 * x + z1;
      z1 = q.b1 * x - q.a1 * y + z2;
      z2 = q.b2 * x - q.a2 * y;
      x = y;
    }
    out[n] = x;
  }
}

inline std::pair<std::vector<double>, FilterState> filter_stateful(const FilterSpec& spec, FilterState state,
                                                                   std::span<const double> chunk) {
  std::vector<double> out(chunk.size());
  filter_into(spec, state, chunk, out);
  return {std::move(out), std::move(state)};
}

// State that makes the filter output steady when fed a constant `value`.
inline FilterState steady_state(const FilterSpec& spec, double value) {
  FilterState st = FilterState::zeros(spec);
  if (spec.kind == FilterKind::FirBandpass) {
    std::fill(st.z.begin(), st.z.end(), value);
    return st;
  }
  double u = value;
  for (std::size_t s = 0; s < spec.sections.size(); ++s) {
    const Biquad& q = spec.sections[s];
    const double g = (q.b0 + q.b1 + q.b2) / (1.0 + q.a1 + q.a2);
    const double y = g * u;
    const double z2 = q.b2 * u - q.a2 * y;
    st.z[2 * s] = q.b1 * u - q.a1 * y + z2;
    st.z[2 * s + 1] = z2;
    u = y;
  }
  return st;
}

// Forward-backward filtering with odd reflection padding at both ends.
inline std::vector<double> filter_zero_phase(const FilterSpec& spec, std::span<const double> signal) {
  const std::size_t n = signal.size();
  const std::size_t pad = spec.padding();
  if (n <= 3 * spec.memory() || n <= pad)
    throw Error(ErrorCode::SignalTooShort, "signal must be longer than three filter memories");

  std::vector<double> ext(n + 2 * pad);
  const double first = signal.front();
  const double last = signal.back();
  for (std::size_t i = 0; i < pad; ++i) {
    ext[i] = 2.0 * first - signal[pad - i];
    ext[pad + n + i] = 2.0 * last - signal[n - 2 - i];
  }
  std::copy(signal.begin(), signal.end(), ext.begin() + static_cast<std::ptrdiff_t>(pad));

  std::vector<double> fwd(ext.size());
  FilterState st = steady_state(spec, ext.front());
  filter_into(spec, st, ext, fwd);

  std::reverse(fwd.begin(), fwd.end());
  std::vector<double> bwd(fwd.size());
  st = steady_state(spec, fwd.front());
  filter_into(spec, st, fwd, bwd);
  std::reverse(bwd.begin(), bwd.end());

  return {bwd.begin() + static_cast<std::ptrdiff_t>(pad), bwd.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

}  // namespace vitals
