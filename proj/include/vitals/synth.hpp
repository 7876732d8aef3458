#pragma once

// Ground-truth signal generators. Every trace is a pure function of its
// SynthSpec (seed included), and the quantities the pipelines estimate are
// returned analytically alongside it.

#include <cmath>
#include <cstdint>
#include <deque>
#include <numbers>
#include <random>
#include <vector>

#include "vitals/error.hpp"
#include "vitals/trace.hpp"

namespace vitals {

struct SynthSpec {
  double hr_bpm = 72.0;
  double sbp_mmhg = 121.0;
  double dbp_mmhg = 79.0;
  double map_mmhg = 95.0;
  double deflation_rate = 4.0;  // mmHg/s
  double fs_hz = 0.0;           // 0 selects the channel's nominal rate
  double noise_sigma = 0.0;     // mmHg for cuff traces, volts for PPG
  double artifact_rate = 0.0;   // spikes per minute (PPG)
  std::uint64_t seed = 1;

  double oscillation_mmhg = 3.0;  // pulse height at MAP
  double inflate_rate = 40.0;     // mmHg/s
  double deflation_stop_mmhg = 40.0;
  double release_rate = 60.0;     // mmHg/s
  double ppg_amplitude_v = 0.25;
  double ppg_baseline_v = 1.65;   // mid-rail of a 3.3 V supply
  double ppg_wander_v = 0.02;     // 0.1 Hz baseline wander
};

inline void validate(const SynthSpec& s) {
  if (!(s.hr_bpm >= 40.0 && s.hr_bpm <= 230.0)) throw Error(ErrorCode::InvalidSpec, "hr_bpm must lie in [40, 230]");
  if (!(s.dbp_mmhg < s.map_mmhg && s.map_mmhg < s.sbp_mmhg))
    throw Error(ErrorCode::InvalidSpec, "pressures must satisfy dbp < map < sbp");
  if (s.fs_hz < 0.0) throw Error(ErrorCode::InvalidSpec, "fs_hz must be positive");
  if (s.noise_sigma < 0.0 || s.artifact_rate < 0.0) throw Error(ErrorCode::InvalidSpec, "negative noise or rate");
}

// Unit-height pulse, peak at tau = 0: raised-cosine rise over 0.15 s and an
// exponential decay reaching 5% 0.45 s after the peak.
inline double pulse_shape(double tau) {
  constexpr double rise = 0.15;
  constexpr double decay_tc = 0.15;
  if (tau < -rise || tau > 1.5) return 0.0;
  if (tau <= 0.0) return 0.5 * (1.0 + std::cos(std::numbers::pi * tau / rise));
  return std::exp(-tau / decay_tc);
}
inline constexpr double k_pulse_rise_s = 0.15;
inline constexpr double k_pulse_extent_s = 1.5;

// Two-sided Gaussian in cuff pressure with widths solved so the envelope is
// exactly 0.88 of its peak at SBP and 0.42 at DBP.
struct OscillometricEnvelopeModel {
  double map_mmhg = 95.0;
  double sigma_left = 1.0;   // above MAP (systolic side)
  double sigma_right = 1.0;  // below MAP (diastolic side)

  static OscillometricEnvelopeModel solve(double sbp, double map, double dbp, double sbp_ratio = 0.88,
                                          double dbp_ratio = 0.42) {
    OscillometricEnvelopeModel m;
    m.map_mmhg = map;
    m.sigma_left = (sbp - map) / std::sqrt(-2.0 * std::log(sbp_ratio));
    m.sigma_right = (map - dbp) / std::sqrt(-2.0 * std::log(dbp_ratio));
    return m;
  }

  double operator()(double p) const {
    const double s = p >= map_mmhg ? sigma_left : sigma_right;
    const double u = (p - map_mmhg) / s;
    return std::exp(-0.5 * u * u);
  }
};

struct PpgSynthesis {
  Trace trace;
  std::vector<double> beat_times;      // pulse peak times, s
  std::vector<double> artifact_times;  // spike centres, s
};

inline PpgSynthesis synth_ppg(const SynthSpec& spec, double duration_s) {
  validate(spec);
  if (duration_s < 10.0) throw Error(ErrorCode::InvalidSpec, "PPG synthesis needs at least 10 s");
  const double fs = spec.fs_hz > 0.0 ? spec.fs_hz : nominal_rate_hz(Channel::PpgRaw);
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  PpgSynthesis out;
  const double period = 60.0 / spec.hr_bpm;
  const double phase = 0.3 + unit(rng) * period;
  for (double t = phase; t < duration_s; t += period) out.beat_times.push_back(t);

  if (spec.artifact_rate > 0.0) {
    std::exponential_distribution<double> gap(spec.artifact_rate / 60.0);
    for (double t = 1.0 + gap(rng); t < duration_s - 1.0; t += gap(rng)) out.artifact_times.push_back(t);
  }
  const double wander_phase = unit(rng) * 2.0 * std::numbers::pi;

  constexpr double spike_sigma = 0.04;
  const double spike_height = 4.0 * spec.ppg_amplitude_v;
  const auto n = static_cast<std::size_t>(std::llround(duration_s * fs));
  out.trace.channel = Channel::PpgRaw;
  out.trace.fs_hz = fs;
  out.trace.samples.resize(n);
  std::size_t first_beat = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    double v = spec.ppg_baseline_v + spec.ppg_wander_v * std::sin(2.0 * std::numbers::pi * 0.1 * t + wander_phase);
    while (first_beat < out.beat_times.size() && out.beat_times[first_beat] + k_pulse_extent_s < t) ++first_beat;
    for (std::size_t b = first_beat; b < out.beat_times.size() && out.beat_times[b] - k_pulse_rise_s <= t; ++b)
      v += spec.ppg_amplitude_v * pulse_shape(t - out.beat_times[b]);
    for (double ta : out.artifact_times) {
      const double u = (t - ta) / spike_sigma;
      if (std::abs(u) < 6.0) v += spike_height * std::exp(-0.5 * u * u);
    }
    out.trace.samples[i] = v + spec.noise_sigma * noise(rng);
  }
  return out;
}

struct OscillometricTruth {
  double hr_bpm = 0.0;
  double sbp_mmhg = 0.0;
  double dbp_mmhg = 0.0;
  double map_mmhg = 0.0;
  OscillometricEnvelopeModel envelope;
  std::vector<double> beat_times;  // pulse onset times, s
  double inflation_end_s = 0.0;
  double deflation_end_s = 0.0;
};

struct OscillometricSynthesis {
  Trace trace;
  OscillometricTruth truth;
};

// Cuff baseline: rest, inflate, linear deflation to the stop pressure, release.
struct CuffProfile {
  double rest_s = 1.0;
  double inflate_to = 190.0;
  double inflate_rate = 40.0;
  double deflation_rate = 4.0;
  double stop_mmhg = 40.0;
  double release_rate = 60.0;

  double inflation_end() const { return rest_s + inflate_to / inflate_rate; }
  double deflation_end() const { return inflation_end() + (inflate_to - stop_mmhg) / deflation_rate; }
  double release_end() const { return deflation_end() + stop_mmhg / release_rate; }
  double total() const { return release_end() + rest_s; }

  double operator()(double t) const {
    if (t < rest_s) return 0.0;
    if (t < inflation_end()) return (t - rest_s) * inflate_rate;
    if (t < deflation_end()) return inflate_to - (t - inflation_end()) * deflation_rate;
    if (t < release_end()) return stop_mmhg - (t - deflation_end()) * release_rate;
    return 0.0;
  }
};

// Pulse train riding on a cuff whose pressure the caller supplies as time
// advances; each beat's height is fixed by the envelope at its onset. Query
// times must be non-decreasing.
class CuffOscillator {
 public:
  CuffOscillator(double hr_bpm, double height_mmhg, OscillometricEnvelopeModel env, double first_onset_s)
      : period_(60.0 / hr_bpm), height_(height_mmhg), env_(env), next_onset_(first_onset_s) {}

  double operator()(double t_s, double cuff_mmhg) {
    while (next_onset_ <= t_s) {
      active_.push_back({next_onset_, height_ * env_(cuff_mmhg)});
      onsets_.push_back(next_onset_);
      next_onset_ += period_;
    }
    while (!active_.empty() && active_.front().onset + k_pulse_rise_s + k_pulse_extent_s < t_s) active_.pop_front();
    double v = 0.0;
    for (const auto& b : active_) v += b.height * pulse_shape(t_s - b.onset - k_pulse_rise_s);
    return v;
  }

  const std::vector<double>& onsets() const noexcept { return onsets_; }

 private:
  struct Beat {
    double onset;
    double height;
  };
  double period_;
  double height_;
  OscillometricEnvelopeModel env_;
  double next_onset_;
  std::deque<Beat> active_;
  std::vector<double> onsets_;
};

inline OscillometricSynthesis synth_oscillometric(const SynthSpec& spec, double inflate_to = 190.0) {
  validate(spec);
  if (!(spec.deflation_rate >= 3.0 && spec.deflation_rate <= 5.0))
    throw Error(ErrorCode::InvalidSpec, "deflation_rate must lie in [3, 5] mmHg/s");
  if (!(spec.sbp_mmhg < inflate_to) || !(spec.dbp_mmhg > spec.deflation_stop_mmhg))
    throw Error(ErrorCode::InfeasibleEnvelope, "SBP/DBP crossings fall outside the recorded deflation range");

  const double fs = spec.fs_hz > 0.0 ? spec.fs_hz : nominal_rate_hz(Channel::CuffPressure);
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  CuffProfile profile;
  profile.inflate_to = inflate_to;
  profile.inflate_rate = spec.inflate_rate;
  profile.deflation_rate = spec.deflation_rate;
  profile.stop_mmhg = spec.deflation_stop_mmhg;
  profile.release_rate = spec.release_rate;

  OscillometricSynthesis out;
  out.truth.hr_bpm = spec.hr_bpm;
  out.truth.sbp_mmhg = spec.sbp_mmhg;
  out.truth.dbp_mmhg = spec.dbp_mmhg;
  out.truth.map_mmhg = spec.map_mmhg;
  out.truth.envelope = OscillometricEnvelopeModel::solve(spec.sbp_mmhg, spec.map_mmhg, spec.dbp_mmhg);
  out.truth.inflation_end_s = profile.inflation_end();
  out.truth.deflation_end_s = profile.deflation_end();

  CuffOscillator osc(spec.hr_bpm, spec.oscillation_mmhg, out.truth.envelope, unit(rng) * 60.0 / spec.hr_bpm);
  const auto n = static_cast<std::size_t>(std::llround(profile.total() * fs));
  out.trace.channel = Channel::CuffPressure;
  out.trace.fs_hz = fs;
  out.trace.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    const double base = profile(t);
    out.trace.samples[i] = base + osc(t, base) + spec.noise_sigma * noise(rng);
  }
  out.truth.beat_times = osc.onsets();
  return out;
}

// Pulseless cuff cycle (a mannequin arm): same pressure profile, noise only.
inline Trace synth_mannequin(double duration_s, double fs_hz = 100.0, double noise_sigma = 0.3,
                             std::uint64_t seed = 1, double deflation_rate = 4.0) {
  if (duration_s < 10.0) throw Error(ErrorCode::InvalidSpec, "mannequin trace needs at least 10 s");
  CuffProfile profile;
  profile.deflation_rate = deflation_rate;
  const double total = std::max(duration_s, profile.total());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  Trace t;
  t.channel = Channel::CuffPressure;
  t.fs_hz = fs_hz;
  const auto n = static_cast<std::size_t>(std::llround(total * fs_hz));
  t.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) t.samples[i] = profile(static_cast<double>(i) / fs_hz) + noise_sigma * noise(rng);
  return t;
}

}  // namespace vitals
