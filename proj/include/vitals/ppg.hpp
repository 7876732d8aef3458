#pragma once

// Streaming heart-rate estimation from the pulse (PPG) channel.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "vitals/error.hpp"
#include "vitals/filter.hpp"
#include "vitals/numeric.hpp"
#include "vitals/peaks.hpp"

namespace vitals {

struct HrvMetrics {
  double ppm = -1.0;
  double ibi_ms = -1.0;
  double freq_hz = -1.0;
  double sdnn_ms = -1.0;
  double rmssd_ms = -1.0;
  bool valid = false;

  static HrvMetrics invalid() { return {}; }

  bool operator==(const HrvMetrics&) const = default;
};

// Metrics from inter-beat intervals in milliseconds. One interval is enough
// for rate; SDNN and RMSSD read 0 until a second interval exists.
inline HrvMetrics hrv_from_intervals(std::span<const double> ibi_ms) {
  if (ibi_ms.empty()) return HrvMetrics::invalid();
  HrvMetrics m;
  m.valid = true;
  m.ibi_ms = mean(ibi_ms);
  m.ppm = 60000.0 / m.ibi_ms;
  m.freq_hz = m.ppm / 60.0;
  double ss = 0.0;
  for (double v : ibi_ms) ss += (v - m.ibi_ms) * (v - m.ibi_ms);
  m.sdnn_ms = std::sqrt(ss / static_cast<double>(ibi_ms.size()));
  double sd = 0.0;
  for (std::size_t i = 1; i < ibi_ms.size(); ++i) sd += (ibi_ms[i] - ibi_ms[i - 1]) * (ibi_ms[i] - ibi_ms[i - 1]);
  m.rmssd_ms = ibi_ms.size() > 1 ? std::sqrt(sd / static_cast<double>(ibi_ms.size() - 1)) : 0.0;
  return m;
}

inline HrvMetrics hrv_metrics(const PeakSet& beats, double fs_hz) {
  if (beats.size() < 2) return HrvMetrics::invalid();
  std::vector<double> ibi;
  ibi.reserve(beats.size() - 1);
  for (std::size_t i = 1; i < beats.size(); ++i)
    ibi.push_back(static_cast<double>(beats[i].index - beats[i - 1].index) * 1000.0 / fs_hz);
  return hrv_from_intervals(ibi);
}

// ceil(min_separation * fs), so rates above 60 / min_separation are never admitted.
inline std::size_t beat_min_distance(double fs_hz, double min_separation_s = 0.3) {
  return static_cast<std::size_t>(std::ceil(min_separation_s * fs_hz - 1e-9));
}

inline PeakSet detect_beats(std::span<const double> filtered, double fs_hz, double min_separation_s = 0.3) {
  PeakOptions opt;
  opt.min_distance = beat_min_distance(fs_hz, min_separation_s);
  opt.fs_hz = fs_hz;
  return find_peaks(filtered, opt);
}

enum class ProminenceVerdict { Accepted, TooLow, TooHigh };

// Accepted peaks of the trailing window and their mean prominence.
class BeatHistory {
 public:
  explicit BeatHistory(double window_s = 20.0, double low_ratio = 0.6, double high_ratio = 1.6)
      : window_s_(window_s), low_(low_ratio), high_(high_ratio) {}

  // Drops peaks that fall outside the window ending at now_s.
  void expire(double now_s) {
    while (!peaks_.empty() && peaks_.front().time_s < now_s - window_s_) {
      sum_ -= peaks_.front().prominence;
      peaks_.pop_front();
    }
    if (peaks_.empty()) sum_ = 0.0;
  }

  bool empty() const noexcept { return peaks_.empty(); }
  std::size_t size() const noexcept { return peaks_.size(); }
  double mean_prominence() const noexcept { return peaks_.empty() ? 0.0 : sum_ / static_cast<double>(peaks_.size()); }
  const std::deque<Peak>& peaks() const noexcept { return peaks_; }

  // Verdict for a candidate against the peaks accepted before it. An empty
  // window accepts anything.
  ProminenceVerdict judge(const Peak& p) {
    expire(p.time_s);
    if (peaks_.empty()) return ProminenceVerdict::Accepted;
    const double mu = mean_prominence();
    if (p.prominence < low_ * mu) return ProminenceVerdict::TooLow;
    if (p.prominence > high_ * mu) return ProminenceVerdict::TooHigh;
    return ProminenceVerdict::Accepted;
  }

  void admit(const Peak& p) {
    peaks_.push_back(p);
    sum_ += p.prominence;
  }

 private:
  double window_s_;
  double low_;
  double high_;
  std::deque<Peak> peaks_;
  double sum_ = 0.0;
};

// Per-candidate verdicts. When the history is empty on entry, the whole batch
// is accepted and seeds it; otherwise candidates are judged in order and each
// acceptance updates the window for the next.
inline std::vector<ProminenceVerdict> adaptive_prominence_classify(const PeakSet& candidates, BeatHistory& history) {
  std::vector<ProminenceVerdict> out;
  out.reserve(candidates.size());
  if (!candidates.empty()) history.expire(candidates.front().time_s);
  const bool seeding = history.empty();
  for (const Peak& p : candidates) {
    const ProminenceVerdict v = seeding ? ProminenceVerdict::Accepted : history.judge(p);
    if (v == ProminenceVerdict::Accepted) history.admit(p);
    out.push_back(v);
  }
  return out;
}

inline PeakSet adaptive_prominence_filter(const PeakSet& candidates, BeatHistory& history) {
  const auto verdicts = adaptive_prominence_classify(candidates, history);
  PeakSet kept;
  for (std::size_t i = 0; i < candidates.size(); ++i)
    if (verdicts[i] == ProminenceVerdict::Accepted) kept.push_back(candidates[i]);
  return kept;
}

struct PpgConfig {
  double fs_hz = 25.0;
  int lowpass_order = 4;
  double lowpass_cutoff_hz = 3.5;
  double min_beat_separation_s = 0.3;
  double prominence_window_s = 20.0;
  double prominence_low = 0.6;
  double prominence_high = 1.6;
  double buffer_s = 30.0;       // re-detection window
  double commit_lag_s = 2.0;    // peaks younger than this stay provisional
  double warmup_s = 20.0;       // signal seen before the first commit, one full history window
};

// Chunk-fed pipeline: stateful low-pass, re-detection over the trailing
// buffer, commit of matured peaks through the adaptive prominence rule.
//
// Intervals are only formed between consecutive accepted beats with no
// over-prominent (artifact) candidate between them; such a candidate may have
// masked a true beat through the distance rule.
class PpgPipeline {
 public:
  PpgPipeline() = default;
  explicit PpgPipeline(const PpgConfig& cfg) { init(cfg); }

  void init(const PpgConfig& cfg) {
    cfg_ = cfg;
    spec_ = design_butterworth_lowpass(cfg.lowpass_order, cfg.lowpass_cutoff_hz, cfg.fs_hz);
    state_ = FilterState::zeros(spec_);
    history_ = BeatHistory(cfg.prominence_window_s, cfg.prominence_low, cfg.prominence_high);
    buffer_.clear();
    buffer_start_ = 0;
    total_ = 0;
    last_considered_.reset();
    last_accepted_.reset();
    chain_broken_ = false;
    intervals_ms_.clear();
    accepted_.clear();
    rejected_.clear();
    first_sample_.reset();
    initialized_ = true;
  }

  bool initialized() const noexcept { return initialized_; }

  std::optional<HrvMetrics> push_chunk(std::span<const double> chunk) {
    if (!initialized_) throw Error(ErrorCode::NotInitialized, "PPG pipeline used before init");
    if (chunk.empty()) return current_if_ready();
    if (!first_sample_) {
      // Start from the steady state of the first reading so the sensor's DC
      // offset does not ring through the low-pass as a spurious beat.
      first_sample_ = chunk.front();
      state_ = steady_state(spec_, *first_sample_);
    }
    auto [filtered, next] = filter_stateful(spec_, std::move(state_), chunk);
    state_ = std::move(next);
    buffer_.insert(buffer_.end(), filtered.begin(), filtered.end());
    total_ += chunk.size();

    const auto cap = static_cast<std::size_t>(std::llround(cfg_.buffer_s * cfg_.fs_hz));
    if (buffer_.size() > cap) {
      const std::size_t drop = buffer_.size() - cap;
      buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(drop));
      buffer_start_ += drop;
    }
    if (static_cast<double>(total_) >= cfg_.warmup_s * cfg_.fs_hz) {
      const auto lag = static_cast<std::size_t>(std::llround(cfg_.commit_lag_s * cfg_.fs_hz));
      commit(lag);
    }
    return current_if_ready();
  }

  // Commits every remaining peak; call at end of stream.
  HrvMetrics finish() {
    if (!initialized_) throw Error(ErrorCode::NotInitialized, "PPG pipeline used before init");
    commit(1);
    return metrics();
  }

  HrvMetrics metrics() const { return hrv_from_intervals(intervals_ms_); }

  const PeakSet& accepted_beats() const noexcept { return accepted_; }
  const PeakSet& rejected_peaks() const noexcept { return rejected_; }
  const std::vector<double>& intervals_ms() const noexcept { return intervals_ms_; }
  const PpgConfig& config() const noexcept { return cfg_; }
  std::size_t samples_seen() const noexcept { return total_; }

 private:
  std::optional<HrvMetrics> current_if_ready() const {
    if (intervals_ms_.empty()) return std::nullopt;
    return metrics();
  }

  void commit(std::size_t lag) {
    if (buffer_.size() < 3) return;
    PeakSet found = detect_beats(buffer_, cfg_.fs_hz, cfg_.min_beat_separation_s);
    const std::size_t head = buffer_start_ + buffer_.size() - 1;
    PeakSet batch;
    for (Peak p : found) {
      const std::size_t abs = buffer_start_ + p.index;
      if (last_considered_ && abs <= *last_considered_) continue;
      if (abs + lag > head) break;
      if (last_accepted_ && abs - *last_accepted_ < beat_min_distance(cfg_.fs_hz, cfg_.min_beat_separation_s))
        continue;
      p.index = abs;
      p.time_s = static_cast<double>(abs) / cfg_.fs_hz;
      batch.push_back(p);
      last_considered_ = abs;
    }
    if (batch.empty()) return;
    history_.expire(batch.front().time_s);
    const auto verdicts = history_.empty() ? bootstrap(batch) : adaptive_prominence_classify(batch, history_);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const Peak& p = batch[i];
      switch (verdicts[i]) {
        case ProminenceVerdict::Accepted:
          if (last_accepted_ && !chain_broken_)
            intervals_ms_.push_back(static_cast<double>(p.index - *last_accepted_) * 1000.0 / cfg_.fs_hz);
          last_accepted_ = p.index;
          chain_broken_ = false;
          accepted_.push_back(p);
          break;
        case ProminenceVerdict::TooHigh:
          chain_broken_ = true;
          rejected_.push_back(p);
          break;
        case ProminenceVerdict::TooLow:
          rejected_.push_back(p);
          break;
      }
    }
  }

  // First pass seeds the history with every candidate; the rule is then
  // applied to those same candidates against the seeded mean and only the
  // survivors stay in the history.
  std::vector<ProminenceVerdict> bootstrap(const PeakSet& batch) {
    BeatHistory seed(cfg_.prominence_window_s, cfg_.prominence_low, cfg_.prominence_high);
    adaptive_prominence_filter(batch, seed);
    const double mu = seed.mean_prominence();
    std::vector<ProminenceVerdict> out;
    for (const Peak& p : batch) {
      const ProminenceVerdict v = p.prominence < cfg_.prominence_low * mu    ? ProminenceVerdict::TooLow
                                  : p.prominence > cfg_.prominence_high * mu ? ProminenceVerdict::TooHigh
                                                                             : ProminenceVerdict::Accepted;
      if (v == ProminenceVerdict::Accepted) history_.admit(p);
      out.push_back(v);
    }
    return out;
  }

  PpgConfig cfg_;
  FilterSpec spec_;
  FilterState state_;
  BeatHistory history_;
  std::vector<double> buffer_;
  std::size_t buffer_start_ = 0;
  std::size_t total_ = 0;
  std::optional<double> first_sample_;
  std::optional<std::size_t> last_considered_;
  std::optional<std::size_t> last_accepted_;
  bool chain_broken_ = false;
  std::vector<double> intervals_ms_;
  PeakSet accepted_;
  PeakSet rejected_;
  bool initialized_ = false;
};

}  // namespace vitals
