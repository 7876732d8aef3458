#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "vitals/io.hpp"
#include "vitals/ppg.hpp"
#include "vitals/synth.hpp"

using namespace vitals;

namespace {

Peak peak_at(double t, double prominence) {
  Peak p;
  p.time_s = t;
  p.index = static_cast<std::size_t>(std::llround(t * 25.0));
  p.prominence = prominence;
  return p;
}

HrvMetrics run_chunks(const std::vector<double>& x, std::size_t chunk, PpgPipeline& pipe) {
  for (std::size_t i = 0; i < x.size(); i += chunk)
    pipe.push_chunk(std::span<const double>(x).subspan(i, std::min(chunk, x.size() - i)));
  return pipe.finish();
}

}  // namespace

TEST(BeatDistance, CeilOfSeparation) {
  EXPECT_EQ(beat_min_distance(25.0, 0.3), 8u);
  EXPECT_EQ(beat_min_distance(100.0, 0.3), 30u);
  EXPECT_EQ(beat_min_distance(20.0, 0.3), 6u);
}

TEST(Hrv, ThreeIntervals) {
  const std::vector<double> ibi = {800.0, 900.0, 800.0};
  const auto m = hrv_from_intervals(ibi);
  ASSERT_TRUE(m.valid);
  EXPECT_NEAR(m.ibi_ms, 833.333333, 1e-5);
  EXPECT_NEAR(m.ppm, 72.0, 1e-9);
  EXPECT_NEAR(m.freq_hz, 1.2, 1e-12);
  EXPECT_NEAR(m.sdnn_ms, 47.140452, 1e-5);
  EXPECT_NEAR(m.rmssd_ms, 100.0, 1e-9);
}

TEST(Hrv, RateTimesIntervalIsMinute) {
  for (double ibi : {250.0, 333.0, 612.5, 1000.0, 1500.0}) {
    const std::vector<double> v = {ibi, ibi * 1.1, ibi * 0.95};
    const auto m = hrv_from_intervals(v);
    EXPECT_NEAR(m.ppm * m.ibi_ms, 60000.0, 1e-6);
    EXPECT_NEAR(m.freq_hz * 60.0, m.ppm, 1e-9);
  }
}

TEST(Hrv, SingleIntervalHasZeroVariability) {
  const auto m = hrv_from_intervals(std::vector<double>{800.0});
  EXPECT_TRUE(m.valid);
  EXPECT_EQ(m.sdnn_ms, 0.0);
  EXPECT_EQ(m.rmssd_ms, 0.0);
}

TEST(Hrv, NoIntervalsIsInvalidSentinel) {
  const auto m = hrv_from_intervals(std::vector<double>{});
  EXPECT_FALSE(m.valid);
  EXPECT_EQ(m.ppm, -1.0);
  EXPECT_EQ(m.ibi_ms, -1.0);
  EXPECT_EQ(m.freq_hz, -1.0);
  EXPECT_EQ(m.sdnn_ms, -1.0);
  EXPECT_EQ(m.rmssd_ms, -1.0);
}

TEST(Hrv, SentinelSurvivesJson) {
  const auto m = HrvMetrics::invalid();
  const auto back = metrics_from_json(json::parse(to_json(m).dump()));
  EXPECT_EQ(back, m);
  const auto v = hrv_from_intervals(std::vector<double>{812.0, 790.0});
  EXPECT_EQ(metrics_from_json(json::parse(to_json(v).dump())), v);
}

TEST(Prominence, BandAroundHistoryMean) {
  BeatHistory h(20.0, 0.6, 1.6);
  for (int i = 0; i < 10; ++i) h.admit(peak_at(i * 0.8, 10.0));
  const PeakSet cand = {peak_at(8.5, 5.0), peak_at(9.3, 14.0), peak_at(10.1, 17.0)};
  const auto v = adaptive_prominence_classify(cand, h);
  EXPECT_EQ(v[0], ProminenceVerdict::TooLow);
  EXPECT_EQ(v[1], ProminenceVerdict::Accepted);
  EXPECT_EQ(v[2], ProminenceVerdict::TooHigh);
}

TEST(Prominence, EmptyHistoryAcceptsAll) {
  BeatHistory h;
  const PeakSet cand = {peak_at(1.0, 5.0), peak_at(2.0, 50.0), peak_at(3.0, 0.1)};
  const auto kept = adaptive_prominence_filter(cand, h);
  EXPECT_EQ(kept.size(), 3u);
  EXPECT_EQ(h.size(), 3u);
}

TEST(Prominence, WindowExpires) {
  BeatHistory h(20.0, 0.6, 1.6);
  h.admit(peak_at(0.0, 10.0));
  h.admit(peak_at(1.0, 10.0));
  h.expire(20.5);
  EXPECT_EQ(h.size(), 1u);
  h.expire(40.0);
  EXPECT_TRUE(h.empty());
  EXPECT_EQ(h.mean_prominence(), 0.0);
}

TEST(Prominence, AcceptedAlwaysWithinBand) {
  BeatHistory h(20.0, 0.6, 1.6);
  for (int i = 0; i < 5; ++i) h.admit(peak_at(i * 0.8, 10.0));
  PeakSet cand;
  for (int i = 0; i < 40; ++i) cand.push_back(peak_at(4.0 + i * 0.8, 4.0 + (i * 7 % 15)));
  BeatHistory tracker = h;
  const auto verdicts = adaptive_prominence_classify(cand, h);
  for (std::size_t i = 0; i < cand.size(); ++i) {
    tracker.expire(cand[i].time_s);
    const double mu = tracker.mean_prominence();
    if (verdicts[i] == ProminenceVerdict::Accepted) {
      EXPECT_GE(cand[i].prominence, 0.6 * mu);
      EXPECT_LE(cand[i].prominence, 1.6 * mu);
      tracker.admit(cand[i]);
    }
  }
}

TEST(PpgPipeline, CleanSeventyFive) {
  SynthSpec s;
  s.hr_bpm = 75.0;
  s.seed = 4;
  const auto syn = synth_ppg(s, 60.0);
  PpgPipeline pipe{PpgConfig{}};
  const auto m = run_chunks(syn.trace.samples, 5, pipe);
  ASSERT_TRUE(m.valid);
  EXPECT_NEAR(m.ppm, 75.0, 1.0);
}

TEST(PpgPipeline, RejectsArtifacts) {
  SynthSpec s;
  s.hr_bpm = 90.0;
  s.noise_sigma = 0.01;
  s.artifact_rate = 6.0;
  s.seed = 12;
  const auto syn = synth_ppg(s, 90.0);
  PpgPipeline pipe{PpgConfig{}};
  const auto m = run_chunks(syn.trace.samples, 5, pipe);
  ASSERT_TRUE(m.valid);
  EXPECT_NEAR(m.ppm, 90.0, 2.0);
  for (double ta : syn.artifact_times)
    for (const Peak& b : pipe.accepted_beats()) EXPECT_GT(std::abs(b.time_s - ta), 0.1) << ta;
}

TEST(PpgPipeline, ChunkSizeDoesNotMatter) {
  SynthSpec s;
  s.hr_bpm = 66.0;
  s.noise_sigma = 0.01;
  s.seed = 8;
  const auto syn = synth_ppg(s, 60.0);
  PpgPipeline a{PpgConfig{}}, b{PpgConfig{}};
  const auto ma = run_chunks(syn.trace.samples, 5, a);
  const auto mb = run_chunks(syn.trace.samples, 1, b);
  EXPECT_NEAR(ma.ppm, mb.ppm, 1e-9);
  EXPECT_EQ(a.accepted_beats().size(), b.accepted_beats().size());
}

TEST(PpgPipeline, FlatlineIsInvalid) {
  PpgPipeline pipe{PpgConfig{}};
  const auto m = run_chunks(std::vector<double>(1500, 1.65), 5, pipe);
  EXPECT_FALSE(m.valid);
  EXPECT_EQ(m.ppm, -1.0);
}

TEST(PpgPipeline, FiveSamplesGiveNothing) {
  PpgPipeline pipe{PpgConfig{}};
  EXPECT_FALSE(pipe.push_chunk(std::vector<double>(5, 1.7)).has_value());
}

TEST(PpgPipeline, Deterministic) {
  SynthSpec s;
  s.noise_sigma = 0.02;
  s.artifact_rate = 4.0;
  s.seed = 21;
  const auto syn = synth_ppg(s, 60.0);
  PpgPipeline a{PpgConfig{}}, b{PpgConfig{}};
  EXPECT_EQ(run_chunks(syn.trace.samples, 5, a), run_chunks(syn.trace.samples, 5, b));
}

TEST(PpgPipeline, UninitialisedUseFails) {
  PpgPipeline pipe;
  try {
    pipe.push_chunk(std::vector<double>(5, 1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotInitialized);
  }
}

TEST(PpgPipeline, IntervalsNeverBelowSeparation) {
  SynthSpec s;
  s.hr_bpm = 170.0;
  s.noise_sigma = 0.01;
  s.seed = 2;
  const auto syn = synth_ppg(s, 60.0);
  PpgPipeline pipe{PpgConfig{}};
  run_chunks(syn.trace.samples, 5, pipe);
  for (double ibi : pipe.intervals_ms()) EXPECT_GE(ibi, 300.0);
}
