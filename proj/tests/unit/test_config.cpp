#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "vitals/config.hpp"

using namespace vitals;

namespace {

ErrorCode code_of(auto f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::IoError;
}

}  // namespace

TEST(Defaults, Values) {
  const RunConfig c;
  EXPECT_EQ(c.ppg.fs_hz, 25.0);
  EXPECT_EQ(c.ppg.lowpass_order, 4);
  EXPECT_EQ(c.ppg.lowpass_cutoff_hz, 3.5);
  EXPECT_EQ(c.ppg.min_beat_separation_s, 0.3);
  EXPECT_EQ(c.ppg.prominence_window_s, 20.0);
  EXPECT_EQ(c.ppg.prominence_low, 0.6);
  EXPECT_EQ(c.ppg.prominence_high, 1.6);
  EXPECT_EQ(c.bp.band_low_hz, 0.5);
  EXPECT_EQ(c.bp.band_high_hz, 4.0);
  EXPECT_EQ(c.bp.fir_taps, 201);
  EXPECT_EQ(c.bp.histogram_bin_s, 0.090);
  EXPECT_EQ(c.bp.histogram_max_bins, 5u);
  EXPECT_EQ(c.bp.hr_min_bpm, 40.0);
  EXPECT_EQ(c.bp.hr_max_bpm, 230.0);
  EXPECT_EQ(c.bp.sbp_ratio, 0.88);
  EXPECT_EQ(c.bp.dbp_ratio, 0.42);
  EXPECT_EQ(c.bp.sbp_min, 70.0);
  EXPECT_EQ(c.bp.sbp_max, 240.0);
  EXPECT_EQ(c.bp.dbp_min, 40.0);
  EXPECT_EQ(c.bp.dbp_max, 140.0);
  EXPECT_EQ(c.controller.clamp_target_mmhg, 600.0);
  EXPECT_EQ(c.controller.cuff_target_mmhg, 190.0);
  EXPECT_EQ(c.controller.watchdog_ms, 500);
  EXPECT_EQ(c.plant.bleed_rate, 4.0);
  EXPECT_EQ(c.max_retries, 3u);
  EXPECT_NO_THROW(validate(c));
}

TEST(Loading, PrecedenceFlagsOverFileOverDefaults) {
  RunConfig c;
  std::istringstream ini("[pneumo]\nbleed_rate = 3.5 ; slower\n[bp]\nsbp_ratio = 0.8\n# comment\n");
  merge_config(c, ini);
  EXPECT_EQ(c.plant.bleed_rate, 3.5);
  EXPECT_EQ(c.bp.sbp_ratio, 0.8);
  apply_override(c, "pneumo.bleed_rate=4.5");
  EXPECT_EQ(c.plant.bleed_rate, 4.5);
  EXPECT_EQ(c.bp.sbp_ratio, 0.8);
  EXPECT_EQ(c.bp.dbp_ratio, 0.42);
}

TEST(Loading, DumpRoundTrips) {
  RunConfig c;
  apply_override(c, "run.seed=18446744073709551615");
  apply_override(c, "ppg.prominence_low=0.55");
  std::istringstream in(dump_config(c));
  RunConfig d;
  merge_config(d, in);
  EXPECT_EQ(dump_config(d), dump_config(c));
  EXPECT_EQ(d.seed, 18446744073709551615ULL);
}

TEST(Loading, FromFile) {
  const std::string path = ::testing::TempDir() + "vitals_test.ini";
  {
    std::ofstream out(path);
    out << "[measurement]\nmax_retries = 5\n";
  }
  const RunConfig c = load_config(&path, {"ppg.warmup_s=10"});
  EXPECT_EQ(c.max_retries, 5u);
  EXPECT_EQ(c.ppg.warmup_s, 10.0);
}

TEST(Rejections, OutOfRange) {
  EXPECT_EQ(code_of([] { load_config(nullptr, {"pneumo.bleed_rate=9"}); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([] { load_config(nullptr, {"pneumo.bleed_rate=2.99"}); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([] { load_config(nullptr, {"ppg.prominence_low=1.2"}); }), ErrorCode::InvalidConfig);
}

TEST(Rejections, CrossField) {
  EXPECT_EQ(code_of([] { load_config(nullptr, {"bp.fir_taps=200"}); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([] { load_config(nullptr, {"bp.band_low_hz=5"}); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([] { load_config(nullptr, {"ppg.lowpass_cutoff_hz=13"}); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([] { load_config(nullptr, {"pneumo.deflation_stop_mmhg=195"}); }), ErrorCode::InvalidConfig);
}

TEST(Rejections, Syntax) {
  RunConfig c;
  EXPECT_EQ(code_of([&] { apply_override(c, "ppg.nonsense=1"); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([&] { apply_override(c, "ppg.lowpass_order=2.5"); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([&] { apply_override(c, "ppg.fs_hz=fast"); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([&] { apply_override(c, "nodot=1"); }), ErrorCode::InvalidConfig);
  std::istringstream orphan("bleed_rate = 4\n");
  EXPECT_EQ(code_of([&] { merge_config(c, orphan); }), ErrorCode::InvalidConfig);
  std::istringstream open("[pneumo\n");
  EXPECT_EQ(code_of([&] { merge_config(c, open); }), ErrorCode::InvalidConfig);
}

TEST(Fields, NamesAreUnique) {
  RunConfig c;
  std::set<std::string> seen;
  for (const auto& f : config_fields(c)) EXPECT_TRUE(seen.insert(f.name()).second) << f.name();
}
