#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "vitals/pneumo.hpp"
#include "vitals/numeric.hpp"

using namespace vitals;

namespace {

bool has_event(const Simulator& sim, std::string_view prefix) {
  return std::any_of(sim.events().begin(), sim.events().end(),
                     [&](const SimEvent& e) { return e.event.rfind(prefix, 0) == 0; });
}

}  // namespace

TEST(Watchdog, FiresOnlyPastLimit) {
  ControllerState c;
  c.phase = Phase::Inflating;
  c.last_reading_t_ms = 1000;
  EXPECT_FALSE(watchdog_check(c, 1499).has_value());
  EXPECT_FALSE(watchdog_check(c, 1500).has_value());
  EXPECT_EQ(watchdog_check(c, 1501), Phase::Fault);
}

TEST(Watchdog, IgnoresQuietPhases) {
  for (Phase p : {Phase::Idle, Phase::Closed, Phase::Fault}) {
    ControllerState c;
    c.phase = p;
    EXPECT_FALSE(watchdog_check(c, 100000).has_value());
  }
}

TEST(Plant, StepBounds) {
  EXPECT_THROW(step_plant({}, 0), Error);
  EXPECT_THROW(step_plant({}, 21), Error);
  EXPECT_EQ(step_plant({}, 20).t_ms, 20);
}

TEST(Plant, Routing) {
  PlantState s;
  s.cuff_mmhg = 100.0;
  s.clamp_mmhg = 100.0;
  s.valve.routing = Routing::BleedCuff;
  const auto b = step_plant(s, 10);
  EXPECT_NEAR(b.cuff_mmhg, 99.96, 1e-12);
  EXPECT_EQ(b.clamp_mmhg, 100.0);
  s.valve.routing = Routing::PumpToCuff;
  s.pump_on = true;
  EXPECT_NEAR(step_plant(s, 10).cuff_mmhg, 100.4, 1e-12);
  s.valve.routing = Routing::HoldAll;
  EXPECT_EQ(step_plant(s, 10).cuff_mmhg, 100.0);
}

TEST(SafeState, FromRandomStates) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> p(0.0, 650.0);
  std::uniform_int_distribution<int> r(0, 6);
  for (int i = 0; i < 1000; ++i) {
    PlantState s;
    s.clamp_mmhg = p(rng);
    s.cuff_mmhg = std::min(p(rng), 300.0);
    s.pump_on = (i % 2) == 0;
    s.valve.routing = static_cast<Routing>(r(rng));
    PlantState safe = safe_state(s);
    EXPECT_FALSE(safe.pump_on);
    EXPECT_EQ(safe_state(safe), safe);
    for (int k = 0; k < 60000 && (safe.clamp_mmhg >= 2.0 || safe.cuff_mmhg >= 2.0); ++k) safe = step_plant(safe, 1);
    EXPECT_LT(safe.clamp_mmhg, 2.0);
    EXPECT_LT(safe.cuff_mmhg, 2.0);
  }
}

TEST(Simulator, DrainFromForcedState) {
  Simulator sim;
  PlantState s;
  s.clamp_mmhg = 640.0;
  s.cuff_mmhg = 210.0;
  s.pump_on = true;
  s.valve.routing = Routing::PumpToCuff;
  sim.force_state(s, Phase::Inflating);
  EXPECT_TRUE(sim.drain());
  EXPECT_FALSE(sim.plant().pump_on);
}

TEST(Simulator, NominalSequence) {
  Simulator sim;
  sim.close_clamp();
  EXPECT_EQ(sim.controller().phase, Phase::Closed);
  EXPECT_GE(sim.plant().clamp_mmhg, 595.0);
  const Trace t = sim.measure_sequence();
  EXPECT_EQ(t.fs_hz, 100.0);
  const double peak = *std::max_element(t.samples.begin(), t.samples.end());
  EXPECT_GE(peak, 190.0);
  EXPECT_LE(peak, 195.0);
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t.samples[i] < 170.0 && t.samples[i] > 60.0 && i > static_cast<std::size_t>(std::max_element(t.samples.begin(), t.samples.end()) - t.samples.begin())) {
      xs.push_back(t.time_s(i));
      ys.push_back(t.samples[i]);
    }
  }
  const double slope = fit_line(xs, ys).slope;
  EXPECT_GE(slope, -5.0);
  EXPECT_LE(slope, -3.0);
  sim.open_clamp();
  EXPECT_EQ(sim.controller().phase, Phase::Idle);
  EXPECT_LT(sim.plant().clamp_mmhg, 2.0);
  for (const char* e : {"C1", "C2", "P1", "P2", "deflate", "P3", "O1", "O2"}) EXPECT_TRUE(has_event(sim, e)) << e;
}

TEST(Simulator, BleedRateFollowsConfig) {
  PlantConfig pc;
  pc.bleed_rate = 3.0;
  pc.noise_sigma = 0.0;
  Simulator sim(pc);
  sim.close_clamp();
  const Trace t = sim.measure_sequence();
  const auto top = static_cast<std::size_t>(std::max_element(t.samples.begin(), t.samples.end()) - t.samples.begin());
  const std::size_t a = top + 200, b = top + 2000;
  EXPECT_NEAR((t.samples[b] - t.samples[a]) / 18.0, -3.0, 1e-6);
}

TEST(Simulator, InvalidBleedRateRejected) {
  PlantConfig pc;
  pc.bleed_rate = 6.0;
  try {
    Simulator sim(pc);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidConfig);
  }
}

TEST(Simulator, DropoutFaults) {
  Simulator sim;
  sim.close_clamp();
  sim.add_dropout({sim.now_ms() + 5000, 2000});
  try {
    sim.measure_sequence();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::WatchdogTimeout);
  }
  EXPECT_EQ(sim.controller().phase, Phase::Fault);
  EXPECT_FALSE(sim.plant().pump_on);
  EXPECT_LT(sim.plant().cuff_mmhg, 2.0);
  EXPECT_LT(sim.plant().clamp_mmhg, 2.0);
  EXPECT_TRUE(has_event(sim, "Fault: sensor silent"));
  EXPECT_TRUE(has_event(sim, "safe-state"));
  sim.reset();
  EXPECT_EQ(sim.controller().phase, Phase::Idle);
}

TEST(Simulator, ShortDropoutTolerated) {
  Simulator sim;
  sim.close_clamp();
  sim.add_dropout({sim.now_ms() + 5000, 400});
  EXPECT_NO_THROW(sim.measure_sequence());
}

TEST(Simulator, StalledPressureFaults) {
  PlantConfig pc;
  pc.clamp_ceiling = 300.0;
  Simulator sim(pc);
  try {
    sim.close_clamp();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::WatchdogTimeout);
    EXPECT_NE(std::string(e.what()).find("progress"), std::string::npos);
  }
  EXPECT_FALSE(sim.plant().pump_on);
}

TEST(Simulator, CancelVentsAndIdles) {
  Simulator sim;
  sim.close_clamp();
  sim.cancel_at(sim.now_ms() + 8000);
  try {
    sim.measure_sequence();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Cancelled);
  }
  EXPECT_EQ(sim.controller().phase, Phase::Idle);
  EXPECT_FALSE(sim.plant().pump_on);
  EXPECT_LT(sim.plant().cuff_mmhg, 2.0);
  EXPECT_LT(sim.plant().clamp_mmhg, 2.0);
  EXPECT_TRUE(has_event(sim, "cancelled"));
}

TEST(Simulator, CommandRejections) {
  Simulator sim;
  sim.open_clamp();
  EXPECT_TRUE(has_event(sim, "already-open"));
  EXPECT_THROW(sim.measure_sequence(), Error);
  sim.close_clamp();
  sim.close_clamp();
  EXPECT_TRUE(has_event(sim, "already-closed"));
}

TEST(Simulator, QueueStopsAtFault) {
  Simulator sim;
  sim.add_dropout({3000, 1000});
  sim.submit(Command::StartClose);
  sim.submit(Command::StartMeasure);
  sim.submit(Command::StartOpen);
  EXPECT_THROW(sim.run_queue(), Error);
  EXPECT_FALSE(has_event(sim, "O1"));
}

TEST(Simulator, SameSeedSameTrace) {
  auto run = [](std::uint64_t seed) {
    Simulator sim({}, {}, seed);
    sim.close_clamp();
    return sim.measure_sequence();
  };
  EXPECT_EQ(run(4), run(4));
  EXPECT_NE(run(4), run(5));
}

TEST(Simulator, PressuresStayBounded) {
  Simulator sim;
  sim.close_clamp();
  const Trace t = sim.measure_sequence();
  for (const SimEvent& e : sim.events()) {
    EXPECT_LE(e.clamp_mmhg, 700.0);
    EXPECT_LE(e.cuff_mmhg, 320.0);
  }
  EXPECT_LT(*std::max_element(t.samples.begin(), t.samples.end()), 200.0);
}
