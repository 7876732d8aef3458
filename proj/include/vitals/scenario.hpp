#pragma once

// Simulator scenarios and the synth -> simulate -> estimate round trip.

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "vitals/bp.hpp"
#include "vitals/config.hpp"
#include "vitals/error.hpp"
#include "vitals/io.hpp"
#include "vitals/pneumo.hpp"
#include "vitals/synth.hpp"

namespace vitals {

struct PulseModel {
  double hr_bpm = 72.0;
  double sbp_mmhg = 121.0;
  double dbp_mmhg = 79.0;
  double map_mmhg = 95.0;
  double oscillation_mmhg = 3.0;
};

// Arterial pulses as seen by the cuff sensor, phase drawn from the seed.
inline CuffOscillator make_oscillator(const PulseModel& m, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  return CuffOscillator(m.hr_bpm, m.oscillation_mmhg,
                        OscillometricEnvelopeModel::solve(m.sbp_mmhg, m.map_mmhg, m.dbp_mmhg),
                        unit(rng) * 60.0 / m.hr_bpm);
}

// Assess runs the retry protocol: measurement cycles until one is valid or
// the retry budget is spent.
enum class StepKind { Close, Measure, Open, Reset, Idle, Assess };

struct ScenarioStep {
  StepKind kind = StepKind::Close;
  std::int64_t idle_ms = 0;
};

struct Scenario {
  std::vector<ScenarioStep> steps;
  std::vector<Dropout> dropouts;
  std::optional<PulseModel> pulses;
  std::optional<std::int64_t> cancel_at_ms;
};

enum class ScenarioOutcome { Completed, Fault, Cancelled };

constexpr std::string_view to_string(ScenarioOutcome o) {
  switch (o) {
    case ScenarioOutcome::Completed: return "completed";
    case ScenarioOutcome::Fault: return "fault";
    case ScenarioOutcome::Cancelled: return "cancelled";
  }
  return "?";
}

struct ScenarioResult {
  ScenarioOutcome outcome = ScenarioOutcome::Completed;
  std::string message;
  std::vector<SimEvent> events;
  std::vector<Trace> traces;  // one per completed measurement
  std::vector<MeasurementOutcome> assessments;
  std::int64_t end_ms = 0;
};

inline Scenario scenario_from_json(const json& j) {
  Scenario s;
  for (const auto& st : j.at("steps")) {
    if (st.is_object()) {
      if (!st.contains("idle_ms") || !st.at("idle_ms").is_number_integer() || st.at("idle_ms").get<std::int64_t>() < 0)
        throw Error(ErrorCode::InvalidSpec, "object steps must be {\"idle_ms\": N} with N >= 0");
      s.steps.push_back({StepKind::Idle, st.at("idle_ms").get<std::int64_t>()});
      continue;
    }
    const std::string name = st.get<std::string>();
    if (name == "close") s.steps.push_back({StepKind::Close});
    else if (name == "measure") s.steps.push_back({StepKind::Measure});
    else if (name == "open") s.steps.push_back({StepKind::Open});
    else if (name == "reset") s.steps.push_back({StepKind::Reset});
    else if (name == "assess") s.steps.push_back({StepKind::Assess});
    else throw Error(ErrorCode::InvalidSpec, "unknown scenario step " + name);
  }
  if (j.contains("dropouts")) {
    for (const auto& d : j.at("dropouts")) {
      Dropout drop{d.at("start_ms").get<std::int64_t>(), d.at("duration_ms").get<std::int64_t>()};
      if (drop.start_ms < 0 || drop.duration_ms <= 0) throw Error(ErrorCode::InvalidSpec, "dropout times must be positive");
      s.dropouts.push_back(drop);
    }
  }
  if (j.contains("pulses") && !j.at("pulses").is_null()) {
    const auto& p = j.at("pulses");
    PulseModel m;
    m.hr_bpm = p.value("hr", m.hr_bpm);
    m.sbp_mmhg = p.value("sbp", m.sbp_mmhg);
    m.dbp_mmhg = p.value("dbp", m.dbp_mmhg);
    m.map_mmhg = p.value("map", m.dbp_mmhg + (m.sbp_mmhg - m.dbp_mmhg) / 3.0);
    m.oscillation_mmhg = p.value("oscillation_mmhg", m.oscillation_mmhg);
    if (!(m.hr_bpm >= 40.0 && m.hr_bpm <= 230.0) || !(m.dbp_mmhg < m.map_mmhg && m.map_mmhg < m.sbp_mmhg))
      throw Error(ErrorCode::InvalidSpec, "pulse model needs hr in [40, 230] and dbp < map < sbp");
    s.pulses = m;
  }
  if (j.contains("cancel_at_ms") && !j.at("cancel_at_ms").is_null()) s.cancel_at_ms = j.at("cancel_at_ms").get<std::int64_t>();
  return s;
}

inline ScenarioResult run_scenario(const Scenario& sc, const RunConfig& cfg) {
  Simulator sim(cfg.plant, cfg.controller, cfg.seed);
  if (sc.pulses) {
    auto osc = std::make_shared<CuffOscillator>(make_oscillator(*sc.pulses, cfg.seed));
    sim.set_pulse_source([osc](double t, double cuff) { return (*osc)(t, cuff); });
  }
  for (const Dropout& d : sc.dropouts) sim.add_dropout(d);
  if (sc.cancel_at_ms) sim.cancel_at(*sc.cancel_at_ms);

  ScenarioResult r;
  try {
    for (const ScenarioStep& st : sc.steps) {
      switch (st.kind) {
        case StepKind::Close: sim.close_clamp(); break;
        case StepKind::Open: sim.open_clamp(); break;
        case StepKind::Measure: r.traces.push_back(sim.measure_sequence()); break;
        case StepKind::Reset: sim.reset(); break;
        case StepKind::Idle: sim.idle_for(st.idle_ms); break;
        case StepKind::Assess: {
          const auto source = [&]() -> std::optional<Trace> {
            if (sim.controller().phase == Phase::Idle) sim.close_clamp();
            r.traces.push_back(sim.measure_sequence());
            return r.traces.back();
          };
          r.assessments.push_back(run_measurement(source, cfg.bp, cfg.max_retries));
          break;
        }
      }
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::WatchdogTimeout) r.outcome = ScenarioOutcome::Fault;
    else if (e.code() == ErrorCode::Cancelled) r.outcome = ScenarioOutcome::Cancelled;
    else throw;
    r.message = e.what();
  }
  r.events = sim.events();
  r.end_ms = sim.now_ms();
  return r;
}

// Each call closes the clamp if needed and runs one measurement cycle.
inline TraceSource simulator_source(Simulator& sim) {
  return [&sim]() -> std::optional<Trace> {
    if (sim.controller().phase == Phase::Idle) sim.close_clamp();
    return sim.measure_sequence();
  };
}

struct E2eTolerance {
  double hr_bpm = 2.0;
  double sbp_mmhg = 5.0;
  double dbp_mmhg = 5.0;
};

struct E2eResult {
  bool pass = false;
  VitalsEstimate estimate;
  PulseModel truth;
  std::optional<double> d_hr, d_sbp, d_dbp;  // estimate - truth, when valid
  std::vector<SimEvent> events;
  Trace trace;
};

// SynthSpec's pressures, rate and noise drive the simulated plant; the
// recorded cuff trace goes through the BP pipeline.
inline E2eResult run_e2e(const SynthSpec& spec, const RunConfig& cfg, const E2eTolerance& tol = {}) {
  validate(spec);
  RunConfig run = cfg;
  run.plant.bleed_rate = spec.deflation_rate;
  run.plant.noise_sigma = spec.noise_sigma;
  run.seed = spec.seed;

  E2eResult r;
  r.truth = {spec.hr_bpm, spec.sbp_mmhg, spec.dbp_mmhg, spec.map_mmhg, spec.oscillation_mmhg};
  Scenario sc;
  sc.steps = {{StepKind::Close}, {StepKind::Measure}, {StepKind::Open}};
  sc.pulses = r.truth;
  ScenarioResult sim = run_scenario(sc, run);
  r.events = std::move(sim.events);
  if (sim.outcome != ScenarioOutcome::Completed || sim.traces.empty()) return r;
  r.trace = std::move(sim.traces.front());
  r.estimate = estimate_vitals(r.trace, run.bp);
  if (!r.estimate.valid) return r;
  r.d_hr = r.estimate.hr_bpm - spec.hr_bpm;
  r.d_sbp = r.estimate.sbp_mmhg - spec.sbp_mmhg;
  r.d_dbp = r.estimate.dbp_mmhg - spec.dbp_mmhg;
  r.pass = std::abs(*r.d_hr) <= tol.hr_bpm && std::abs(*r.d_sbp) <= tol.sbp_mmhg && std::abs(*r.d_dbp) <= tol.dbp_mmhg;
  return r;
}

}  // namespace vitals
