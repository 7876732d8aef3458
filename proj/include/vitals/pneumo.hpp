#pragma once

// Virtual-time simulation of the gripper's pneumatics: a constant-rate plant
// (pump, vents, bleed) and the controller that closes the clamp, runs a cuff
// measurement, opens the clamp, and falls back to a safe state on faults.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vitals/error.hpp"
#include "vitals/trace.hpp"

namespace vitals {

enum class Routing {
  Hold,                 // pump disconnected, both circuits sealed
  PumpToClampVentCuff,  // C1
  HoldAll,              // C2
  VentCuff,
  PumpToCuff,  // P2
  BleedCuff,   // controlled deflation through the bleed orifice
  VentAll,     // both circuits open to atmosphere (opening and safe state)
};

constexpr std::string_view to_string(Routing r) {
  switch (r) {
    case Routing::Hold: return "Hold";
    case Routing::PumpToClampVentCuff: return "PumpToClamp_VentCuff";
    case Routing::HoldAll: return "HoldAll";
    case Routing::VentCuff: return "VentCuff";
    case Routing::PumpToCuff: return "PumpToCuff";
    case Routing::BleedCuff: return "BleedCuff";
    case Routing::VentAll: return "VentAll";
  }
  return "?";
}

struct ValveConfig {
  Routing routing = Routing::Hold;
  bool operator==(const ValveConfig&) const = default;
};

struct PlantState {
  double clamp_mmhg = 0.0;
  double cuff_mmhg = 0.0;
  bool pump_on = false;
  ValveConfig valve;
  std::int64_t t_ms = 0;

  bool operator==(const PlantState&) const = default;
};

struct PlantConfig {
  double k_pump = 40.0;  // mmHg/s into the routed circuit
  double k_vent = 60.0;  // mmHg/s out of a vented circuit
  double bleed_rate = 4.0;
  double noise_sigma = 0.3;
  double cuff_ceiling = 320.0;
  double clamp_ceiling = 700.0;
};

inline void validate(const PlantConfig& c) {
  if (!(c.k_pump > 0.0) || c.k_vent < 0.0) throw Error(ErrorCode::InvalidConfig, "pump rate must be > 0, vent rate >= 0");
  if (!(c.bleed_rate >= 3.0 && c.bleed_rate <= 5.0))
    throw Error(ErrorCode::InvalidConfig, "bleed rate must lie in [3, 5] mmHg/s");
  if (c.noise_sigma < 0.0) throw Error(ErrorCode::InvalidConfig, "noise sigma must be >= 0");
  if (!(c.cuff_ceiling > 0.0 && c.clamp_ceiling > 0.0)) throw Error(ErrorCode::InvalidConfig, "ceilings must be > 0");
}

inline PlantState step_plant(PlantState s, std::int64_t dt_ms, const PlantConfig& cfg = {}) {
  if (dt_ms < 1 || dt_ms > 20) throw Error(ErrorCode::InvalidArgument, "plant step must be 1..20 ms");
  const double dt = static_cast<double>(dt_ms) / 1000.0;
  const double pump = s.pump_on ? cfg.k_pump * dt : 0.0;
  const double vent = cfg.k_vent * dt;
  switch (s.valve.routing) {
    case Routing::Hold:
    case Routing::HoldAll:
      break;
    case Routing::PumpToClampVentCuff:
      s.clamp_mmhg += pump;
      s.cuff_mmhg -= vent;
      break;
    case Routing::VentCuff:
      s.cuff_mmhg -= vent;
      break;
    case Routing::PumpToCuff:
      s.cuff_mmhg += pump;
      break;
    case Routing::BleedCuff:
      s.cuff_mmhg -= cfg.bleed_rate * dt;
      break;
    case Routing::VentAll:
      s.clamp_mmhg -= vent;
      s.cuff_mmhg -= vent;
      break;
  }
  s.clamp_mmhg = std::clamp(s.clamp_mmhg, 0.0, cfg.clamp_ceiling);
  s.cuff_mmhg = std::clamp(s.cuff_mmhg, 0.0, cfg.cuff_ceiling);
  s.t_ms += dt_ms;
  return s;
}

// Pump off, both circuits venting. Idempotent.
inline PlantState safe_state(PlantState s) {
  s.pump_on = false;
  s.valve.routing = Routing::VentAll;
  return s;
}

enum class Phase { Idle, Closing, Closed, Opening, Inflating, ControlledDeflate, Venting, Fault };

constexpr std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::Idle: return "Idle";
    case Phase::Closing: return "Closing";
    case Phase::Closed: return "Closed";
    case Phase::Opening: return "Opening";
    case Phase::Inflating: return "Inflating";
    case Phase::ControlledDeflate: return "ControlledDeflate";
    case Phase::Venting: return "Venting";
    case Phase::Fault: return "Fault";
  }
  return "?";
}

// Phases whose progress is judged from sensor readings.
constexpr bool sensor_dependent(Phase p) {
  return p == Phase::Closing || p == Phase::Opening || p == Phase::Inflating || p == Phase::ControlledDeflate ||
         p == Phase::Venting;
}

struct ControllerState {
  Phase phase = Phase::Idle;
  std::int64_t last_reading_t_ms = 0;
};

struct ControllerConfig {
  double clamp_target_mmhg = 600.0;
  double cuff_target_mmhg = 190.0;
  double deflation_stop_mmhg = 40.0;
  double vented_mmhg = 2.0;
  std::int64_t watchdog_ms = 500;
  std::int64_t sample_period_ms = 10;
  double progress_min_mmhg = 0.5;
  std::int64_t progress_window_ms = 3000;
  std::int64_t max_sequence_ms = 300000;
};

// Fault when a sensor-dependent phase has gone more than watchdog_ms without
// a reading.
inline std::optional<Phase> watchdog_check(const ControllerState& c, std::int64_t now_ms,
                                           std::int64_t watchdog_ms = 500) {
  if (!sensor_dependent(c.phase)) return std::nullopt;
  if (now_ms - c.last_reading_t_ms > watchdog_ms) return Phase::Fault;
  return std::nullopt;
}

struct SimEvent {
  std::int64_t t_ms = 0;
  Phase phase = Phase::Idle;
  std::string event;
  double clamp_mmhg = 0.0;
  double cuff_mmhg = 0.0;

  bool operator==(const SimEvent&) const = default;
};

// Sensor silence over [start_ms, start_ms + duration_ms).
struct Dropout {
  std::int64_t start_ms = 0;
  std::int64_t duration_ms = 0;
  bool covers(std::int64_t t) const noexcept { return t >= start_ms && t < start_ms + duration_ms; }
};

enum class Command { StartClose, StartOpen, StartMeasure, Cancel };

// Pressure added to the cuff reading, e.g. a CuffOscillator.
using PulseSource = std::function<double(double t_s, double cuff_mmhg)>;

class Simulator {
 public:
  explicit Simulator(PlantConfig plant = {}, ControllerConfig ctrl = {}, std::uint64_t seed = 1)
      : plant_cfg_(plant), ctrl_cfg_(ctrl), rng_(seed) {
    validate(plant_cfg_);
  }

  const PlantState& plant() const noexcept { return plant_; }
  const ControllerState& controller() const noexcept { return ctrl_; }
  const std::vector<SimEvent>& events() const noexcept { return events_; }
  const PlantConfig& plant_config() const noexcept { return plant_cfg_; }
  const ControllerConfig& controller_config() const noexcept { return ctrl_cfg_; }
  std::int64_t now_ms() const noexcept { return plant_.t_ms; }

  void set_pulse_source(PulseSource src) { pulses_ = std::move(src); }
  void add_dropout(Dropout d) { dropouts_.push_back(d); }
  // Cancellation request that takes effect at the given virtual time.
  void cancel_at(std::int64_t t_ms) { cancel_at_ = t_ms; }

  // Test hook: place the plant and controller in an arbitrary state.
  void force_state(const PlantState& p, Phase phase) {
    plant_ = p;
    ctrl_.phase = phase;
    ctrl_.last_reading_t_ms = p.t_ms;
  }

  void reset() {
    if (ctrl_.phase == Phase::Fault) {
      ctrl_.phase = plant_.clamp_mmhg < ctrl_cfg_.vented_mmhg ? Phase::Idle : Phase::Closed;
      log("reset");
    }
  }

  void submit(Command c) { queue_.push_back(c); }

  // Runs queued commands in order. A fault stops the queue; the error is
  // rethrown after the remaining commands are discarded.
  Trace run_queue() {
    Trace last;
    while (!queue_.empty()) {
      const Command c = queue_.front();
      queue_.pop_front();
      try {
        switch (c) {
          case Command::StartClose: close_clamp(); break;
          case Command::StartOpen: open_clamp(); break;
          case Command::StartMeasure: last = measure_sequence(); break;
          case Command::Cancel: cancel_now(); break;
        }
      } catch (...) {
        queue_.clear();
        throw;
      }
    }
    return last;
  }

  void close_clamp() {
    if (ctrl_.phase == Phase::Closed) {
      log("already-closed");
      return;
    }
    if (ctrl_.phase != Phase::Idle) {
      log("close-rejected");
      return;
    }
    start_sensors();
    enter(Phase::Closing, Routing::PumpToClampVentCuff, true, "C1");
    run_until([&] { return smoothed_clamp() >= ctrl_cfg_.clamp_target_mmhg; }, Channel::ClampPressure);
    enter(Phase::Closed, Routing::HoldAll, false, "C2");
  }

  void open_clamp() {
    if (ctrl_.phase != Phase::Closed) {
      log(ctrl_.phase == Phase::Idle ? "already-open" : "open-rejected");
      return;
    }
    start_sensors();
    enter(Phase::Opening, Routing::VentAll, false, "O1");
    run_until([&] { return smoothed_clamp() < ctrl_cfg_.vented_mmhg && smoothed_cuff() < ctrl_cfg_.vented_mmhg; },
              Channel::ClampPressure);
    enter(Phase::Idle, Routing::Hold, false, "O2");
  }

  // P1 vent, P2 inflate, controlled deflation, P3 release. Returns the cuff
  // readings from P1 on, sampled every sample_period_ms.
  Trace measure_sequence() {
    if (ctrl_.phase != Phase::Closed) throw Error(ErrorCode::InvalidArgument, "measurement needs a closed clamp");
    recording_ = Trace{Channel::CuffPressure, 1000.0 / static_cast<double>(ctrl_cfg_.sample_period_ms), 0, {}};
    recording_->t0_ms = plant_.t_ms + ctrl_cfg_.sample_period_ms - plant_.t_ms % ctrl_cfg_.sample_period_ms;
    start_sensors();
    enter(Phase::Venting, Routing::VentCuff, false, "P1");
    run_until([&] { return smoothed_cuff() < ctrl_cfg_.vented_mmhg; }, Channel::CuffPressure);
    enter(Phase::Inflating, Routing::PumpToCuff, true, "P2");
    run_until([&] { return smoothed_cuff() >= ctrl_cfg_.cuff_target_mmhg; }, Channel::CuffPressure);
    enter(Phase::ControlledDeflate, Routing::BleedCuff, false, "deflate");
    run_until([&] { return smoothed_cuff() < ctrl_cfg_.deflation_stop_mmhg; }, Channel::CuffPressure);
    enter(Phase::Venting, Routing::VentCuff, false, "P3");
    run_until([&] { return smoothed_cuff() < ctrl_cfg_.vented_mmhg; }, Channel::CuffPressure);
    enter(Phase::Closed, Routing::HoldAll, false, "measure-complete");
    Trace out = std::move(*recording_);
    recording_.reset();
    return out;
  }

  // Applies the safe state and lets the plant vent until both circuits are
  // below the vented threshold or the time bound expires. Returns true when
  // vented.
  bool drain(std::int64_t max_ms = 60000) {
    plant_ = safe_state(plant_);
    for (std::int64_t i = 0; i < max_ms; ++i) {
      if (plant_.clamp_mmhg < ctrl_cfg_.vented_mmhg && plant_.cuff_mmhg < ctrl_cfg_.vented_mmhg) return true;
      plant_ = step_plant(plant_, 1, plant_cfg_);
    }
    return plant_.clamp_mmhg < ctrl_cfg_.vented_mmhg && plant_.cuff_mmhg < ctrl_cfg_.vented_mmhg;
  }

  // Advances virtual time without control actions, checking the watchdog.
  void idle_for(std::int64_t ms) {
    for (std::int64_t i = 0; i < ms; ++i) tick();
  }

 private:
  struct Cancelled {};

  void log(std::string event) {
    events_.push_back({plant_.t_ms, ctrl_.phase, std::move(event), plant_.clamp_mmhg, plant_.cuff_mmhg});
  }

  void enter(Phase phase, Routing routing, bool pump, std::string event) {
    ctrl_.phase = phase;
    plant_.valve.routing = routing;
    plant_.pump_on = pump;
    log(std::move(event));
    progress_anchor_.reset();
  }

  void start_sensors() {
    clamp_window_.clear();
    cuff_window_.clear();
    ctrl_.last_reading_t_ms = plant_.t_ms;
  }

  void fault(std::string_view why) {
    ctrl_.phase = Phase::Fault;
    plant_ = safe_state(plant_);
    log("Fault: " + std::string(why));
    recording_.reset();
    drain();
    log("safe-state");
    throw Error(ErrorCode::WatchdogTimeout, std::string(why));
  }

  void cancel_now() {
    cancel_at_.reset();
    const bool was_closed = ctrl_.phase == Phase::Closed;
    plant_ = safe_state(plant_);
    log("cancelled");
    recording_.reset();
    drain();
    ctrl_.phase = Phase::Idle;
    log(was_closed ? "opened" : "safe-state");
  }

  static double window_mean(const std::deque<double>& w, std::size_t n) {
    n = std::min(n, w.size());
    double s = 0.0;
    for (std::size_t i = w.size() - n; i < w.size(); ++i) s += w[i];
    return n ? s / static_cast<double>(n) : 0.0;
  }
  // Thresholds use the mean of the last 5 readings.
  double smoothed_clamp() const { return window_mean(clamp_window_, 5); }
  double smoothed_cuff() const { return window_mean(cuff_window_, 5); }

  bool sensor_silent(std::int64_t t) const {
    return std::any_of(dropouts_.begin(), dropouts_.end(), [&](const Dropout& d) { return d.covers(t); });
  }

  // One millisecond of virtual time: plant step, sensor sample, watchdog.
  void tick() {
    plant_ = step_plant(plant_, 1, plant_cfg_);
    const std::int64_t t = plant_.t_ms;
    if (t % ctrl_cfg_.sample_period_ms == 0) {
      std::optional<double> cuff_reading;
      if (sensor_dependent(ctrl_.phase) && !sensor_silent(t)) {
        const double clamp = plant_.clamp_mmhg + plant_cfg_.noise_sigma * noise_(rng_);
        double cuff = plant_.cuff_mmhg + plant_cfg_.noise_sigma * noise_(rng_);
        if (pulses_) cuff += pulses_(static_cast<double>(t) / 1000.0, plant_.cuff_mmhg);
        push(clamp_window_, clamp);
        push(cuff_window_, cuff);
        ctrl_.last_reading_t_ms = t;
        cuff_reading = cuff;
      }
      if (recording_ && t >= recording_->t0_ms) {
        // A missed sample holds the previous reading, as a sample-and-hold ADC would.
        const double v = cuff_reading ? *cuff_reading
                                      : (recording_->samples.empty() ? plant_.cuff_mmhg : recording_->samples.back());
        recording_->samples.push_back(v);
      }
    }
    if (cancel_at_ && t >= *cancel_at_) throw Cancelled{};
    if (watchdog_check(ctrl_, t, ctrl_cfg_.watchdog_ms))
      fault("sensor silent for " + std::to_string(t - ctrl_.last_reading_t_ms) + " ms");
  }

  static void push(std::deque<double>& w, double v) {
    w.push_back(v);
    if (w.size() > 50) w.pop_front();
  }

  // Progress: the 50-reading mean must move by progress_min within the window.
  void check_progress(Channel ch) {
    const auto& w = ch == Channel::ClampPressure ? clamp_window_ : cuff_window_;
    if (w.size() < 50) return;
    const double level = window_mean(w, 50);
    if (!progress_anchor_ || std::abs(level - progress_anchor_->second) >= ctrl_cfg_.progress_min_mmhg) {
      progress_anchor_ = {plant_.t_ms, level};
      return;
    }
    if (plant_.t_ms - progress_anchor_->first > ctrl_cfg_.progress_window_ms) fault("no pressure progress");
  }

  template <class Done>
  void run_until(Done done, Channel progress_channel) {
    const std::int64_t start = plant_.t_ms;
    try {
      while (true) {
        tick();
        if (plant_.t_ms % ctrl_cfg_.sample_period_ms == 0 && ctrl_.last_reading_t_ms == plant_.t_ms) {
          if (done()) return;
          check_progress(progress_channel);
        }
        if (plant_.t_ms - start > ctrl_cfg_.max_sequence_ms) fault("sequence time limit");
      }
    } catch (const Cancelled&) {
      cancel_now();
      throw Error(ErrorCode::Cancelled, "sequence cancelled");
    }
  }

  PlantConfig plant_cfg_;
  ControllerConfig ctrl_cfg_;
  PlantState plant_;
  ControllerState ctrl_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> noise_{0.0, 1.0};
  std::vector<SimEvent> events_;
  std::vector<Dropout> dropouts_;
  std::deque<Command> queue_;
  std::optional<std::int64_t> cancel_at_;
  PulseSource pulses_;
  std::deque<double> clamp_window_;
  std::deque<double> cuff_window_;
  std::optional<std::pair<std::int64_t, double>> progress_anchor_;
  std::optional<Trace> recording_;
};

}  // namespace vitals
