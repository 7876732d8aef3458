#pragma once

// Run configuration. The file format is
//
//   [section]
//   key = value   ; comment
//
// Layering is defaults, then the file, then command-line overrides; each layer
// replaces individual keys, and the merged result is validated once.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "vitals/bp.hpp"
#include "vitals/error.hpp"
#include "vitals/io.hpp"
#include "vitals/pneumo.hpp"
#include "vitals/ppg.hpp"

namespace vitals {

struct RunConfig {
  PpgConfig ppg;
  double chunk_ms = 200.0;
  BpConfig bp;
  PlantConfig plant;
  ControllerConfig controller;
  std::uint64_t max_retries = 3;
  std::uint64_t seed = 1;
};

struct ConfigField {
  std::string section;
  std::string key;
  std::variant<double*, int*, std::uint64_t*, std::int64_t*> target;
  double min;
  double max;

  std::string name() const { return section + "." + key; }

  double get() const {
    return std::visit([](auto* p) { return static_cast<double>(*p); }, target);
  }
};

// Every tunable with its admissible physical range.
inline std::vector<ConfigField> config_fields(RunConfig& c) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  return {
      {"ppg", "fs_hz", &c.ppg.fs_hz, 1.0, 10000.0},
      {"ppg", "lowpass_order", &c.ppg.lowpass_order, 1, 12},
      {"ppg", "lowpass_cutoff_hz", &c.ppg.lowpass_cutoff_hz, 0.1, 20.0},
      {"ppg", "min_beat_separation_s", &c.ppg.min_beat_separation_s, 0.05, 2.0},
      {"ppg", "prominence_window_s", &c.ppg.prominence_window_s, 1.0, 600.0},
      {"ppg", "prominence_low", &c.ppg.prominence_low, 0.0, 1.0},
      {"ppg", "prominence_high", &c.ppg.prominence_high, 1.0, 100.0},
      {"ppg", "buffer_s", &c.ppg.buffer_s, 2.0, 3600.0},
      {"ppg", "commit_lag_s", &c.ppg.commit_lag_s, 0.0, 60.0},
      {"ppg", "warmup_s", &c.ppg.warmup_s, 0.0, 600.0},
      {"ppg", "chunk_ms", &c.chunk_ms, 1.0, 60000.0},

      {"bp", "band_low_hz", &c.bp.band_low_hz, 0.01, 20.0},
      {"bp", "band_high_hz", &c.bp.band_high_hz, 0.02, 40.0},
      {"bp", "fir_taps", &c.bp.fir_taps, 3, 4001},
      {"bp", "hr_min_bpm", &c.bp.hr_min_bpm, 10.0, 300.0},
      {"bp", "hr_max_bpm", &c.bp.hr_max_bpm, 10.0, 300.0},
      {"bp", "histogram_bin_s", &c.bp.histogram_bin_s, 0.001, 2.0},
      {"bp", "histogram_max_bins", &c.bp.histogram_max_bins, 1, 100},
      {"bp", "min_height_ratio", &c.bp.min_height_ratio, 0.0, 1.0},
      {"bp", "min_prominence_ratio", &c.bp.min_prominence_ratio, 0.0, 1.0},
      {"bp", "min_height_abs", &c.bp.min_height_abs, 0.0, 1000.0},
      {"bp", "refractory_fraction", &c.bp.refractory_fraction, 0.0, 1.0},
      {"bp", "amplitude_window_s", &c.bp.amplitude_window_s, 0.05, 2.0},
      {"bp", "smoothing_degree", &c.bp.smoothing_degree, 1, 6},
      {"bp", "smoothing_half_width_mmhg", &c.bp.smoothing_half_width_mmhg, 1.0, 300.0},
      {"bp", "smoothing_min_points", &c.bp.smoothing_min_points, 2, 1000},
      {"bp", "systolic_refit_degree", &c.bp.systolic_refit_degree, 0, 6},
      {"bp", "systolic_refit_overlap", &c.bp.systolic_refit_overlap, 0, 50},
      {"bp", "sbp_ratio", &c.bp.sbp_ratio, 0.01, 0.99},
      {"bp", "dbp_ratio", &c.bp.dbp_ratio, 0.01, 0.99},
      {"bp", "sbp_min", &c.bp.sbp_min, 0.0, 400.0},
      {"bp", "sbp_max", &c.bp.sbp_max, 0.0, 400.0},
      {"bp", "dbp_min", &c.bp.dbp_min, 0.0, 400.0},
      {"bp", "dbp_max", &c.bp.dbp_max, 0.0, 400.0},
      {"bp", "release_slope_mmhg_s", &c.bp.release_slope_mmhg_s, -1000.0, -0.5},

      {"pneumo", "k_pump", &c.plant.k_pump, 0.1, 1000.0},
      {"pneumo", "k_vent", &c.plant.k_vent, 0.1, 1000.0},
      {"pneumo", "bleed_rate", &c.plant.bleed_rate, 3.0, 5.0},
      {"pneumo", "noise_sigma", &c.plant.noise_sigma, 0.0, 10.0},
      {"pneumo", "clamp_target_mmhg", &c.controller.clamp_target_mmhg, 10.0, 700.0},
      {"pneumo", "cuff_target_mmhg", &c.controller.cuff_target_mmhg, 10.0, 300.0},
      {"pneumo", "deflation_stop_mmhg", &c.controller.deflation_stop_mmhg, 2.0, 200.0},
      {"pneumo", "watchdog_ms", &c.controller.watchdog_ms, 1, 60000},
      {"pneumo", "sample_period_ms", &c.controller.sample_period_ms, 1, 1000},

      {"measurement", "max_retries", &c.max_retries, 1, 100},
      {"run", "seed", &c.seed, 0, inf},
  };
}

inline std::vector<ConfigField> config_fields(const RunConfig& c) { return config_fields(const_cast<RunConfig&>(c)); }

inline void validate(const RunConfig& c) {
  for (const ConfigField& f : config_fields(c)) {
    const double v = f.get();
    if (!(v >= f.min && v <= f.max))
      throw Error(ErrorCode::InvalidConfig, f.name() + " = " + format_number(v) + " outside [" + format_number(f.min) +
                                                ", " + format_number(f.max) + "]");
  }
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::InvalidConfig, what);
  };
  require(c.ppg.lowpass_cutoff_hz < c.ppg.fs_hz / 2.0, "ppg.lowpass_cutoff_hz must lie below Nyquist");
  require(c.bp.band_low_hz < c.bp.band_high_hz, "bp band must satisfy low < high");
  require(c.bp.fir_taps % 2 == 1, "bp.fir_taps must be odd");
  require(c.bp.hr_min_bpm < c.bp.hr_max_bpm, "bp heart-rate range is empty");
  require(c.bp.sbp_min < c.bp.sbp_max && c.bp.dbp_min < c.bp.dbp_max, "plausibility ranges are empty");
  require(c.controller.deflation_stop_mmhg < c.controller.cuff_target_mmhg, "deflation must stop below the cuff target");
  validate(c.plant);
}

// Assigns one key. Integer fields reject fractional values.
inline void set_config_value(RunConfig& c, std::string_view section, std::string_view key, std::string_view text) {
  for (ConfigField& f : config_fields(c)) {
    if (f.section != section || f.key != key) continue;
    const std::string name = f.name();
    if (f.section == "run" && f.key == "seed") {
      std::uint64_t v = 0;
      const auto t = detail::trim(text);
      auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
      if (ec != std::errc{} || p != t.data() + t.size() || t.empty())
        throw Error(ErrorCode::InvalidConfig, name + " needs a non-negative integer");
      c.seed = v;
      return;
    }
    const auto v = parse_number(text);
    if (!v || !std::isfinite(*v)) throw Error(ErrorCode::InvalidConfig, name + " needs a number, got '" + std::string(text) + "'");
    std::visit(
        [&](auto* p) {
          using T = std::remove_pointer_t<decltype(p)>;
          if constexpr (std::is_same_v<T, double>) {
            *p = *v;
          } else {
            if (*v != std::floor(*v) || (*v < 0.0 && !std::is_signed_v<T>))
              throw Error(ErrorCode::InvalidConfig, name + " needs an integer");
            *p = static_cast<T>(*v);
          }
        },
        f.target);
    return;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown key " + std::string(section) + "." + std::string(key));
}

// "section.key=value"
inline void apply_override(RunConfig& c, std::string_view assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.substr(0, eq).find('.');
  if (eq == std::string_view::npos || dot == std::string_view::npos)
    throw Error(ErrorCode::InvalidConfig, "override must look like section.key=value: " + std::string(assignment));
  set_config_value(c, detail::trim(assignment.substr(0, dot)), detail::trim(assignment.substr(dot + 1, eq - dot - 1)),
                   assignment.substr(eq + 1));
}

// Applies the file on top of `c` without validating.
inline void merge_config(RunConfig& c, std::istream& in) {
  std::string line, section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view s = line;
    if (const auto cut = s.find_first_of(";#"); cut != std::string_view::npos) s = s.substr(0, cut);
    s = detail::trim(s);
    if (s.empty()) continue;
    const std::string at = " (line " + std::to_string(line_no) + ")";
    if (s.front() == '[') {
      if (s.back() != ']') throw Error(ErrorCode::InvalidConfig, "unterminated section header" + at);
      section = std::string(detail::trim(s.substr(1, s.size() - 2)));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) throw Error(ErrorCode::InvalidConfig, "expected key = value" + at);
    if (section.empty()) throw Error(ErrorCode::InvalidConfig, "key outside any section" + at);
    try {
      set_config_value(c, section, detail::trim(s.substr(0, eq)), s.substr(eq + 1));
    } catch (const Error& e) {
      throw Error(ErrorCode::InvalidConfig, std::string(e.what()) + at);
    }
  }
}

inline void merge_config_file(RunConfig& c, const std::string& path) {
  auto in = detail::open_in(path);
  merge_config(c, in);
}

inline RunConfig load_config(const std::string* path, const std::vector<std::string>& overrides = {}) {
  RunConfig c;
  if (path) merge_config_file(c, *path);
  for (const auto& o : overrides) apply_override(c, o);
  validate(c);
  return c;
}

inline std::string dump_config(const RunConfig& c) {
  std::ostringstream out;
  std::string section;
  for (const ConfigField& f : config_fields(c)) {
    if (f.section != section) {
      out << (section.empty() ? "" : "\n") << '[' << f.section << "]\n";
      section = f.section;
    }
    if (auto* u = std::get_if<std::uint64_t*>(&f.target))
      out << f.key << " = " << **u << '\n';
    else
      out << f.key << " = " << format_number(f.get()) << '\n';
  }
  return out.str();
}

}  // namespace vitals
