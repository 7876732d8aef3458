#pragma once

// File formats. Traces are CSV behind a `#` header block, pairs are plain
// CSV, everything else is JSON. Numbers are written in the shortest form that
// reads back to the same double, with a dot decimal separator regardless of
// the process locale.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "vitals/bp.hpp"
#include "vitals/error.hpp"
#include "vitals/pneumo.hpp"
#include "vitals/ppg.hpp"
#include "vitals/stats.hpp"
#include "vitals/synth.hpp"
#include "vitals/trace.hpp"

namespace vitals {

using json = nlohmann::ordered_json;

inline constexpr int k_trace_schema_version = 1;

inline std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw Error(ErrorCode::IoError, "number formatting failed");
  return std::string(buf, end);
}

inline std::optional<double> parse_number(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return in;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  return out;
}

}  // namespace detail

// ---- traces ---------------------------------------------------------------

struct TraceFileHeader {
  int schema_version = k_trace_schema_version;
  Channel channel = Channel::CuffPressure;
  double fs_hz = 100.0;
  std::int64_t t0_ms = 0;
  std::string units = "mmHg";
};

struct TraceReadOptions {
  // Accept a rate other than the channel's nominal one, reporting it through
  // `warn` instead of failing.
  bool override_rates = false;
  std::function<void(const std::string&)> warn;
};

inline double sample_time_ms(const Trace& t, std::size_t i) {
  return static_cast<double>(t.t0_ms) + static_cast<double>(i) * 1000.0 / t.fs_hz;
}

inline void write_trace(const Trace& t, std::ostream& out) {
  out << "# schema_version: " << k_trace_schema_version << '\n'
      << "# channel: " << to_string(t.channel) << '\n'
      << "# fs_hz: " << format_number(t.fs_hz) << '\n'
      << "# t0_ms: " << t.t0_ms << '\n'
      << "# units: " << channel_units(t.channel) << '\n'
      << "t_ms,value\n";
  for (std::size_t i = 0; i < t.size(); ++i)
    out << format_number(sample_time_ms(t, i)) << ',' << format_number(t.samples[i]) << '\n';
}

inline void write_trace(const Trace& t, const std::string& path) {
  auto out = detail::open_out(path);
  write_trace(t, out);
}

inline TraceFileHeader parse_trace_header(const std::map<std::string, std::string, std::less<>>& kv) {
  auto need = [&](std::string_view key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end() || it->second.empty()) throw Error(ErrorCode::MalformedHeader, "missing header field " + std::string(key));
    return it->second;
  };
  TraceFileHeader h;
  const auto version = parse_number(need("schema_version"));
  if (!version || *version != k_trace_schema_version)
    throw Error(ErrorCode::MalformedHeader, "unsupported schema_version " + need("schema_version"));
  const auto channel = parse_channel(need("channel"));
  if (!channel) throw Error(ErrorCode::MalformedHeader, "unknown channel " + need("channel"));
  h.channel = *channel;
  const auto fs = parse_number(need("fs_hz"));
  if (!fs || !(*fs > 0.0) || !std::isfinite(*fs)) throw Error(ErrorCode::MalformedHeader, "bad fs_hz " + need("fs_hz"));
  h.fs_hz = *fs;
  const auto t0 = parse_number(need("t0_ms"));
  if (!t0 || *t0 != std::floor(*t0)) throw Error(ErrorCode::MalformedHeader, "bad t0_ms " + need("t0_ms"));
  h.t0_ms = static_cast<std::int64_t>(*t0);
  h.units = need("units");
  if (h.units != "mmHg" && h.units != "volts") throw Error(ErrorCode::MalformedHeader, "unknown units " + h.units);
  return h;
}

inline Trace read_trace(std::istream& in, const TraceReadOptions& opt = {}) {
  std::map<std::string, std::string, std::less<>> kv;
  std::string line;
  bool columns_seen = false;
  std::vector<std::pair<double, double>> rows;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view s = detail::trim(line);
    if (s.empty()) continue;
    if (s.front() == '#') {
      if (columns_seen) throw Error(ErrorCode::MalformedHeader, "header line after data at line " + std::to_string(line_no));
      s.remove_prefix(1);
      const auto colon = s.find(':');
      if (colon == std::string_view::npos) throw Error(ErrorCode::MalformedHeader, "header line without ':' at line " + std::to_string(line_no));
      kv[std::string(detail::trim(s.substr(0, colon)))] = std::string(detail::trim(s.substr(colon + 1)));
      continue;
    }
    if (!columns_seen) {
      if (s != "t_ms,value") throw Error(ErrorCode::MalformedHeader, "expected column line t_ms,value");
      columns_seen = true;
      continue;
    }
    const auto cells = detail::split(s, ',');
    const auto t = cells.size() == 2 ? parse_number(cells[0]) : std::nullopt;
    const auto v = cells.size() == 2 ? parse_number(cells[1]) : std::nullopt;
    if (!t || !v) throw Error(ErrorCode::MalformedRow, "bad sample row at line " + std::to_string(line_no));
    rows.emplace_back(*t, *v);
  }
  const TraceFileHeader h = parse_trace_header(kv);
  if (!columns_seen) throw Error(ErrorCode::MalformedHeader, "missing column line");
  if (h.units != channel_units(h.channel))
    throw Error(ErrorCode::UnitMismatch, std::string(to_string(h.channel)) + " is recorded in " +
                                             std::string(channel_units(h.channel)) + ", not " + h.units);
  const double nominal = nominal_rate_hz(h.channel);
  if (h.fs_hz != nominal) {
    const std::string msg = std::string(to_string(h.channel)) + " sampled at " + format_number(h.fs_hz) +
                            " Hz; nominal rate is " + format_number(nominal) + " Hz";
    if (!opt.override_rates) throw Error(ErrorCode::RateMismatch, msg);
    if (opt.warn) opt.warn(msg);
  }

  Trace t;
  t.channel = h.channel;
  t.fs_hz = h.fs_hz;
  t.t0_ms = h.t0_ms;
  t.samples.reserve(rows.size());
  const double step = 1000.0 / h.fs_hz;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double expected = sample_time_ms(t, i);
    if (std::abs(rows[i].first - expected) > 1e-6 * std::max(1.0, step))
      throw Error(ErrorCode::NonUniformSampling, "sample " + std::to_string(i) + " at " + format_number(rows[i].first) +
                                                     " ms, expected " + format_number(expected) + " ms");
    t.samples.push_back(rows[i].second);
  }
  return t;
}

inline Trace read_trace(const std::string& path, const TraceReadOptions& opt = {}) {
  auto in = detail::open_in(path);
  return read_trace(in, opt);
}

// ---- paired measurements -------------------------------------------------

inline std::vector<PairedSample> read_pairs(std::istream& in) {
  static constexpr std::string_view cols[] = {"subject_id", "quantity", "device_value", "reference_value"};
  std::vector<PairedSample> out;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::size_t> where;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view s = detail::trim(line);
    if (s.empty() || s.front() == '#') continue;
    const auto cells = detail::split(s, ',');
    if (where.empty()) {
      for (std::string_view c : cols) {
        const auto it = std::find(cells.begin(), cells.end(), c);
        if (it == cells.end()) throw Error(ErrorCode::MalformedHeader, "pairs file lacks column " + std::string(c));
        where.push_back(static_cast<std::size_t>(it - cells.begin()));
      }
      if (cells.size() != std::size(cols)) throw Error(ErrorCode::MalformedHeader, "pairs file has extra columns");
      continue;
    }
    const std::string at = " at line " + std::to_string(line_no);
    if (cells.size() != std::size(cols)) throw Error(ErrorCode::MalformedRow, "expected 4 cells" + at);
    PairedSample p;
    p.subject_id = std::string(cells[where[0]]);
    if (p.subject_id.empty()) throw Error(ErrorCode::MalformedRow, "empty subject_id" + at);
    const auto q = parse_quantity(cells[where[1]]);
    if (!q) throw Error(ErrorCode::UnknownQuantity, "unknown quantity '" + std::string(cells[where[1]]) + "'" + at);
    p.quantity = *q;
    const auto dv = parse_number(cells[where[2]]);
    const auto rv = parse_number(cells[where[3]]);
    if (!dv || !rv) throw Error(ErrorCode::MalformedRow, "non-numeric value" + at);
    p.device_value = *dv;
    p.reference_value = *rv;
    try {
      require_valid(p);
    } catch (const Error& e) {
      throw Error(ErrorCode::MalformedRow, std::string(e.what()) + at);
    }
    out.push_back(std::move(p));
  }
  return out;
}

inline std::vector<PairedSample> read_pairs(const std::string& path) {
  auto in = detail::open_in(path);
  return read_pairs(in);
}

inline void write_pairs(std::span<const PairedSample> pairs, std::ostream& out) {
  out << "subject_id,quantity,device_value,reference_value\n";
  for (const auto& p : pairs)
    out << p.subject_id << ',' << to_string(p.quantity) << ',' << format_number(p.device_value) << ','
        << format_number(p.reference_value) << '\n';
}

// ---- JSON documents ------------------------------------------------------

inline json to_json(const VitalsEstimate& e) {
  json j;
  j["valid"] = e.valid;
  j["hr_bpm"] = e.hr_bpm;
  j["sbp_mmhg"] = e.sbp_mmhg;
  j["dbp_mmhg"] = e.dbp_mmhg;
  j["map_mmhg"] = e.map_mmhg;
  j["failure_reason"] = e.failure_reason ? json(std::string(to_string(*e.failure_reason))) : json(nullptr);
  return j;
}

inline VitalsEstimate estimate_from_json(const json& j) {
  VitalsEstimate e;
  e.valid = j.at("valid").get<bool>();
  e.hr_bpm = j.at("hr_bpm").get<double>();
  e.sbp_mmhg = j.at("sbp_mmhg").get<double>();
  e.dbp_mmhg = j.at("dbp_mmhg").get<double>();
  e.map_mmhg = j.at("map_mmhg").get<double>();
  if (!j.at("failure_reason").is_null()) {
    e.failure_reason = parse_failure_reason(j.at("failure_reason").get<std::string>());
    if (!e.failure_reason) throw Error(ErrorCode::MalformedRow, "unknown failure_reason");
  }
  return e;
}

inline json to_json(const HrvMetrics& m) {
  json j;
  j["valid"] = m.valid;
  j["ppm"] = m.ppm;
  j["ibi_ms"] = m.ibi_ms;
  j["freq_hz"] = m.freq_hz;
  j["sdnn_ms"] = m.sdnn_ms;
  j["rmssd_ms"] = m.rmssd_ms;
  return j;
}

inline HrvMetrics metrics_from_json(const json& j) {
  HrvMetrics m;
  m.valid = j.at("valid").get<bool>();
  m.ppm = j.at("ppm").get<double>();
  m.ibi_ms = j.at("ibi_ms").get<double>();
  m.freq_hz = j.at("freq_hz").get<double>();
  m.sdnn_ms = j.at("sdnn_ms").get<double>();
  m.rmssd_ms = j.at("rmssd_ms").get<double>();
  return m;
}

inline json to_json(const AgreementReport& r) {
  json j;
  j["quantity"] = std::string(to_string(r.quantity));
  j["n"] = r.n;
  j["mae"] = r.mae;
  j["rmse"] = r.rmse;
  j["medae"] = r.medae;
  j["pct_error_mae"] = r.pct_error_mae;
  j["bias"] = r.bias;
  j["sd"] = r.sd;
  j["loa_low"] = r.loa_low;
  j["loa_high"] = r.loa_high;
  j["spearman_rho"] = r.spearman_rho ? json(*r.spearman_rho) : json(nullptr);
  j["p_value"] = r.p_value ? json(*r.p_value) : json(nullptr);
  return j;
}

inline json to_json(const OscillometricTruth& t) {
  json j;
  j["hr"] = t.hr_bpm;
  j["sbp"] = t.sbp_mmhg;
  j["dbp"] = t.dbp_mmhg;
  j["map"] = t.map_mmhg;
  j["beat_times"] = t.beat_times;
  j["inflation_end_s"] = t.inflation_end_s;
  j["deflation_end_s"] = t.deflation_end_s;
  j["envelope"] = {{"map_mmhg", t.envelope.map_mmhg},
                   {"sigma_left", t.envelope.sigma_left},
                   {"sigma_right", t.envelope.sigma_right}};
  return j;
}

inline OscillometricTruth truth_from_json(const json& j) {
  OscillometricTruth t;
  t.hr_bpm = j.at("hr").get<double>();
  t.sbp_mmhg = j.at("sbp").get<double>();
  t.dbp_mmhg = j.at("dbp").get<double>();
  t.map_mmhg = j.at("map").get<double>();
  t.beat_times = j.at("beat_times").get<std::vector<double>>();
  t.inflation_end_s = j.value("inflation_end_s", 0.0);
  t.deflation_end_s = j.value("deflation_end_s", 0.0);
  if (j.contains("envelope")) {
    const auto& e = j.at("envelope");
    t.envelope.map_mmhg = e.at("map_mmhg").get<double>();
    t.envelope.sigma_left = e.at("sigma_left").get<double>();
    t.envelope.sigma_right = e.at("sigma_right").get<double>();
  }
  return t;
}

inline json to_json(const PpgSynthesis& s, double hr_bpm) {
  json j;
  j["hr"] = hr_bpm;
  j["beat_times"] = s.beat_times;
  j["artifact_times"] = s.artifact_times;
  return j;
}

inline json to_json(const SimEvent& e) {
  json j;
  j["t_ms"] = e.t_ms;
  j["phase"] = std::string(to_string(e.phase));
  j["event"] = e.event;
  j["clamp_mmhg"] = e.clamp_mmhg;
  j["cuff_mmhg"] = e.cuff_mmhg;
  return j;
}

inline void write_events_jsonl(std::span<const SimEvent> events, std::ostream& out) {
  for (const auto& e : events) out << to_json(e).dump() << '\n';
}

// Missing keys keep their defaults; unknown keys are rejected.
inline SynthSpec synth_spec_from_json(const json& j) {
  SynthSpec s;
  const std::map<std::string, double*> reals = {
      {"hr", &s.hr_bpm},           {"sbp", &s.sbp_mmhg},
      {"dbp", &s.dbp_mmhg},        {"map", &s.map_mmhg},
      {"deflation_rate", &s.deflation_rate}, {"fs_hz", &s.fs_hz},
      {"noise_sigma", &s.noise_sigma},       {"artifact_rate", &s.artifact_rate},
      {"oscillation_mmhg", &s.oscillation_mmhg}};
  bool map_given = false;
  for (const auto& [key, value] : j.items()) {
    if (key == "seed") {
      if (!value.is_number_unsigned() && !(value.is_number_integer() && value.get<std::int64_t>() >= 0))
        throw Error(ErrorCode::InvalidSpec, "seed must be a non-negative integer");
      s.seed = value.get<std::uint64_t>();
      continue;
    }
    if (key == "kind" || key == "duration_s") continue;
    auto it = reals.find(key);
    if (it == reals.end()) throw Error(ErrorCode::InvalidSpec, "unknown spec field " + key);
    if (!value.is_number()) throw Error(ErrorCode::InvalidSpec, "spec field " + key + " must be a number");
    *it->second = value.get<double>();
    map_given = map_given || key == "map";
  }
  if (!map_given) s.map_mmhg = s.dbp_mmhg + (s.sbp_mmhg - s.dbp_mmhg) / 3.0;
  validate(s);
  return s;
}

// ---- agreement report rendering -------------------------------------------

struct RenderedReport {
  json document;                              // {"reports": [...]}
  std::map<Quantity, std::string> plot_csv;   // Bland-Altman data per quantity
};

// Plot CSV rows: one `point` per pair, then the bias and LoA lines drawn
// across the observed range of means.
inline std::string bland_altman_csv(const AgreementReport& r) {
  std::ostringstream out;
  out << "series,mean,difference\n";
  for (std::size_t i = 0; i < r.means.size(); ++i)
    out << "point," << format_number(r.means[i]) << ',' << format_number(r.differences[i]) << '\n';
  if (!r.means.empty()) {
    const auto [lo, hi] = std::minmax_element(r.means.begin(), r.means.end());
    for (auto [name, y] : {std::pair<const char*, double>{"bias", r.bias}, {"loa_low", r.loa_low}, {"loa_high", r.loa_high}})
      for (double x : {*lo, *hi}) out << name << ',' << format_number(x) << ',' << format_number(y) << '\n';
  }
  return out.str();
}

inline RenderedReport render_report(std::span<const AgreementReport> reports) {
  if (reports.empty()) throw Error(ErrorCode::EmptyInput, "no agreement reports to render");
  RenderedReport out;
  out.document["reports"] = json::array();
  for (const auto& r : reports) {
    out.document["reports"].push_back(to_json(r));
    out.plot_csv[r.quantity] = bland_altman_csv(r);
  }
  return out;
}

}  // namespace vitals
