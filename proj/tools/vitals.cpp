// vitals: command-line entry point.
//
// Exit status: 0 success, 1 e2e tolerance miss or internal error, 2 invalid
// input, 3 measurement invalid, 4 deceased alert.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vitals/vitals.hpp"

namespace fs = std::filesystem;
using namespace vitals;

namespace {

enum Exit { kOk = 0, kFail = 1, kInvalidInput = 2, kInvalidMeasurement = 3, kDeceased = 4 };

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
  std::string debug_dir;
  std::string out_dir;
  bool compact = false;
  bool override_rates = false;
};

RunConfig load(const Options& o) {
  RunConfig c = load_config(o.config_path.empty() ? nullptr : &o.config_path, o.overrides);
  if (o.seed) c.seed = *o.seed;
  return c;
}

void emit(const json& j, const Options& o) { std::cout << j.dump(o.compact ? -1 : 2) << '\n'; }

TraceReadOptions read_options(const Options& o) {
  TraceReadOptions r;
  r.override_rates = o.override_rates;
  r.warn = [](const std::string& m) { std::cerr << "warning: " << m << '\n'; };
  return r;
}

Trace read_channel(const std::string& path, Channel expected, const Options& o) {
  Trace t = read_trace(path, read_options(o));
  if (t.channel != expected)
    throw Error(ErrorCode::UnitMismatch, path + " holds " + std::string(to_string(t.channel)) + ", expected " +
                                             std::string(to_string(expected)));
  return t;
}

json read_json_file(const std::string& path) {
  auto in = detail::open_in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidSpec, path + ": " + e.what());
  }
}

fs::path ensure_dir(const std::string& dir) {
  fs::path p = dir.empty() ? fs::path(".") : fs::path(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + p.string() + ": " + ec.message());
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = detail::open_out(path.string());
  out << text;
}

// ---- hr -------------------------------------------------------------------

int cmd_hr(const std::string& trace_path, const Options& o) {
  RunConfig cfg = load(o);
  const Trace trace = read_channel(trace_path, Channel::PpgRaw, o);
  cfg.ppg.fs_hz = trace.fs_hz;
  PpgPipeline pipe(cfg.ppg);
  const auto chunk = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.chunk_ms * trace.fs_hz / 1000.0)));
  for (std::size_t i = 0; i < trace.size(); i += chunk)
    pipe.push_chunk(std::span<const double>(trace.samples).subspan(i, std::min(chunk, trace.size() - i)));
  const HrvMetrics m = pipe.finish();
  json j = to_json(m);
  j["accepted_beats"] = pipe.accepted_beats().size();
  j["rejected_peaks"] = pipe.rejected_peaks().size();
  emit(j, o);
  return m.valid ? kOk : kInvalidMeasurement;
}

// ---- bp -------------------------------------------------------------------

std::vector<double> peak_times(const PeakSet& p) {
  std::vector<double> t;
  for (const Peak& k : p) t.push_back(k.time_s);
  return t;
}

std::vector<double> peak_values(const PeakSet& p) {
  std::vector<double> v;
  for (const Peak& k : p) v.push_back(k.value);
  return v;
}

void write_bp_debug(const fs::path& dir, const Trace& trace, const BpAnalysis& a, const BpConfig& cfg) {
  std::vector<double> t(trace.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = trace.time_s(i);

  std::string csv = "t_s,cuff_mmhg,filtered_mmhg,derivative_mmhg_s\n";
  for (std::size_t i = 0; i < trace.size(); ++i)
    csv += format_number(t[i]) + ',' + format_number(trace.samples[i]) + ',' + format_number(a.filtered[i]) + ',' +
           format_number(a.derivative[i]) + '\n';
  write_text(dir / "signal.csv", csv);

  csv = "stage,index,t_s,derivative_mmhg_s,prominence\n";
  for (auto [stage, set] : {std::pair<const char*, const PeakSet*>{"morphological", &a.morphological_peaks},
                            {"grouped", &a.grouped_peaks}})
    for (const Peak& p : *set)
      csv += std::string(stage) + ',' + std::to_string(p.index) + ',' + format_number(p.time_s) + ',' +
             format_number(p.value) + ',' + format_number(p.prominence) + '\n';
  write_text(dir / "peaks.csv", csv);

  svg::Plot raw{"Cuff pressure", "time (s)", "mmHg", {{"raw", t, trace.samples}}, {}};
  write_text(dir / "cuff.svg", svg::render(raw));
  svg::Plot filt{"Band-passed oscillations", "time (s)", "mmHg", {{"filtered", t, a.filtered}}, {}};
  write_text(dir / "filtered.svg", svg::render(filt));
  svg::Plot der{"Derivative and detected peaks", "time (s)", "mmHg/s",
                {{"derivative", t, a.derivative},
                 {"morphological", peak_times(a.morphological_peaks), peak_values(a.morphological_peaks), "#ff7f0e", true},
                 {"grouped", peak_times(a.grouped_peaks), peak_values(a.grouped_peaks), "#2ca02c", true}},
                {}};
  write_text(dir / "peaks.svg", svg::render(der));

  if (a.histogram) {
    csv = "bin_start_samples,bin_end_samples,count,selected\n";
    const auto& h = *a.histogram;
    svg::Series bars{"count", {}, {}, "#9467bd", true};
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
      const bool sel = std::find(h.selected_bins.begin(), h.selected_bins.end(), i) != h.selected_bins.end();
      csv += std::to_string(h.bin_edges[i]) + ',' + std::to_string(h.bin_edges[i + 1]) + ',' +
             std::to_string(h.counts[i]) + ',' + (sel ? "1" : "0") + '\n';
      bars.x.push_back(0.5 * static_cast<double>(h.bin_edges[i] + h.bin_edges[i + 1]) / trace.fs_hz);
      bars.y.push_back(static_cast<double>(h.counts[i]));
    }
    write_text(dir / "histogram.csv", csv);
    write_text(dir / "histogram.svg", svg::render({"Peak distance histogram", "distance (s)", "count", {bars}, {}}));
  }

  if (a.envelope) {
    const auto& e = *a.envelope;
    csv = "index,t_s,cuff_mmhg,amplitude_mmhg,smoothed_mmhg\n";
    for (std::size_t i = 0; i < e.peaks.size(); ++i)
      csv += std::to_string(e.peaks[i].index) + ',' + format_number(e.peaks[i].time_s) + ',' +
             format_number(e.cuff_pressure_at_peak[i]) + ',' + format_number(e.amplitude[i]) + ',' +
             format_number(e.amplitude_smoothed[i]) + '\n';
    write_text(dir / "envelope.csv", csv);
    svg::Plot env{"Oscillation envelope", "cuff pressure (mmHg)", "amplitude (mmHg)",
                  {{"amplitude", e.cuff_pressure_at_peak, e.amplitude, "#7f7f7f", true},
                   {"smoothed", e.cuff_pressure_at_peak, e.amplitude_smoothed}},
                  {}};
    if (a.reading) {
      const double amax = e.amplitude_smoothed[e.map_index];
      env.lines = {{"systolic ratio", cfg.sbp_ratio * amax}, {"diastolic ratio", cfg.dbp_ratio * amax, "#2ca02c"}};
    }
    write_text(dir / "envelope.svg", svg::render(env));
  }
}

int cmd_bp(const std::vector<std::string>& paths, const Options& o) {
  const RunConfig cfg = load(o);
  std::vector<Trace> traces;
  for (const auto& p : paths) traces.push_back(read_channel(p, Channel::CuffPressure, o));

  if (traces.size() == 1) {
    const BpAnalysis a = analyze_cuff_trace(traces.front(), cfg.bp);
    if (!o.debug_dir.empty()) write_bp_debug(ensure_dir(o.debug_dir), traces.front(), a, cfg.bp);
    emit(to_json(a.estimate), o);
    return a.estimate.valid ? kOk : kInvalidMeasurement;
  }

  // Several traces are successive attempts of one measurement.
  std::size_t next = 0;
  const TraceSource source = [&]() -> std::optional<Trace> {
    if (next >= traces.size()) return std::nullopt;
    return traces[next++];
  };
  json j;
  try {
    const MeasurementOutcome out = run_measurement(source, cfg.bp, cfg.max_retries);
    j["attempts"] = out.attempts;
    if (out.deceased()) {
      j["deceased_alert"] = true;
      j["results"] = json::array();
      for (const auto& r : std::get<DeceasedAlert>(out.result).results) j["results"].push_back(to_json(r));
      emit(j, o);
      return kDeceased;
    }
    j["deceased_alert"] = false;
    j["estimate"] = to_json(*out.estimate());
    emit(j, o);
    return kOk;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SourceExhausted) throw;
    std::cerr << "all " << traces.size() << " traces invalid, retry budget of " << cfg.max_retries
              << " not exhausted\n";
    j["attempts"] = traces.size();
    j["deceased_alert"] = false;
    j["estimate"] = to_json(VitalsEstimate{});
    emit(j, o);
    return kInvalidMeasurement;
  }
}

// ---- simulate --------------------------------------------------------------

int cmd_simulate(const std::string& scenario_path, const Options& o) {
  const RunConfig cfg = load(o);
  const Scenario sc = scenario_from_json(read_json_file(scenario_path));
  const ScenarioResult r = run_scenario(sc, cfg);

  json j;
  j["outcome"] = std::string(to_string(r.outcome));
  j["message"] = r.message;
  j["end_ms"] = r.end_ms;
  j["events"] = json::array();
  for (const auto& e : r.events) j["events"].push_back(to_json(e));
  j["measurements"] = r.traces.size();

  bool deceased = false;
  j["assessments"] = json::array();
  for (const auto& a : r.assessments) {
    json aj;
    aj["attempts"] = a.attempts;
    aj["deceased_alert"] = a.deceased();
    if (a.deceased()) {
      deceased = true;
      aj["estimate"] = to_json(VitalsEstimate{});
    } else {
      aj["estimate"] = to_json(*a.estimate());
    }
    j["assessments"].push_back(aj);
  }

  if (!o.out_dir.empty()) {
    const fs::path dir = ensure_dir(o.out_dir);
    std::ostringstream events;
    write_events_jsonl(r.events, events);
    write_text(dir / "events.jsonl", events.str());
    j["traces"] = json::array();
    for (std::size_t i = 0; i < r.traces.size(); ++i) {
      const fs::path p = dir / ("measurement_" + std::to_string(i + 1) + ".csv");
      write_trace(r.traces[i], p.string());
      j["traces"].push_back(p.string());
    }
  }
  emit(j, o);
  return deceased ? kDeceased : kOk;
}

// ---- synth -----------------------------------------------------------------

int cmd_synth(const std::string& spec_path, const std::string& prefix, const Options& o) {
  const json doc = read_json_file(spec_path);
  SynthSpec spec = synth_spec_from_json(doc);
  if (o.seed) spec.seed = *o.seed;
  const std::string kind = doc.value("kind", std::string("oscillometric"));
  const double duration = doc.value("duration_s", 60.0);

  Trace trace;
  json truth;
  if (kind == "oscillometric") {
    const auto s = synth_oscillometric(spec);
    trace = s.trace;
    truth = to_json(s.truth);
  } else if (kind == "ppg") {
    const auto s = synth_ppg(spec, duration);
    trace = s.trace;
    truth = to_json(s, spec.hr_bpm);
  } else if (kind == "mannequin") {
    trace = synth_mannequin(duration, spec.fs_hz > 0.0 ? spec.fs_hz : 100.0, spec.noise_sigma, spec.seed,
                            spec.deflation_rate);
    truth = json{{"pulseless", true}};
  } else {
    throw Error(ErrorCode::InvalidSpec, "unknown synth kind " + kind);
  }

  const fs::path dir = ensure_dir(o.out_dir);
  const fs::path trace_path = dir / (prefix + ".csv");
  const fs::path truth_path = dir / (prefix + ".truth.json");
  write_trace(trace, trace_path.string());
  write_text(truth_path, truth.dump(2) + "\n");
  json j;
  j["kind"] = kind;
  j["trace"] = trace_path.string();
  j["truth"] = truth_path.string();
  j["samples"] = trace.size();
  emit(j, o);
  return kOk;
}

// ---- agree -----------------------------------------------------------------

int cmd_agree(const std::string& pairs_path, const std::vector<std::string>& exclude, const Options& o) {
  std::vector<PairedSample> pairs = read_pairs(pairs_path);
  for (const auto& id : exclude) pairs = exclude_subject(pairs, id);
  if (pairs.empty()) throw Error(ErrorCode::EmptyInput, "no pairs to analyse");
  const auto reports = agreement_reports(pairs);
  const RenderedReport rendered = render_report(reports);
  if (!o.out_dir.empty()) {
    const fs::path dir = ensure_dir(o.out_dir);
    write_text(dir / "report.json", rendered.document.dump(2) + "\n");
    for (const auto& r : reports) {
      const std::string q(to_string(r.quantity));
      write_text(dir / ("bland_altman_" + q + ".csv"), rendered.plot_csv.at(r.quantity));
      svg::Plot p{"Bland-Altman: " + q, "mean of device and reference", "device - reference",
                  {{"pairs", r.means, r.differences, "#1f77b4", true}},
                  {{"bias", r.bias, "#000000"}, {"LoA low", r.loa_low}, {"LoA high", r.loa_high}}};
      write_text(dir / ("bland_altman_" + q + ".svg"), svg::render(p));
    }
  }
  emit(rendered.document, o);
  return kOk;
}

// ---- e2e -------------------------------------------------------------------

int cmd_e2e(const std::string& spec_path, const Options& o) {
  const RunConfig cfg = load(o);
  SynthSpec spec = synth_spec_from_json(read_json_file(spec_path));
  if (o.seed) spec.seed = *o.seed;
  const E2eResult r = run_e2e(spec, cfg);
  json j;
  j["pass"] = r.pass;
  j["truth"] = {{"hr", r.truth.hr_bpm}, {"sbp", r.truth.sbp_mmhg}, {"dbp", r.truth.dbp_mmhg}, {"map", r.truth.map_mmhg}};
  j["estimate"] = to_json(r.estimate);
  j["error"] = {{"hr", r.d_hr ? json(*r.d_hr) : json(nullptr)},
                {"sbp", r.d_sbp ? json(*r.d_sbp) : json(nullptr)},
                {"dbp", r.d_dbp ? json(*r.d_dbp) : json(nullptr)}};
  if (!o.out_dir.empty()) {
    const fs::path dir = ensure_dir(o.out_dir);
    write_trace(r.trace, (dir / "e2e_trace.csv").string());
    std::ostringstream events;
    write_events_jsonl(r.events, events);
    write_text(dir / "e2e_events.jsonl", events.str());
  }
  emit(j, o);
  if (!r.estimate.valid) return kInvalidMeasurement;
  return r.pass ? kOk : kFail;
}

int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::SourceExhausted:
    case ErrorCode::WatchdogTimeout:
    case ErrorCode::InsufficientBeats:
    case ErrorCode::ThresholdNotReached:
    case ErrorCode::TooFewGroupedPeaks:
      return kInvalidMeasurement;
    case ErrorCode::NotInitialized:
    case ErrorCode::StateShapeMismatch:
    case ErrorCode::Cancelled:
      return kFail;
    default:
      return kInvalidInput;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vital-sign estimation from pulse and cuff-pressure traces"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "INI-style configuration file");
    sub->add_option("--seed", o.seed, "random seed");
    sub->add_option("--set", o.overrides, "override one setting, section.key=value");
    sub->add_flag("--json", o.compact, "print JSON on a single line");
    sub->add_flag("--override-rates", o.override_rates, "accept traces sampled off the nominal channel rate");
  };

  std::vector<std::string> traces;
  std::string input, prefix = "synth";
  std::vector<std::string> exclude;

  auto* hr = app.add_subcommand("hr", "heart rate and HRV from a PPG trace (streamed in chunks)");
  hr->add_option("trace", input, "PPG trace CSV")->required();
  common(hr);

  auto* bp = app.add_subcommand("bp", "blood pressure from cuff traces; several traces are retries");
  bp->add_option("traces", traces, "cuff pressure trace CSV")->required();
  bp->add_option("--debug-dir", o.debug_dir, "write intermediate signals as CSV and SVG");
  common(bp);

  auto* sim = app.add_subcommand("simulate", "run a pneumatic controller scenario");
  sim->add_option("scenario", input, "scenario JSON")->required();
  sim->add_option("--out-dir", o.out_dir, "write the event log and recorded traces");
  common(sim);

  auto* syn = app.add_subcommand("synth", "generate a synthetic trace and its ground truth");
  syn->add_option("spec", input, "synthesis spec JSON")->required();
  syn->add_option("--out-dir", o.out_dir, "output directory");
  syn->add_option("--prefix", prefix, "output file stem");
  common(syn);

  auto* agree = app.add_subcommand("agree", "error and Bland-Altman agreement analysis of paired readings");
  agree->add_option("pairs", input, "pairs CSV")->required();
  agree->add_option("--exclude", exclude, "drop a subject id before analysis");
  agree->add_option("--out-dir", o.out_dir, "write report JSON and plot data");
  common(agree);

  auto* e2e = app.add_subcommand("e2e", "synthesise, simulate, estimate and compare with ground truth");
  e2e->add_option("spec", input, "synthesis spec JSON")->required();
  e2e->add_option("--out-dir", o.out_dir, "write the recorded trace and event log");
  common(e2e);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInvalidInput;
  }

  try {
    if (*hr) return cmd_hr(input, o);
    if (*bp) return cmd_bp(traces, o);
    if (*sim) return cmd_simulate(input, o);
    if (*syn) return cmd_synth(input, prefix, o);
    if (*agree) return cmd_agree(input, exclude, o);
    if (*e2e) return cmd_e2e(input, o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kFail;
  }
  return kFail;
}
