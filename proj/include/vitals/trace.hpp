#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <optional>
#include <vector>

#include "vitals/error.hpp"

namespace vitals {

enum class Channel { PpgRaw, CuffPressure, ClampPressure };

constexpr std::string_view to_string(Channel c) {
  switch (c) {
    case Channel::PpgRaw: return "PpgRaw";
    case Channel::CuffPressure: return "CuffPressure";
    case Channel::ClampPressure: return "ClampPressure";
  }
  return "?";
}

inline std::optional<Channel> parse_channel(std::string_view s) {
  if (s == "PpgRaw") return Channel::PpgRaw;
  if (s == "CuffPressure") return Channel::CuffPressure;
  if (s == "ClampPressure") return Channel::ClampPressure;
  return std::nullopt;
}

// Units the sensor reports for a channel.
constexpr std::string_view channel_units(Channel c) {
  return c == Channel::PpgRaw ? "volts" : "mmHg";
}

// Nominal acquisition rates: pressure sensors every 10 ms, pulse sensor every 40 ms.
constexpr double nominal_rate_hz(Channel c) {
  return c == Channel::PpgRaw ? 25.0 : 100.0;
}

// Uniformly sampled single-channel time series.
struct Trace {
  Channel channel = Channel::CuffPressure;
  double fs_hz = 100.0;
  std::int64_t t0_ms = 0;
  std::vector<double> samples;

  std::size_t size() const noexcept { return samples.size(); }
  double duration_s() const noexcept { return static_cast<double>(samples.size()) / fs_hz; }
  double time_s(std::size_t i) const noexcept { return static_cast<double>(i) / fs_hz; }

  bool operator==(const Trace&) const = default;
};

inline void require_processable(const Trace& t) {
  if (!(t.fs_hz > 0.0)) throw Error(ErrorCode::InvalidArgument, "trace sample rate must be positive");
  if (t.samples.empty()) throw Error(ErrorCode::SignalTooShort, "trace has no samples");
}

}  // namespace vitals
