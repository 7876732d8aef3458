// One oscillometric measurement on a synthetic cuff trace, compared with the
// pressures the generator was asked for.

#include <cstdio>

#include "vitals/bp.hpp"
#include "vitals/synth.hpp"

int main() {
  vitals::SynthSpec spec;
  spec.sbp_mmhg = 135.0;
  spec.dbp_mmhg = 85.0;
  spec.map_mmhg = 102.0;
  spec.hr_bpm = 66.0;
  spec.noise_sigma = 0.3;
  const auto synth = vitals::synth_oscillometric(spec);
  const auto a = vitals::analyze_cuff_trace(synth.trace);
  if (!a.estimate.valid) {
    std::printf("invalid measurement: %s\n", std::string(to_string(*a.estimate.failure_reason)).c_str());
    return 1;
  }
  std::printf("%zu grouped peaks, MAP at %.1f mmHg\n", a.grouped_peaks.size(), a.envelope->map_mmhg);
  std::printf("SBP %.1f (true %.1f)  DBP %.1f (true %.1f)  HR %.1f (true %.1f)\n", a.estimate.sbp_mmhg,
              spec.sbp_mmhg, a.estimate.dbp_mmhg, spec.dbp_mmhg, a.estimate.hr_bpm, spec.hr_bpm);
}
