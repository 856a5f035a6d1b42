#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ppgbench/signal.hpp"

namespace ppgbench {

// Two-Gaussian beat template: systolic peak (unit amplitude) plus dicrotic
// hump. Gaussians are truncated at 3 widths, so with the defaults the beat
// starts rising exactly at its nominal onset and the waveform is exactly
// zero between beats when wander and noise are off.
struct BeatTemplate {
  double systolic_offset_s = 0.15;
  double systolic_width_s = 0.05;
  double dicrotic_offset_s = 0.40;
  double dicrotic_width_s = 0.07;
  double dicrotic_amplitude = 0.35;
};

struct SynthSpec {
  double hr_bpm = 72.0;
  double rr_brpm = 15.0;       // respiratory wander frequency in breaths/min
  double wander_amp = 0.0;
  BeatTemplate beat_template;
  double noise_std = 0.0;
  double fs = 40.0;
  double duration_s = 30.0;
  std::uint64_t seed = 0;
  std::string subject_id = "synth";
};

struct GroundTruth {
  double hr_bpm = 0.0;
  double rr_brpm = 0.0;
  std::vector<double> beat_times;  // seconds, spaced exactly 60 / hr_bpm
};

struct SynthResult {
  Signal signal;
  GroundTruth truth;
};

// Deterministic for a fixed seed: signal = beat train + wander sine + noise.
SynthResult synth_ppg(const SynthSpec& spec);

}  // namespace ppgbench
