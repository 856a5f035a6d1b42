#include "ppgbench/synth.hpp"

#include <cmath>

#include "ppgbench/rng.hpp"

namespace ppgbench {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTemplateSupportWidths = 3.0;

// Truncated Gaussian with the edge value subtracted, so the bump reaches
// exactly zero at the support boundary and the beat train stays exactly
// periodic on the sample grid.
double gaussian_bump(double t, double center, double width) {
  if (std::abs(t - center) > kTemplateSupportWidths * width) return 0.0;
  const double z = (t - center) / width;
  const double edge =
      std::exp(-0.5 * kTemplateSupportWidths * kTemplateSupportWidths);
  return std::exp(-0.5 * z * z) - edge;
}

void validate(const SynthSpec& spec) {
  if (spec.hr_bpm <= 0.0) raise(ErrorCode::InvalidSpec, "hr_bpm must be > 0");
  if (spec.rr_brpm < 0.0) raise(ErrorCode::InvalidSpec, "rr_brpm must be >= 0");
  if (spec.wander_amp < 0.0) raise(ErrorCode::InvalidSpec, "wander_amp must be >= 0");
  if (spec.noise_std < 0.0) raise(ErrorCode::InvalidSpec, "noise_std must be >= 0");
  if (spec.fs <= 0.0) raise(ErrorCode::InvalidSpec, "fs must be > 0");
  if (spec.duration_s <= 0.0) raise(ErrorCode::InvalidSpec, "duration_s must be > 0");
  const double period = 60.0 / spec.hr_bpm;
  const BeatTemplate& bt = spec.beat_template;
  if (!(bt.systolic_offset_s < bt.dicrotic_offset_s && bt.dicrotic_offset_s < period))
    raise(ErrorCode::InvalidSpec,
          "beat template must satisfy systolic offset < dicrotic offset < beat period");
  if (bt.systolic_width_s <= 0.0 || bt.dicrotic_width_s <= 0.0)
    raise(ErrorCode::InvalidSpec, "template widths must be > 0");
}

}  // namespace

SynthResult synth_ppg(const SynthSpec& spec) {
  validate(spec);

  const double period = 60.0 / spec.hr_bpm;
  const std::size_t n =
      static_cast<std::size_t>(std::llround(spec.duration_s * spec.fs));

  SynthResult out;
  out.truth.hr_bpm = spec.hr_bpm;
  out.truth.rr_brpm = spec.rr_brpm;
  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * period;
    if (t >= spec.duration_s) break;
    out.truth.beat_times.push_back(t);
  }

  Signal& sig = out.signal;
  sig.fs = spec.fs;
  sig.subject_id = spec.subject_id;
  sig.start_time = 0.0;
  sig.samples.assign(n, 0.0);

  const BeatTemplate& bt = spec.beat_template;
  const double support =
      bt.dicrotic_offset_s + kTemplateSupportWidths * bt.dicrotic_width_s;
  for (double beat : out.truth.beat_times) {
    const std::size_t first =
        static_cast<std::size_t>(std::max(0.0, std::floor(beat * spec.fs)));
    const std::size_t last = std::min(
        n, static_cast<std::size_t>(std::ceil((beat + support) * spec.fs)) + 1);
    for (std::size_t i = first; i < last; ++i) {
      const double t = static_cast<double>(i) / spec.fs - beat;
      sig.samples[i] += gaussian_bump(t, bt.systolic_offset_s, bt.systolic_width_s) +
                        bt.dicrotic_amplitude *
                            gaussian_bump(t, bt.dicrotic_offset_s, bt.dicrotic_width_s);
    }
  }

  if (spec.wander_amp > 0.0 && spec.rr_brpm > 0.0) {
    const double f = spec.rr_brpm / 60.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / spec.fs;
      sig.samples[i] += spec.wander_amp * std::sin(2.0 * kPi * f * t);
    }
  }

  if (spec.noise_std > 0.0) {
    Rng rng(spec.seed);
    for (std::size_t i = 0; i < n; ++i)
      sig.samples[i] += spec.noise_std * rng.gaussian();
  }

  return out;
}

}  // namespace ppgbench
