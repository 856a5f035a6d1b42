#include <doctest.h>

#include <cmath>

#include "ppgbench/synth.hpp"

using namespace ppgbench;

TEST_CASE("beat times are spaced exactly 60/hr") {
  SynthSpec spec;
  spec.hr_bpm = 72.0;
  spec.noise_std = 0.0;
  spec.wander_amp = 0.0;
  const SynthResult out = synth_ppg(spec);
  REQUIRE(out.truth.beat_times.size() == 36);
  for (std::size_t k = 1; k < out.truth.beat_times.size(); ++k)
    CHECK(out.truth.beat_times[k] - out.truth.beat_times[k - 1] ==
          doctest::Approx(60.0 / 72.0).epsilon(1e-12));
}

TEST_CASE("mean inter-beat interval equals 60/hr to machine precision") {
  SynthSpec spec;
  spec.hr_bpm = 97.3;
  const SynthResult out = synth_ppg(spec);
  const auto& bt = out.truth.beat_times;
  const double mean_ibi = (bt.back() - bt.front()) / static_cast<double>(bt.size() - 1);
  CHECK(mean_ibi == doctest::Approx(60.0 / 97.3).epsilon(1e-13));
}

TEST_CASE("same seed gives bitwise identical signals") {
  SynthSpec spec;
  spec.noise_std = 0.1;
  spec.wander_amp = 0.2;
  spec.seed = 1234;
  const SynthResult a = synth_ppg(spec);
  const SynthResult b = synth_ppg(spec);
  CHECK(a.signal.samples == b.signal.samples);
}

TEST_CASE("noise-free wander-free signal is exactly periodic at the beat period") {
  SynthSpec spec;
  spec.hr_bpm = 60.0;  // 40-sample period at 40 Hz
  spec.noise_std = 0.0;
  spec.wander_amp = 0.0;
  spec.duration_s = 10.0;
  const SynthResult out = synth_ppg(spec);
  const std::size_t period_n = 40;
  // interior samples; first and last beats see fewer template copies
  for (std::size_t i = period_n; i + 2 * period_n < out.signal.samples.size(); ++i)
    CHECK(out.signal.samples[i] ==
          doctest::Approx(out.signal.samples[i + period_n]).epsilon(1e-12));
}

TEST_CASE("wander adds the requested low-frequency component") {
  SynthSpec spec;
  spec.rr_brpm = 15.0;
  spec.wander_amp = 0.3;
  spec.noise_std = 0.0;
  SynthSpec no_wander = spec;
  no_wander.wander_amp = 0.0;
  const SynthResult with = synth_ppg(spec);
  const SynthResult without = synth_ppg(no_wander);
  // difference of the two signals is exactly the wander sine at 0.25 Hz
  for (std::size_t i = 0; i < with.signal.samples.size(); ++i) {
    const double t = static_cast<double>(i) / spec.fs;
    const double expected = 0.3 * std::sin(2.0 * M_PI * 0.25 * t);
    CHECK(with.signal.samples[i] - without.signal.samples[i] ==
          doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("invalid template ordering is rejected") {
  SynthSpec spec;
  spec.beat_template.systolic_offset_s = 0.5;
  spec.beat_template.dicrotic_offset_s = 0.4;
  CHECK_THROWS_WITH_AS(synth_ppg(spec), doctest::Contains("InvalidSpec"), Error);

  SynthSpec fast;
  fast.hr_bpm = 200.0;  // period 0.3 s < dicrotic offset 0.4 s
  CHECK_THROWS_WITH_AS(synth_ppg(fast), doctest::Contains("InvalidSpec"), Error);
}
