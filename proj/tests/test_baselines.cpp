#include <doctest.h>

#include <cmath>

#include "ppgbench/baselines.hpp"
#include "ppgbench/rng.hpp"
#include "ppgbench/synth.hpp"

using namespace ppgbench;

namespace {

Segment synth_segment(double hr, double noise, double wander_amp = 0.0,
                      double rr = 15.0, std::uint64_t seed = 0, double duration = 30.0) {
  SynthSpec spec;
  spec.hr_bpm = hr;
  spec.noise_std = noise;
  spec.wander_amp = wander_amp;
  spec.rr_brpm = rr;
  spec.seed = seed;
  spec.duration_s = duration;
  const SynthResult out = synth_ppg(spec);
  Segment seg;
  seg.samples = out.signal.samples;
  seg.fs = spec.fs;
  seg.duration_s = duration;
  seg.subject_id = out.signal.subject_id;
  return minmax_normalize(seg);
}

}  // namespace

TEST_CASE("detect_beats finds one peak per synthetic beat") {
  const BeatSet beats = detect_beats(synth_segment(72.0, 0.0));
  CHECK(beats.peak_indices.size() >= 35);
  CHECK(beats.peak_indices.size() <= 37);
  CHECK(beats.foot_indices.size() == beats.peak_indices.size() - 1);
  // feet interleave peaks
  for (std::size_t i = 0; i + 1 < beats.peak_indices.size(); ++i) {
    CHECK(beats.foot_indices[i] > beats.peak_indices[i]);
    CHECK(beats.foot_indices[i] < beats.peak_indices[i + 1]);
  }
}

TEST_CASE("detect_beats returns nothing on a flat signal") {
  Segment flat;
  flat.samples.assign(1200, 0.0);
  flat.fs = 40.0;
  flat.duration_s = 30.0;
  const BeatSet beats = detect_beats(flat);
  CHECK(beats.peak_indices.empty());
  CHECK(beats.foot_indices.empty());
}

TEST_CASE("peak spacing matches the ground-truth beat spacing within 2 samples") {
  SynthSpec spec;
  spec.hr_bpm = 72.0;
  const SynthResult truth = synth_ppg(spec);
  const BeatSet beats = detect_beats(synth_segment(72.0, 0.0));
  REQUIRE(beats.peak_indices.size() >= 3);
  for (std::size_t i = 0; i + 1 < beats.peak_indices.size(); ++i) {
    const double detected =
        static_cast<double>(beats.peak_indices[i + 1] - beats.peak_indices[i]);
    const double expected = (truth.truth.beat_times[1] - truth.truth.beat_times[0]) * 40.0;
    CHECK(std::abs(detected - expected) <= 2.0);
  }
}

TEST_CASE("hr_ibi recovers synthetic heart rates") {
  CHECK(std::abs(hr_ibi(synth_segment(72.0, 0.0)) - 72.0) <= 2.0);
  CHECK(std::abs(hr_ibi(synth_segment(60.0, 0.0)) - 60.0) <= 1.0);
}

TEST_CASE("hr_ibi error on clean input does not grow with beat count") {
  for (double hr : {63.0, 72.0, 88.0}) {
    double previous = 1e9;
    for (double duration : {15.0, 30.0, 60.0, 120.0}) {
      const double error =
          std::abs(hr_ibi(synth_segment(hr, 0.0, 0.0, 15.0, 0, duration)) - hr);
      CHECK(error <= previous + 1e-9);
      CHECK(error <= 2.0);
      previous = error;
    }
  }
}

TEST_CASE("hr_ibi needs at least two peaks") {
  SynthSpec spec;
  spec.hr_bpm = 40.0;
  spec.duration_s = 1.0;  // one beat only
  const SynthResult out = synth_ppg(spec);
  Segment seg;
  seg.samples = out.signal.samples;
  seg.fs = spec.fs;
  seg.duration_s = spec.duration_s;
  CHECK_THROWS_WITH_AS(hr_ibi(minmax_normalize(seg)), doctest::Contains("NoBeats"), Error);
}

TEST_CASE("welch_psd puts a pure tone in the right bin") {
  std::vector<double> samples;
  const double fs = 40.0;
  for (int i = 0; i < 4096; ++i)
    samples.push_back(std::sin(2.0 * M_PI * 0.25 * i / fs));
  const Spectrum spec = welch_psd(samples, fs);
  std::size_t peak = 0;
  for (std::size_t k = 1; k < spec.power.size(); ++k)
    if (spec.power[k] > spec.power[peak]) peak = k;
  CHECK(std::abs(spec.freqs[peak] - 0.25) <= spec.resolution);
}

TEST_CASE("welch_psd puts a constant signal entirely in the low bins") {
  std::vector<double> samples(1024, 3.0);
  const Spectrum spec = welch_psd(samples, 40.0);
  std::size_t peak = 0;
  for (std::size_t k = 1; k < spec.power.size(); ++k)
    if (spec.power[k] > spec.power[peak]) peak = k;
  CHECK(peak == 0);
  // raised-cosine window spreads DC into bin 1 only; beyond that, nothing
  for (std::size_t k = 2; k < spec.power.size(); ++k)
    CHECK(spec.power[k] <= 1e-18 * spec.power[0]);
}

TEST_CASE("welch_psd total power matches white-noise variance within 10%") {
  Rng rng(42);
  std::vector<double> samples;
  for (int i = 0; i < 16384; ++i) samples.push_back(rng.gaussian());
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= static_cast<double>(samples.size());
  double var = 0.0;
  for (double v : samples) var += (v - mean) * (v - mean);
  var /= static_cast<double>(samples.size());

  const Spectrum spec = welch_psd(samples, 40.0);
  double total = 0.0;
  for (double p : spec.power) total += p * spec.resolution;
  CHECK(std::abs(total - var) / var < 0.10);
}

TEST_CASE("welch_psd is offset invariant away from the DC neighborhood") {
  Rng rng(7);
  std::vector<double> samples;
  for (int i = 0; i < 2048; ++i) samples.push_back(rng.gaussian());
  std::vector<double> shifted = samples;
  for (double& v : shifted) v += 5.0;
  const Spectrum a = welch_psd(samples, 40.0);
  const Spectrum b = welch_psd(shifted, 40.0);
  // the raised-cosine window confines the offset to bins 0 and 1 exactly
  for (std::size_t k = 2; k < a.power.size(); ++k)
    CHECK(b.power[k] == doctest::Approx(a.power[k]).epsilon(1e-9));
  CHECK(b.power[0] > a.power[0]);
}

TEST_CASE("welch_psd rejects signals shorter than one segment") {
  CHECK_THROWS_WITH_AS(welch_psd(std::vector<double>(100, 0.0), 40.0),
                       doctest::Contains("SignalTooShort"), Error);
}

TEST_CASE("rr_baseline_wander recovers wander frequencies") {
  const RespirationEstimate at15 = rr_baseline_wander(synth_segment(72, 0, 0.2, 15.0));
  CHECK(std::abs(at15.brpm - 15.0) <= 1.0);
  CHECK_FALSE(at15.low_confidence);

  const RespirationEstimate at6 = rr_baseline_wander(synth_segment(72, 0, 0.2, 6.0));
  CHECK(std::abs(at6.brpm - 6.0) <= 1.0);
}

TEST_CASE("rr_baseline_wander flags missing wander as low confidence") {
  const RespirationEstimate est = rr_baseline_wander(synth_segment(72, 0, 0.0));
  CHECK(est.low_confidence);
  CHECK(est.brpm >= 6.0);
  CHECK(est.brpm <= 30.0);
}

TEST_CASE("beat_features recovers the template rise time") {
  const MorphFeatures features = beat_features(synth_segment(72.0, 0.0));
  REQUIRE(features.beats.size() >= 2);
  for (const auto& beat : features.beats)
    CHECK(std::abs(beat.rise_s - 0.15) <= 0.025 + 1e-9);  // one sample at 40 Hz
}

TEST_CASE("perfusion index is the AC amplitude over the DC mean") {
  // synthetic square-ish pulse: amplitude 1 over mean 2
  Segment seg;
  seg.fs = 40.0;
  seg.duration_s = 30.0;
  SynthSpec spec;
  spec.hr_bpm = 72.0;
  const SynthResult out = synth_ppg(spec);
  seg.samples = out.signal.samples;
  // shift so the mean is a known DC level without rescaling the AC part
  double mn = 1e300, mx = -1e300, mean = 0.0;
  for (double v : seg.samples) {
    mn = std::min(mn, v);
    mx = std::max(mx, v);
    mean += v;
  }
  mean /= static_cast<double>(seg.samples.size());
  const double target_mean = 2.0 * (mx - mn);
  for (double& v : seg.samples) v += target_mean - mean;
  const MorphFeatures features = beat_features(seg);
  for (const auto& beat : features.beats)
    CHECK(beat.perfusion_index ==
          doctest::Approx(beat.amplitude / target_mean).epsilon(0.05));
}

TEST_CASE("notch ratio present with a dicrotic hump, absent without") {
  const MorphFeatures with = beat_features(synth_segment(72.0, 0.0));
  std::size_t with_notch = 0;
  for (const auto& beat : with.beats)
    if (beat.notch_ratio) {
      ++with_notch;
      CHECK(*beat.notch_ratio > 0.0);
      CHECK(*beat.notch_ratio < 1.0);
    }
  CHECK(with_notch >= with.beats.size() - 1);

  SynthSpec no_hump;
  no_hump.hr_bpm = 72.0;
  no_hump.beat_template.dicrotic_amplitude = 0.0;
  const SynthResult out = synth_ppg(no_hump);
  Segment seg;
  seg.samples = out.signal.samples;
  seg.fs = no_hump.fs;
  seg.duration_s = no_hump.duration_s;
  const MorphFeatures without = beat_features(minmax_normalize(seg));
  for (const auto& beat : without.beats) CHECK_FALSE(beat.notch_ratio.has_value());
  // aggregates still defined for the other features
  CHECK(without.aggregates.size() == 8);
  CHECK(without.flat().size() == 32);
}

TEST_CASE("ridge_fit recovers planted linear targets at tiny lambda") {
  Rng rng(5);
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (int i = 0; i < 200; ++i) {
    const double a = rng.uniform(-2.0, 2.0);
    const double b = rng.uniform(-1.0, 3.0);
    x.push_back({a, b});
    y.push_back(2.0 * a - 3.0 * b);
  }
  const RidgeModel model = ridge_fit(x, y, 1e-12);
  // de-standardized weights
  CHECK(model.weights[0] / model.feature_scales[0] == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(model.weights[1] / model.feature_scales[1] == doctest::Approx(-3.0).epsilon(1e-6));
  CHECK(model.predict({1.0, 1.0}) == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("ridge_fit shrinks to the target mean at huge lambda") {
  std::vector<std::vector<double>> x = {{1}, {2}, {3}, {4}};
  std::vector<double> y = {1, 2, 3, 4};
  const RidgeModel model = ridge_fit(x, y, 1e12);
  CHECK(std::abs(model.weights[0]) < 1e-9);
  CHECK(model.predict({2.5}) == doctest::Approx(2.5).epsilon(1e-9));  // mean(y)
}

TEST_CASE("ridge_fit flags duplicated columns at lambda 0 and solves at lambda 1") {
  Rng rng(9);
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (int i = 0; i < 50; ++i) {
    const double a = rng.uniform();
    x.push_back({a, a});
    y.push_back(3.0 * a);
  }
  CHECK_THROWS_WITH_AS(ridge_fit(x, y, 0.0), doctest::Contains("SingularSystem"), Error);
  const RidgeModel model = ridge_fit(x, y, 1.0);
  CHECK(std::isfinite(model.weights[0]));
  CHECK(std::isfinite(model.weights[1]));
}

TEST_CASE("ridge predictions are invariant to rescaling a feature column") {
  Rng rng(13);
  std::vector<std::vector<double>> x, x_scaled;
  std::vector<double> y;
  for (int i = 0; i < 120; ++i) {
    const double a = rng.uniform(-1.0, 1.0);
    const double b = rng.uniform(0.0, 5.0);
    const double c = rng.uniform(-2.0, 2.0);
    x.push_back({a, b, c});
    x_scaled.push_back({a * 1000.0, b, c});
    y.push_back(1.5 * a - 0.5 * b + 0.25 * c + rng.gaussian() * 0.1);
  }
  const RidgeModel m1 = ridge_fit(x, y, 1.0);
  const RidgeModel m2 = ridge_fit(x_scaled, y, 1.0);
  for (int i = 0; i < 20; ++i) {
    std::vector<double> probe = {rng.uniform(-1.0, 1.0), rng.uniform(0.0, 5.0),
                                 rng.uniform(-2.0, 2.0)};
    std::vector<double> probe_scaled = {probe[0] * 1000.0, probe[1], probe[2]};
    CHECK(std::abs(m1.predict(probe) - m2.predict(probe_scaled)) < 1e-8);
  }
}

TEST_CASE("locf_predict returns the latest strictly earlier value") {
  LabHistory history;
  history.observations = {{0.0, 4.0}, {100.0, 4.4}};
  CHECK(locf_predict(history, 150.0) == 4.4);
  CHECK(locf_predict(history, 50.0) == 4.0);
  CHECK_THROWS_WITH_AS(locf_predict(history, 0.0), doctest::Contains("NoHistory"), Error);
}

TEST_CASE("locf_predict never consults observations at or after t") {
  LabHistory history;
  history.observations = {{10.0, 1.0}, {20.0, 2.0}, {30.0, 3.0}};
  // querying exactly at an observation time must not see it
  CHECK(locf_predict(history, 20.0) == 1.0);
  CHECK(locf_predict(history, 30.0) == 2.0);
  CHECK(locf_predict(history, 30.0 + 1e-9) == 3.0);
}

TEST_CASE("rr_baseline_wander needs at least 10 s of signal") {
  Segment seg;
  seg.fs = 40.0;
  seg.duration_s = 5.0;
  seg.samples.assign(200, 0.5);
  CHECK_THROWS_WITH_AS(rr_baseline_wander(seg), doctest::Contains("SignalTooShort"),
                       Error);
}
