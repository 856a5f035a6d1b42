#include "ppgbench/baselines.hpp"

#include <algorithm>
#include <cmath>

namespace ppgbench {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Centered moving average; the window is clipped at the ends.
std::vector<double> moving_average(const std::vector<double>& x, std::size_t window) {
  if (window < 1) window = 1;
  const std::size_t n = x.size();
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i];
  std::vector<double> out(n, 0.0);
  const std::size_t half = window / 2;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i > half ? i - half : 0;
    const std::size_t hi = std::min(n, i + half + 1);
    out[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
  }
  return out;
}

// Last index of the minimum over [lo, hi]. On flat valleys the latest sample
// marks the upstroke onset, which is what the morphology timings assume.
std::size_t argmin_last(const std::vector<double>& x, std::size_t lo, std::size_t hi) {
  std::size_t best = lo;
  for (std::size_t i = lo; i <= hi; ++i)
    if (x[i] <= x[best]) best = i;
  return best;
}

std::size_t argmax_first(const std::vector<double>& x, std::size_t lo, std::size_t hi) {
  std::size_t best = lo;
  for (std::size_t i = lo; i <= hi; ++i)
    if (x[i] > x[best]) best = i;
  return best;
}

MorphFeatures::Aggregate aggregate(const std::vector<double>& values) {
  MorphFeatures::Aggregate agg;
  if (values.empty()) return agg;
  agg.median = vec_median(values);
  agg.iqr = vec_iqr(values);
  agg.mean = vec_mean(values);
  agg.std_dev = vec_stddev_population(values);
  return agg;
}

}  // namespace

BeatSet detect_beats(const Segment& segment, const BeatDetectorConfig& config) {
  BeatSet beats;
  const std::vector<double>& x = segment.samples;
  if (x.size() < 3 || segment.fs <= 0.0) return beats;

  std::vector<double> energy(x.size() - 1, 0.0);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double d = x[i + 1] - x[i];
    energy[i] = d * d;
  }
  const std::size_t smooth_n = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(config.envelope_window_s * segment.fs)));
  const std::vector<double> envelope = moving_average(energy, smooth_n);

  const double peak_env = *std::max_element(envelope.begin(), envelope.end());
  if (peak_env <= 0.0) return beats;
  const double threshold = config.threshold_ratio * peak_env;

  std::vector<std::size_t> candidates;
  for (std::size_t i = 1; i + 1 < envelope.size(); ++i)
    if (envelope[i] > envelope[i - 1] && envelope[i] >= envelope[i + 1] &&
        envelope[i] >= threshold)
      candidates.push_back(i);

  // Enforce the refractory period highest-envelope-first, so a large beat
  // suppresses ripples around it rather than the other way round.
  std::vector<std::size_t> order(candidates.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return envelope[candidates[a]] > envelope[candidates[b]];
  });
  const double refractory_n = config.refractory_s * segment.fs;
  std::vector<std::size_t> accepted;
  for (std::size_t oi : order) {
    const std::size_t idx = candidates[oi];
    bool blocked = false;
    for (std::size_t a : accepted)
      if (std::abs(static_cast<double>(idx) - static_cast<double>(a)) < refractory_n) {
        blocked = true;
        break;
      }
    if (!blocked) accepted.push_back(idx);
  }
  std::sort(accepted.begin(), accepted.end());
  if (accepted.empty()) return beats;

  // Feet: signal minima between consecutive envelope peaks.
  std::vector<std::size_t> feet;
  for (std::size_t i = 0; i + 1 < accepted.size(); ++i)
    feet.push_back(argmin_last(x, accepted[i], accepted[i + 1]));

  // Refine each envelope peak (which sits on the upstroke) to the systolic
  // maximum of the signal between its bounding feet.
  std::vector<std::size_t> peaks;
  for (std::size_t i = 0; i < accepted.size(); ++i) {
    std::size_t lo = i == 0 ? 0 : feet[i - 1] + 1;
    std::size_t hi = i + 1 == accepted.size() ? x.size() - 1 : feet[i] - 1;
    if (lo > hi) {
      peaks.push_back(accepted[i]);
      continue;
    }
    peaks.push_back(argmax_first(x, lo, hi));
  }

  beats.peak_indices = std::move(peaks);
  beats.foot_indices = std::move(feet);
  return beats;
}

double hr_ibi(const Segment& segment, const BeatDetectorConfig& config) {
  const BeatSet beats = detect_beats(segment, config);
  if (beats.peak_indices.size() < 2)
    raise(ErrorCode::NoBeats, "hr_ibi needs >= 2 peaks, found " +
                                  std::to_string(beats.peak_indices.size()));
  std::vector<double> intervals;
  for (std::size_t i = 0; i + 1 < beats.peak_indices.size(); ++i)
    intervals.push_back(
        static_cast<double>(beats.peak_indices[i + 1] - beats.peak_indices[i]) /
        segment.fs);
  return 60.0 / vec_median(intervals);
}

Spectrum welch_psd(const std::vector<double>& samples, double fs,
                   const WelchConfig& config) {
  const std::size_t n = samples.size();
  const std::size_t seg_len = config.seg_len_samples;
  if (seg_len < 2) raise(ErrorCode::InvalidSpec, "welch_psd: seg_len must be >= 2");
  if (n < seg_len)
    raise(ErrorCode::SignalTooShort, "welch_psd: " + std::to_string(n) +
                                         " samples < segment length " +
                                         std::to_string(seg_len));

  // Periodic raised cosine.
  std::vector<double> window(seg_len);
  double window_power = 0.0;
  for (std::size_t j = 0; j < seg_len; ++j) {
    window[j] = 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(j) /
                                      static_cast<double>(seg_len)));
    window_power += window[j] * window[j];
  }

  const std::size_t step = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(
             static_cast<double>(seg_len) * (1.0 - config.overlap))));
  const std::size_t n_bins = seg_len / 2 + 1;

  Spectrum spec;
  spec.resolution = fs / static_cast<double>(seg_len);
  spec.freqs.resize(n_bins);
  for (std::size_t k = 0; k < n_bins; ++k)
    spec.freqs[k] = static_cast<double>(k) * spec.resolution;
  spec.power.assign(n_bins, 0.0);

  std::vector<double> buf(seg_len);
  std::size_t n_segments = 0;
  for (std::size_t start = 0; start + seg_len <= n; start += step) {
    for (std::size_t j = 0; j < seg_len; ++j) buf[j] = window[j] * samples[start + j];
    for (std::size_t k = 0; k < n_bins; ++k) {
      double re = 0.0, im = 0.0;
      const double w = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(seg_len);
      for (std::size_t j = 0; j < seg_len; ++j) {
        const double phase = w * static_cast<double>(j);
        re += buf[j] * std::cos(phase);
        im -= buf[j] * std::sin(phase);
      }
      // One-sided PSD; interior bins doubled so the spectrum integrates to
      // the signal power.
      const bool edge = (k == 0) || (seg_len % 2 == 0 && k == n_bins - 1);
      const double scale = (edge ? 1.0 : 2.0) / (fs * window_power);
      spec.power[k] += scale * (re * re + im * im);
    }
    ++n_segments;
  }
  for (double& p : spec.power) p /= static_cast<double>(n_segments);
  return spec;
}

RespirationEstimate rr_baseline_wander(const Segment& segment) {
  const double min_duration_s = 10.0;  // 0.1 Hz needs at least this much signal
  if (segment.fs <= 0.0 ||
      static_cast<double>(segment.samples.size()) < min_duration_s * segment.fs)
    raise(ErrorCode::SignalTooShort, "rr_baseline_wander needs >= 10 s of signal");

  const std::size_t trend_n = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(2.0 * segment.fs)));
  const std::vector<double> trend = moving_average(segment.samples, trend_n);

  // Full-length periodogram: on a 30 s window this gives 1/30 Hz bins, and
  // the quadratic refinement below brings the band argmax well under the
  // 1 brpm reporting granularity.
  WelchConfig cfg;
  cfg.seg_len_samples = trend.size();
  const Spectrum spec = welch_psd(trend, segment.fs, cfg);

  std::size_t lo = 0, hi = 0;
  for (std::size_t k = 0; k < spec.freqs.size(); ++k) {
    if (spec.freqs[k] < 0.1) lo = k + 1;
    if (spec.freqs[k] <= 0.5) hi = k;
  }
  if (lo > hi) raise(ErrorCode::SignalTooShort, "no PSD bins inside 0.1-0.5 Hz");

  std::size_t peak = lo;
  for (std::size_t k = lo; k <= hi; ++k)
    if (spec.power[k] > spec.power[peak]) peak = k;

  double refined = static_cast<double>(peak);
  if (peak > 0 && peak + 1 < spec.power.size()) {
    const double pm = spec.power[peak - 1];
    const double p0 = spec.power[peak];
    const double pp = spec.power[peak + 1];
    const double denom = pm - 2.0 * p0 + pp;
    if (denom < 0.0) {
      double delta = 0.5 * (pm - pp) / denom;
      delta = std::clamp(delta, -0.5, 0.5);
      refined += delta;
    }
  }
  double freq = refined * spec.resolution;
  freq = std::clamp(freq, 0.1, 0.5);

  double band_mean = 0.0;
  for (std::size_t k = lo; k <= hi; ++k) band_mean += spec.power[k];
  band_mean /= static_cast<double>(hi - lo + 1);

  RespirationEstimate est;
  est.brpm = 60.0 * freq;
  est.low_confidence =
      band_mean <= 0.0 || spec.power[peak] < 4.0 * band_mean;
  return est;
}

MorphFeatures beat_features(const Segment& segment, const BeatDetectorConfig& config) {
  const BeatSet beats = detect_beats(segment, config);
  const std::vector<double>& x = segment.samples;
  // A complete beat needs a foot on both sides: peaks k=1..m-2 qualify.
  if (beats.peak_indices.size() < 4 || beats.foot_indices.size() < 3)
    raise(ErrorCode::NoBeats, "beat_features needs >= 2 complete beats");

  const double dc = vec_mean(x);
  MorphFeatures out;

  for (std::size_t b = 0; b + 1 < beats.foot_indices.size(); ++b) {
    const std::size_t foot = beats.foot_indices[b];
    const std::size_t next_foot = beats.foot_indices[b + 1];
    const std::size_t peak = beats.peak_indices[b + 1];
    if (!(foot < peak && peak < next_foot)) continue;

    MorphFeatures::Beat beat;
    beat.amplitude = x[peak] - x[foot];
    beat.rise_s = static_cast<double>(peak - foot) / segment.fs;
    beat.fall_s = static_cast<double>(next_foot - peak) / segment.fs;

    double up = 0.0, down = 0.0;
    for (std::size_t i = foot; i < peak; ++i)
      up = std::max(up, (x[i + 1] - x[i]) * segment.fs);
    for (std::size_t i = peak; i < next_foot; ++i)
      down = std::max(down, (x[i] - x[i + 1]) * segment.fs);
    beat.max_upslope = up;
    beat.max_downslope = down;

    double area = 0.0;
    for (std::size_t i = foot; i < next_foot; ++i) area += x[i] - x[foot];
    beat.area = area / segment.fs;

    beat.perfusion_index = dc != 0.0 ? beat.amplitude / dc : 0.0;

    // Dicrotic notch: every pulse has one first-derivative minimum on the
    // systolic downstroke; a second minimum only appears when a dicrotic
    // wave interrupts the decay. That second minimum marks the notch.
    std::vector<std::size_t> deriv_minima;
    for (std::size_t i = peak + 1; i + 1 < next_foot; ++i) {
      const double dm = x[i] - x[i - 1];
      const double d0 = x[i + 1] - x[i];
      const double dp = i + 2 <= next_foot ? x[i + 2] - x[i + 1] : d0;
      if (d0 < dm && d0 <= dp) deriv_minima.push_back(i);
    }
    if (deriv_minima.size() >= 2) {
      const double notch_t = static_cast<double>(deriv_minima[1] - foot) / segment.fs;
      const double duration = static_cast<double>(next_foot - foot) / segment.fs;
      const double ratio = notch_t / duration;
      if (ratio > 0.0 && ratio < 1.0) beat.notch_ratio = ratio;
    }

    out.beats.push_back(beat);
  }

  if (out.beats.size() < 2) raise(ErrorCode::NoBeats, "fewer than 2 usable beats");

  auto collect = [&](auto getter) {
    std::vector<double> values;
    for (const auto& beat : out.beats) {
      const auto v = getter(beat);
      if (v.has_value()) values.push_back(*v);
    }
    return values;
  };
  using B = MorphFeatures::Beat;
  auto opt = [](double v) { return std::optional<double>(v); };
  out.aggregates = {
      aggregate(collect([&](const B& b) { return opt(b.amplitude); })),
      aggregate(collect([&](const B& b) { return opt(b.rise_s); })),
      aggregate(collect([&](const B& b) { return opt(b.fall_s); })),
      aggregate(collect([&](const B& b) { return opt(b.max_upslope); })),
      aggregate(collect([&](const B& b) { return opt(b.max_downslope); })),
      aggregate(collect([&](const B& b) { return opt(b.area); })),
      aggregate(collect([&](const B& b) { return opt(b.perfusion_index); })),
      aggregate(collect([&](const B& b) { return b.notch_ratio; })),
  };
  return out;
}

std::vector<double> MorphFeatures::flat() const {
  std::vector<double> out;
  out.reserve(aggregates.size() * 4);
  for (const auto& agg : aggregates) {
    out.push_back(agg.median);
    out.push_back(agg.iqr);
    out.push_back(agg.mean);
    out.push_back(agg.std_dev);
  }
  return out;
}

RidgeModel ridge_fit(const std::vector<std::vector<double>>& features,
                     const std::vector<double>& targets, double lambda) {
  const std::size_t n = features.size();
  if (n == 0 || n != targets.size())
    raise(ErrorCode::LengthMismatch, "ridge_fit: rows(X) must equal len(y)");
  const std::size_t f = features[0].size();
  for (const auto& row : features)
    if (row.size() != f) raise(ErrorCode::ShapeMismatch, "ridge_fit: ragged feature rows");
  if (lambda < 0.0) raise(ErrorCode::InvalidSpec, "ridge_fit: lambda must be >= 0");

  RidgeModel model;
  model.lambda = lambda;
  model.feature_means.assign(f, 0.0);
  model.feature_scales.assign(f, 1.0);
  for (std::size_t j = 0; j < f; ++j) {
    double mu = 0.0;
    for (std::size_t i = 0; i < n; ++i) mu += features[i][j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = features[i][j] - mu;
      var += d * d;
    }
    const double sd = std::sqrt(var / static_cast<double>(n));
    model.feature_means[j] = mu;
    model.feature_scales[j] = sd > 0.0 ? sd : 1.0;
  }

  double y_mean = 0.0;
  for (double y : targets) y_mean += y;
  y_mean /= static_cast<double>(n);
  model.intercept = y_mean;

  Matrix xtx(f, f, 0.0);
  std::vector<double> xty(f, 0.0);
  std::vector<double> zrow(f, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < f; ++j)
      zrow[j] = (features[i][j] - model.feature_means[j]) / model.feature_scales[j];
    for (std::size_t j = 0; j < f; ++j) {
      xty[j] += zrow[j] * (targets[i] - y_mean);
      for (std::size_t k = j; k < f; ++k) xtx(j, k) += zrow[j] * zrow[k];
    }
  }
  for (std::size_t j = 0; j < f; ++j) {
    for (std::size_t k = 0; k < j; ++k) xtx(j, k) = xtx(k, j);
    xtx(j, j) += lambda;
  }

  model.weights = solve_linear(std::move(xtx), std::move(xty));
  return model;
}

double RidgeModel::predict(const std::vector<double>& features) const {
  if (features.size() != weights.size())
    raise(ErrorCode::ShapeMismatch, "ridge predict: feature count mismatch");
  double acc = intercept;
  for (std::size_t j = 0; j < weights.size(); ++j)
    acc += weights[j] * (features[j] - feature_means[j]) / feature_scales[j];
  return acc;
}

double locf_predict(const LabHistory& history, double t) {
  const auto& obs = history.observations;
  double value = 0.0;
  bool found = false;
  for (const auto& [time, v] : obs) {
    if (time < t) {
      value = v;
      found = true;
    } else {
      break;
    }
  }
  if (!found)
    raise(ErrorCode::NoHistory, "no observation strictly before t=" + std::to_string(t));
  return value;
}

}  // namespace ppgbench
