#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "ppgbench/numeric.hpp"
#include "ppgbench/signal.hpp"

namespace ppgbench {

// Detection constants. The envelope method fixes the shape of the detector;
// these values set its operating band (40-200 bpm) and are exposed so they
// can be tightened per dataset.
struct BeatDetectorConfig {
  double envelope_window_s = 0.25;   // moving average over squared first difference
  double refractory_s = 0.3;         // minimum peak separation
  double threshold_ratio = 0.3;      // of the envelope maximum
};

struct BeatSet {
  std::vector<std::size_t> peak_indices;  // systolic peaks, strictly increasing
  std::vector<std::size_t> foot_indices;  // signal minima between consecutive peaks
};

struct Spectrum {
  std::vector<double> freqs;   // Hz, ascending from 0
  std::vector<double> power;   // one-sided PSD, integrates to signal power
  double resolution = 0.0;     // Hz between bins
};

struct WelchConfig {
  std::size_t seg_len_samples = 512;
  double overlap = 0.5;
  // window is a raised cosine (periodic Hann); fixed, not configurable
};

struct RespirationEstimate {
  double brpm = 0.0;
  bool low_confidence = false;
};

// Per-beat pulse-wave measurements plus robust window aggregates.
// notch_ratio is absent for beats without a detectable dicrotic notch.
struct MorphFeatures {
  struct Beat {
    double amplitude = 0.0;
    double rise_s = 0.0;
    double fall_s = 0.0;
    double max_upslope = 0.0;    // units/s
    double max_downslope = 0.0;  // units/s (positive magnitude)
    double area = 0.0;           // unit*s above the foot level
    double perfusion_index = 0.0;
    std::optional<double> notch_ratio;  // (notch_t - foot_t) / beat duration
  };
  struct Aggregate {
    double median = 0.0;
    double iqr = 0.0;
    double mean = 0.0;
    double std_dev = 0.0;
  };
  std::vector<Beat> beats;
  // Aggregates in feature order: amplitude, rise, fall, upslope, downslope,
  // area, perfusion index, notch ratio. Missing notch values are skipped.
  std::vector<Aggregate> aggregates;

  // Flattened [median, iqr, mean, std] x 8 features; feeds ridge_fit.
  std::vector<double> flat() const;
};

struct RidgeModel {
  std::vector<double> weights;        // on standardized features
  double intercept = 0.0;             // mean of the training targets
  double lambda = 1.0;
  std::vector<double> feature_means;
  std::vector<double> feature_scales;

  double predict(const std::vector<double>& features) const;
};

struct LabHistory {
  // (t seconds, value), strictly increasing t
  std::vector<std::pair<double, double>> observations;
};

// Envelope-based beat detection: moving-average (envelope_window_s) of the
// squared first difference, local maxima above threshold_ratio * max with
// the refractory spacing, then peaks refined to the signal maximum between
// bounding feet. May legitimately return fewer than 2 peaks.
BeatSet detect_beats(const Segment& segment,
                     const BeatDetectorConfig& config = {});

// 60 / median(inter-peak interval). Requires >= 2 detected peaks.
double hr_ibi(const Segment& segment, const BeatDetectorConfig& config = {});

// Averaged windowed periodograms. Frequency spacing fs / seg_len_samples.
Spectrum welch_psd(const std::vector<double>& samples, double fs,
                   const WelchConfig& config = {});

// Isolates the slow trend with a 2 s moving average, then reports the
// dominant PSD frequency in [0.1, 0.5] Hz as breaths/min. Uses a
// full-length periodogram with quadratic peak interpolation so 30 s windows
// resolve the band to well under 1 brpm.
RespirationEstimate rr_baseline_wander(const Segment& segment);

// Per-beat morphology between consecutive feet. Requires >= 2 complete beats.
MorphFeatures beat_features(const Segment& segment,
                            const BeatDetectorConfig& config = {});

// Closed-form ridge on internally standardized features:
// (X'X + lambda I) w = X'y, intercept = mean(y). lambda = 0 falls back to
// plain least squares and reports SingularSystem on rank deficiency.
RidgeModel ridge_fit(const std::vector<std::vector<double>>& features,
                     const std::vector<double>& targets, double lambda);

// Value of the latest observation strictly before t. Never consults
// observations at or after t.
double locf_predict(const LabHistory& history, double t);

}  // namespace ppgbench
