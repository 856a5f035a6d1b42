#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ppgbench/errors.hpp"

namespace ppgbench {

// Sampled waveform. Multi-channel data is stored channel-major
// (channel 0 samples, then channel 1, ...), equal length per channel.
struct Signal {
  std::vector<double> samples;
  double fs = 0.0;              // Hz
  int channel_count = 1;
  std::string subject_id;
  double start_time = 0.0;      // seconds since recording epoch

  std::size_t samples_per_channel() const {
    return channel_count > 0 ? samples.size() / channel_count : 0;
  }

  // Extracts one channel as a single-channel signal (0-based index).
  Signal channel(int index) const;
};

struct Segment {
  std::vector<double> samples;
  double fs = 0.0;
  double duration_s = 0.0;
  std::string subject_id;
  double start_time = 0.0;

  double end_time() const { return start_time + duration_s; }
};

enum class LabelKind { ClassIndex, Real };
enum class Direction { HigherBetter, LowerBetter };

struct LabeledSegment {
  Segment segment;
  std::string task_id;
  LabelKind label_kind = LabelKind::Real;
  double label = 0.0;           // class index stored as an exact integer value
  std::string unit;             // bpm, mEq/L, mg/dL, %, mmHg, ms, g, brpm, degC, ...
  Direction direction = Direction::LowerBetter;
};

// (X - min) / (max - min), elementwise. Constant segments map to all zeros
// (the max == min case has no defined scale; zero keeps the range in [0,1]).
Segment minmax_normalize(const Segment& segment);

// Linear interpolation onto the target rate's time grid. Output length is
// round(n * target_fs / fs); identity when target_fs == fs.
Signal resample(const Signal& signal, double target_fs);

// Consecutive non-overlapping windows; a trailing remainder shorter than
// window_s is dropped. Padding short records is a separate, explicit step.
std::vector<Segment> segment_signal(const Signal& signal, double window_s);

// Tiles the segment end-to-end and truncates to round(target_s * fs).
Segment repeat_pad(const Segment& segment, double target_s);

}  // namespace ppgbench
