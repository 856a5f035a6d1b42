#include "ppgbench/signal.hpp"

#include <algorithm>
#include <cmath>

namespace ppgbench {

Signal Signal::channel(int index) const {
  if (index < 0 || index >= channel_count)
    raise(ErrorCode::ShapeMismatch, "channel index " + std::to_string(index) +
                                        " out of range for " +
                                        std::to_string(channel_count) + " channels");
  const std::size_t n = samples_per_channel();
  Signal out = *this;
  out.channel_count = 1;
  out.samples.assign(samples.begin() + static_cast<std::ptrdiff_t>(index * n),
                     samples.begin() + static_cast<std::ptrdiff_t>((index + 1) * n));
  return out;
}

Segment minmax_normalize(const Segment& segment) {
  if (segment.samples.empty()) raise(ErrorCode::EmptySignal, "minmax_normalize");
  const auto [lo_it, hi_it] =
      std::minmax_element(segment.samples.begin(), segment.samples.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  Segment out = segment;
  if (hi == lo) {
    std::fill(out.samples.begin(), out.samples.end(), 0.0);
    return out;
  }
  const double inv = 1.0 / (hi - lo);
  for (double& v : out.samples) v = (v - lo) * inv;
  return out;
}

Signal resample(const Signal& signal, double target_fs) {
  if (signal.samples.empty()) raise(ErrorCode::EmptySignal, "resample");
  if (target_fs <= 0.0) raise(ErrorCode::InvalidSpec, "resample: target_fs must be > 0");
  if (signal.channel_count != 1)
    raise(ErrorCode::ShapeMismatch, "resample: select a channel first");
  if (target_fs == signal.fs) return signal;

  const std::size_t n_in = signal.samples.size();
  const std::size_t n_out = static_cast<std::size_t>(
      std::llround(static_cast<double>(n_in) * target_fs / signal.fs));

  Signal out = signal;
  out.fs = target_fs;
  out.samples.assign(n_out, 0.0);
  const double step = signal.fs / target_fs;  // input samples per output sample
  for (std::size_t i = 0; i < n_out; ++i) {
    const double pos = static_cast<double>(i) * step;
    const std::size_t k = std::min(static_cast<std::size_t>(pos), n_in - 1);
    if (k + 1 >= n_in) {
      out.samples[i] = signal.samples[n_in - 1];
      continue;
    }
    const double frac = pos - static_cast<double>(k);
    out.samples[i] =
        signal.samples[k] + frac * (signal.samples[k + 1] - signal.samples[k]);
  }
  return out;
}

std::vector<Segment> segment_signal(const Signal& signal, double window_s) {
  if (window_s <= 0.0) raise(ErrorCode::InvalidSpec, "segment: window_s must be > 0");
  if (signal.channel_count != 1)
    raise(ErrorCode::ShapeMismatch, "segment: select a channel first");
  const std::size_t window_n =
      static_cast<std::size_t>(std::llround(window_s * signal.fs));
  std::vector<Segment> out;
  if (window_n == 0) return out;
  for (std::size_t start = 0; start + window_n <= signal.samples.size();
       start += window_n) {
    Segment seg;
    seg.fs = signal.fs;
    seg.duration_s = window_s;
    seg.subject_id = signal.subject_id;
    seg.start_time = signal.start_time + static_cast<double>(start) / signal.fs;
    seg.samples.assign(signal.samples.begin() + static_cast<std::ptrdiff_t>(start),
                       signal.samples.begin() + static_cast<std::ptrdiff_t>(start + window_n));
    out.push_back(std::move(seg));
  }
  return out;
}

Segment repeat_pad(const Segment& segment, double target_s) {
  if (segment.samples.empty()) raise(ErrorCode::EmptySignal, "repeat_pad");
  if (target_s < segment.duration_s)
    raise(ErrorCode::TargetShorterThanInput,
          "repeat_pad: target " + std::to_string(target_s) + "s < input " +
              std::to_string(segment.duration_s) + "s");
  const std::size_t target_n =
      static_cast<std::size_t>(std::llround(target_s * segment.fs));
  Segment out = segment;
  out.duration_s = target_s;
  out.samples.resize(target_n);
  for (std::size_t i = segment.samples.size(); i < target_n; ++i)
    out.samples[i] = segment.samples[i % segment.samples.size()];
  return out;
}

}  // namespace ppgbench
