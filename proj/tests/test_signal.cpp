#include <doctest.h>

#include <cmath>

#include "ppgbench/rng.hpp"
#include "ppgbench/signal.hpp"

using namespace ppgbench;

namespace {

Segment make_segment(std::vector<double> samples, double fs) {
  Segment seg;
  seg.duration_s = static_cast<double>(samples.size()) / fs;
  seg.samples = std::move(samples);
  seg.fs = fs;
  seg.subject_id = "s1";
  return seg;
}

Signal make_signal(std::vector<double> samples, double fs) {
  Signal sig;
  sig.samples = std::move(samples);
  sig.fs = fs;
  sig.subject_id = "s1";
  return sig;
}

}  // namespace

TEST_CASE("minmax_normalize maps range onto [0,1]") {
  const Segment out = minmax_normalize(make_segment({2, 4, 6}, 1.0));
  CHECK(out.samples[0] == doctest::Approx(0.0));
  CHECK(out.samples[1] == doctest::Approx(0.5));
  CHECK(out.samples[2] == doctest::Approx(1.0));
}

TEST_CASE("minmax_normalize sends constant segments to zero") {
  const Segment out = minmax_normalize(make_segment({5, 5, 5}, 1.0));
  for (double v : out.samples) CHECK(v == 0.0);
}

TEST_CASE("minmax_normalize fixes points already in [0,1] with min 0 max 1") {
  const Segment out = minmax_normalize(make_segment({0.0, 0.25, 1.0}, 1.0));
  CHECK(out.samples[0] == 0.0);
  CHECK(out.samples[1] == doctest::Approx(0.25));
  CHECK(out.samples[2] == 1.0);
}

TEST_CASE("minmax_normalize is idempotent on non-constant input") {
  Rng rng(11);
  std::vector<double> samples;
  for (int i = 0; i < 200; ++i) samples.push_back(rng.uniform(-3.0, 7.0));
  const Segment once = minmax_normalize(make_segment(samples, 40.0));
  const Segment twice = minmax_normalize(once);
  for (std::size_t i = 0; i < once.samples.size(); ++i)
    CHECK(twice.samples[i] == doctest::Approx(once.samples[i]).epsilon(1e-12));
}

TEST_CASE("resample reproduces an analytic sine within 1e-3") {
  const double fs_in = 80.0;
  std::vector<double> samples;
  for (int i = 0; i < 160; ++i)
    samples.push_back(std::sin(2.0 * M_PI * 1.0 * i / fs_in));
  const Signal out = resample(make_signal(samples, fs_in), 40.0);
  CHECK(out.samples.size() == 80);
  CHECK(out.fs == 40.0);
  double max_err = 0.0;
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    const double t = static_cast<double>(i) / 40.0;
    max_err = std::max(max_err, std::abs(out.samples[i] - std::sin(2.0 * M_PI * t)));
  }
  CHECK(max_err < 1e-3);
}

TEST_CASE("resample interpolates at non-integer rate ratios") {
  const double fs_in = 100.0;
  std::vector<double> samples;
  for (int i = 0; i < 1000; ++i)
    samples.push_back(std::sin(2.0 * M_PI * 0.7 * i / fs_in));
  const Signal out = resample(make_signal(samples, fs_in), 37.0);
  CHECK(out.samples.size() == 370);
  double max_err = 0.0;
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    const double t = static_cast<double>(i) / 37.0;
    max_err = std::max(max_err, std::abs(out.samples[i] - std::sin(2.0 * M_PI * 0.7 * t)));
  }
  CHECK(max_err < 2e-3);  // linear interpolation error bound at this rate
}

TEST_CASE("resample at the input rate is the exact identity") {
  const Signal in = make_signal({0.1, 0.5, -0.2, 0.9}, 40.0);
  const Signal out = resample(in, 40.0);
  CHECK(out.samples == in.samples);
}

TEST_CASE("resample length arithmetic matches round(n * ratio)") {
  std::vector<double> samples(2100, 0.0);
  const Signal out = resample(make_signal(samples, 1000.0), 40.0);
  CHECK(out.samples.size() == 84);
}

TEST_CASE("resample never changes duration by more than half a sample period") {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const double fs_in = rng.uniform(8.0, 500.0);
    const double fs_out = rng.uniform(8.0, 500.0);
    const std::size_t n = 16 + rng.index(4000);
    const Signal out = resample(make_signal(std::vector<double>(n, 0.0), fs_in), fs_out);
    const double duration_in = static_cast<double>(n) / fs_in;
    const double duration_out = static_cast<double>(out.samples.size()) / fs_out;
    CHECK(std::abs(duration_out - duration_in) <= 0.5 / fs_out + 1e-12);
  }
}

TEST_CASE("resample rejects empty input") {
  Signal sig;
  sig.fs = 40.0;
  CHECK_THROWS_WITH_AS(resample(sig, 40.0), doctest::Contains("EmptySignal"), Error);
}

TEST_CASE("segment_signal cuts non-overlapping windows and drops remainders") {
  std::vector<double> samples(60 * 40, 1.0);
  const auto segs = segment_signal(make_signal(samples, 40.0), 30.0);
  REQUIRE(segs.size() == 2);
  CHECK(segs[0].samples.size() == 1200);
  CHECK(segs[1].samples.size() == 1200);
  CHECK(segs[1].start_time == doctest::Approx(30.0));

  const auto partial = segment_signal(make_signal(std::vector<double>(59 * 40, 0.0), 40.0), 30.0);
  CHECK(partial.size() == 1);
  const auto none = segment_signal(make_signal(std::vector<double>(29 * 40, 0.0), 40.0), 30.0);
  CHECK(none.empty());
}

TEST_CASE("segment then concatenate reproduces a prefix of the input") {
  Rng rng(3);
  std::vector<double> samples;
  for (int i = 0; i < 1000; ++i) samples.push_back(rng.uniform());
  const Signal sig = make_signal(samples, 10.0);
  const auto segs = segment_signal(sig, 7.0);
  std::size_t k = 0;
  for (const auto& seg : segs)
    for (double v : seg.samples) CHECK(v == samples[k++]);
  CHECK(k == 980);  // 14 windows of 70 samples
}

TEST_CASE("repeat_pad tiles to the target length") {
  std::vector<double> samples(400);
  for (int i = 0; i < 400; ++i) samples[i] = i;
  const Segment padded = repeat_pad(make_segment(samples, 40.0), 30.0);
  REQUIRE(padded.samples.size() == 1200);
  for (std::size_t i = 0; i < 1200; ++i) CHECK(padded.samples[i] == samples[i % 400]);
}

TEST_CASE("repeat_pad keeps full-length input unchanged") {
  std::vector<double> samples(1200, 0.25);
  const Segment padded = repeat_pad(make_segment(samples, 40.0), 30.0);
  CHECK(padded.samples == samples);
}

TEST_CASE("repeat_pad truncates the final partial copy") {
  std::vector<double> samples(480);
  for (int i = 0; i < 480; ++i) samples[i] = i * 0.5;
  const Segment padded = repeat_pad(make_segment(samples, 40.0), 30.0);
  REQUIRE(padded.samples.size() == 1200);
  // two full copies plus the first 240 samples
  for (std::size_t i = 0; i < 1200; ++i) CHECK(padded.samples[i] == samples[i % 480]);
  CHECK(padded.samples[960 + 239] == samples[239]);
}

TEST_CASE("repeat_pad rejects targets shorter than the input") {
  CHECK_THROWS_WITH_AS(repeat_pad(make_segment(std::vector<double>(400, 0.0), 40.0), 5.0),
                       doctest::Contains("TargetShorterThanInput"), Error);
}

TEST_CASE("channel extraction is channel-major") {
  Signal sig;
  sig.fs = 10.0;
  sig.channel_count = 2;
  sig.samples = {1, 2, 3, 10, 20, 30};
  CHECK(sig.channel(0).samples == std::vector<double>{1, 2, 3});
  CHECK(sig.channel(1).samples == std::vector<double>{10, 20, 30});
}

TEST_CASE("minmax_normalize rejects empty segments") {
  Segment empty;
  empty.fs = 40.0;
  CHECK_THROWS_WITH_AS(minmax_normalize(empty), doctest::Contains("EmptySignal"), Error);
}
