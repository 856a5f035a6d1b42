#include <benchmark/benchmark.h>

#include "ppgbench/baselines.hpp"
#include "ppgbench/eval.hpp"
#include "ppgbench/model.hpp"
#include "ppgbench/rng.hpp"
#include "ppgbench/signal.hpp"
#include "ppgbench/synth.hpp"

using namespace ppgbench;

namespace {

Segment bench_segment(double noise) {
  SynthSpec spec;
  spec.hr_bpm = 72.0;
  spec.noise_std = noise;
  spec.wander_amp = 0.15;
  const SynthResult out = synth_ppg(spec);
  Segment seg;
  seg.samples = out.signal.samples;
  seg.fs = spec.fs;
  seg.duration_s = spec.duration_s;
  return minmax_normalize(seg);
}

void bench_minmax_normalize(benchmark::State& state) {
  const Segment seg = bench_segment(0.05);
  for (auto _ : state) benchmark::DoNotOptimize(minmax_normalize(seg));
}
BENCHMARK(bench_minmax_normalize);

void bench_detect_beats(benchmark::State& state) {
  const Segment seg = bench_segment(0.05);
  for (auto _ : state) benchmark::DoNotOptimize(detect_beats(seg));
}
BENCHMARK(bench_detect_beats);

void bench_welch_psd(benchmark::State& state) {
  Rng rng(1);
  std::vector<double> samples;
  for (int i = 0; i < 4096; ++i) samples.push_back(rng.gaussian());
  for (auto _ : state) benchmark::DoNotOptimize(welch_psd(samples, 40.0));
}
BENCHMARK(bench_welch_psd);

void bench_rr_baseline_wander(benchmark::State& state) {
  const Segment seg = bench_segment(0.02);
  for (auto _ : state) benchmark::DoNotOptimize(rr_baseline_wander(seg));
}
BENCHMARK(bench_rr_baseline_wander);

void bench_forward(benchmark::State& state) {
  ModelConfig cfg;
  cfg.seed = 3;
  const ModelParams params = init_params(cfg);
  const PatchSeq patches = tokenize(bench_segment(0.0), cfg.patch_len);
  for (auto _ : state) benchmark::DoNotOptimize(forward(params, patches));
}
BENCHMARK(bench_forward);

void bench_grad(benchmark::State& state) {
  ModelConfig cfg;
  cfg.seed = 3;
  const ModelParams params = init_params(cfg);
  const PatchSeq patches = tokenize(bench_segment(0.0), cfg.patch_len);
  for (auto _ : state) benchmark::DoNotOptimize(grad(params, patches));
}
BENCHMARK(bench_grad);

void bench_win_score(benchmark::State& state) {
  Rng rng(9);
  std::vector<TaskCell> cells(64);
  std::vector<std::string> models = {"a", "b", "c", "d", "e", "f"};
  for (auto& cell : cells) {
    cell.direction = Direction::LowerBetter;
    for (const auto& model : models) cell.values[model] = rng.uniform(1.0, 20.0);
  }
  const std::map<std::string, std::vector<std::string>> groups = {
      {"g1", {"a", "b", "c"}}, {"g2", {"d", "e", "f"}}};
  for (auto _ : state) benchmark::DoNotOptimize(win_score(cells, models, groups));
}
BENCHMARK(bench_win_score);

}  // namespace

BENCHMARK_MAIN();
