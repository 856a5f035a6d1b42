// Acceptance suite: one self-contained check per criterion, one PASS/FAIL
// line each, nonzero exit when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ppgbench/baselines.hpp"
#include "ppgbench/dataset.hpp"
#include "ppgbench/eval.hpp"
#include "ppgbench/model.hpp"
#include "ppgbench/rng.hpp"
#include "ppgbench/score_repro.hpp"
#include "ppgbench/signal.hpp"
#include "ppgbench/synth.hpp"

using namespace ppgbench;

namespace {

struct CheckFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool condition, const std::string& message) {
  if (!condition) throw CheckFailure(message);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Segment synth_segment(double hr, double noise, double wander_amp, double rr,
                      std::uint64_t seed) {
  SynthSpec spec;
  spec.hr_bpm = hr;
  spec.noise_std = noise;
  spec.wander_amp = wander_amp;
  spec.rr_brpm = rr;
  spec.seed = seed;
  const SynthResult out = synth_ppg(spec);
  Segment seg;
  seg.samples = out.signal.samples;
  seg.fs = spec.fs;
  seg.duration_s = spec.duration_s;
  seg.subject_id = out.signal.subject_id;
  return minmax_normalize(seg);
}

// --- criterion 1: score reproduction over the transcribed tables ---

void criterion_score_reproduction() {
  const auto start = std::chrono::steady_clock::now();
  const ScoreReport report = reproduce_scores(PPGBENCH_FIXTURE_DIR);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  require(elapsed < 5.0, "runtime " + fmt(elapsed) + " s exceeds 5 s");

  std::ostringstream detail;
  for (const auto& cmp : report.comparisons)
    if (!cmp.matched)
      detail << "\n         " << cmp.table_id << ' ' << cmp.row << ' ' << cmp.entry
             << ": computed " << fmt(cmp.computed) << " vs published " << cmp.published;
  for (const auto& note : report.notes) detail << "\n         note: " << note;
  require(report.all_matched(),
          std::to_string(report.matched_rows) + "/" + std::to_string(report.total_rows) +
              " score rows match" + detail.str());
}

// --- criterion 2: heart-rate oracle ---

void criterion_hr_oracle() {
  for (double hr : {60.0, 72.0, 96.0}) {
    const Segment clean = synth_segment(hr, 0.0, 0.0, 15.0, 1);
    const auto start = std::chrono::steady_clock::now();
    const double estimate = hr_ibi(clean);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    require(elapsed < 1.0, "hr_ibi took " + fmt(elapsed) + " s on one segment");
    require(std::abs(estimate - hr) <= 2.0,
            "clean hr " + fmt(hr) + " estimated " + fmt(estimate));

    const Segment noisy = synth_segment(hr, 0.05, 0.0, 15.0, 2);
    const double noisy_estimate = hr_ibi(noisy);
    require(std::abs(noisy_estimate - hr) <= 4.0,
            "noisy hr " + fmt(hr) + " estimated " + fmt(noisy_estimate));
  }
}

// --- criterion 3: respiration-rate oracle ---

void criterion_rr_oracle() {
  const double targets[] = {6.0, 15.0, 27.0};  // 0.10, 0.25, 0.45 Hz
  for (double target : targets) {
    const Segment seg = synth_segment(72.0, 0.0, 0.2, target, 3);
    const RespirationEstimate est = rr_baseline_wander(seg);
    require(std::abs(est.brpm - target) <= 1.0,
            "wander " + fmt(target) + " brpm estimated " + fmt(est.brpm));
  }
}

// --- criterion 4: ridge exactness ---

void criterion_ridge() {
  Rng rng(4);
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (int i = 0; i < 300; ++i) {
    const double a = rng.uniform(-2.0, 2.0);
    const double b = rng.uniform(-3.0, 1.0);
    x.push_back({a, b});
    y.push_back(2.0 * a - 3.0 * b);
  }
  const RidgeModel model = ridge_fit(x, y, 1e-12);
  const double w0 = model.weights[0] / model.feature_scales[0];
  const double w1 = model.weights[1] / model.feature_scales[1];
  require(std::abs(w0 - 2.0) <= 1e-6, "planted weight 2 recovered as " + fmt(w0));
  require(std::abs(w1 + 3.0) <= 1e-6, "planted weight -3 recovered as " + fmt(w1));

  std::vector<std::vector<double>> x_scaled = x;
  for (auto& row : x_scaled) row[1] *= 250.0;
  const RidgeModel scaled = ridge_fit(x_scaled, y, 1.0);
  const RidgeModel plain = ridge_fit(x, y, 1.0);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> probe = {rng.uniform(-2.0, 2.0), rng.uniform(-3.0, 1.0)};
    const double p1 = plain.predict(probe);
    const double p2 = scaled.predict({probe[0], probe[1] * 250.0});
    require(std::abs(p1 - p2) <= 1e-8,
            "rescaling moved a prediction by " + fmt(std::abs(p1 - p2)));
  }
}

// --- criterion 5: gradient verification ---

void criterion_gradients() {
  const auto start = std::chrono::steady_clock::now();
  const Objective objectives[] = {Objective::NextPatchMse, Objective::NextPatchLaplace,
                                  Objective::MaskedMse};
  const AttentionMode modes[] = {AttentionMode::Causal, AttentionMode::Bidirectional};
  const double eps = 1e-4;

  for (Objective objective : objectives) {
    for (AttentionMode mode : modes) {
      ModelConfig cfg;  // toy defaults: 2 layers, d 32, 4 heads, mlp 64, P 40
      cfg.objective = objective;
      cfg.mode = mode;
      cfg.seed = 17;
      ModelParams params = init_params(cfg);

      PatchSeq patches;
      patches.patches = Matrix(6, cfg.patch_len);
      Rng data_rng(55);
      for (double& v : patches.patches.data()) v = data_rng.uniform(0.0, 1.0);
      LossInput input;
      input.mask_seed = 7;

      const GradResult analytic = grad(params, patches, input);

      // at least 100 probes per tensor class
      std::map<std::string, int> probes;
      std::map<std::string, double> worst;
      Rng rng(991);
      while (true) {
        bool done = true;
        for (std::size_t ti = 0; ti < params.tensor_count(); ++ti) {
          const std::string cls = params.tensor_class(ti);
          if (probes[cls] >= 100) continue;
          done = false;
          Matrix& tensor = params.tensor(ti);
          const std::size_t j = rng.index(tensor.size());
          const double saved = tensor.data()[j];
          tensor.data()[j] = saved + eps;
          const double up = loss(params, patches, input);
          tensor.data()[j] = saved - eps;
          const double down = loss(params, patches, input);
          tensor.data()[j] = saved;
          const double fd = (up - down) / (2.0 * eps);
          const double an = analytic.grads[ti].data()[j];
          const double rel = std::abs(fd - an) / (std::abs(fd) + std::abs(an) + 1e-6);
          worst[cls] = std::max(worst[cls], rel);
          ++probes[cls];
        }
        if (done) break;
      }
      for (const auto& [cls, rel] : worst)
        require(rel <= 1e-4, std::string(objective_name(objective)) + "/" +
                                 (mode == AttentionMode::Causal ? "causal" : "bidi") +
                                 " class " + cls + " max rel err " + fmt(rel));
    }
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  require(elapsed < 60.0, "gradient check took " + fmt(elapsed) + " s");
}

// --- criterion 6: training sanity ---

void criterion_training() {
  const auto start = std::chrono::steady_clock::now();

  SynthSpec spec;  // exactly periodic: 60 bpm = one beat per 40-sample patch
  spec.hr_bpm = 60.0;
  spec.noise_std = 0.0;
  spec.wander_amp = 0.0;
  spec.duration_s = 120.0;
  const SynthResult synth = synth_ppg(spec);
  Signal signal = synth.signal;
  std::vector<TrainItem> data;
  for (const Segment& seg : segment_signal(signal, 30.0)) {
    TrainItem item;
    item.patches = tokenize(minmax_normalize(seg), 40);
    data.push_back(std::move(item));
  }

  ModelConfig cfg;  // toy defaults, causal next-patch
  cfg.seed = 12;
  const ModelParams initial = init_params(cfg);

  TrainerConfig trainer;
  trainer.steps = 300;
  trainer.batch = 4;
  trainer.lr = 1e-3;
  trainer.seed = 99;

  const TrainResult a = train(initial, data, trainer);
  require(a.loss_trace.size() == 300, "expected one loss per step");
  require(a.loss_trace.back() <= 0.5 * a.loss_trace.front(),
          "loss " + fmt(a.loss_trace.front()) + " -> " + fmt(a.loss_trace.back()) +
              " did not halve");

  const TrainResult b = train(initial, data, trainer);
  require(a.loss_trace == b.loss_trace, "identical seeds gave different loss traces");
  for (std::size_t i = 0; i < a.params.tensor_count(); ++i)
    require(a.params.tensor(i).data() == b.params.tensor(i).data(),
            "identical seeds gave different parameters");

  TrainerConfig head_only = trainer;
  head_only.steps = 50;
  head_only.freeze = FreezeMode::HeadOnly;
  const TrainResult h = train(initial, data, head_only);
  require(h.params.backbone_checksum() == initial.backbone_checksum(),
          "head-only tuning modified the backbone");

  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  require(elapsed < 120.0, "training sanity took " + fmt(elapsed) + " s");
}

// --- criterion 7: attention properties ---

void criterion_attention() {
  ModelConfig cfg;
  cfg.seed = 23;
  const ModelParams params = init_params(cfg);
  PatchSeq patches;
  patches.patches = Matrix(10, cfg.patch_len);
  Rng rng(31);
  for (double& v : patches.patches.data()) v = rng.uniform(0.0, 1.0);
  const ForwardResult fwd = forward(params, patches);
  for (const auto& layer : fwd.attn)
    for (const Matrix& probs : layer)
      for (std::size_t t = 0; t < probs.rows(); ++t) {
        double sum = 0.0;
        for (std::size_t u = 0; u < probs.cols(); ++u) {
          sum += probs(t, u);
          if (u > t)
            require(probs(t, u) == 0.0, "causal lookahead weight is nonzero");
        }
        require(std::abs(sum - 1.0) <= 1e-6, "attention row sums to " + fmt(sum));
      }

  for (std::size_t n : {2ul, 5ul, 17ul}) {
    std::vector<double> uniform(n, 1.0 / static_cast<double>(n));
    const double h = row_entropy(uniform.data(), n);
    require(std::abs(h - std::log(static_cast<double>(n))) <= 1e-9,
            "uniform entropy " + fmt(h) + " != ln " + std::to_string(n));
    std::vector<double> onehot(n, 0.0);
    onehot[n / 2] = 1.0;
    require(row_entropy(onehot.data(), n) == 0.0, "one-hot entropy is nonzero");
  }
}

// --- criterion 8: metric formula suite ---

void criterion_metric_formulas() {
  require(std::abs(tuning_gain({0.5}, {0.6}, Direction::HigherBetter) - 0.2) <= 1e-9,
          "tuning gain higher-better");
  require(std::abs(tuning_gain({2.0}, {1.0}, Direction::LowerBetter) - 1.0) <= 1e-9,
          "tuning gain inverse-MAE");
  require(tuning_gain({0.7}, {0.7}, Direction::HigherBetter) == 0.0, "tuning gain zero");

  require(nsd({2, 2, 2}) == 0.0, "nsd of constants");
  require(std::abs(nsd({1, 3}) - 0.5) <= 1e-9, "nsd of {1,3}");

  std::vector<double> sizes = {19e6, 85e6, 345e6, 1e9};
  std::vector<double> perf;
  for (double s : sizes) perf.push_back(2.0 * std::log(s) + 5.0);
  const ScalingFit fit = scalability_slope(sizes, perf);
  require(std::abs(fit.slope - 2.0) <= 1e-9, "planted slope 2 fitted as " + fmt(fit.slope));

  require(std::abs(pearson({1, 2, 3, 4}, {4, 7, 10, 13}) - 1.0) <= 1e-9, "pearson +1");
  require(std::abs(pearson({1, 2, 3}, {3, 2, 1}) + 1.0) <= 1e-9, "pearson -1");

  require(std::abs(relative_improvement(10.0, 9.0) - 10.0) <= 1e-9, "rel improvement");
  require(relative_improvement(4.0, 4.0) == 0.0, "rel improvement zero");

  const auto weights = inverse_frequency_weights({"A", "A", "A", "B"});
  require(std::abs(weights[0] - 4.0 / 6.0) <= 1e-9, "ifw majority weight");
  require(std::abs(weights[3] - 2.0) <= 1e-9, "ifw minority weight");
  require(std::abs(weights[0] + weights[1] + weights[2] - weights[3]) <= 1e-9,
          "ifw group sums differ");
}

// --- criterion 9: causality audit ---

void criterion_causality() {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    Signal ppg;
    ppg.subject_id = "p";
    ppg.fs = 40.0;
    ppg.start_time = rng.uniform(0.0, 100.0);
    ppg.samples.assign(static_cast<std::size_t>(40.0 * rng.uniform(60.0, 300.0)), 0.5);
    std::vector<LabEvent> labs;
    for (int i = 0; i < 5; ++i) {
      LabEvent lab;
      lab.subject_id = "p";
      lab.t = rng.uniform(0.0, 500.0);
      lab.value = rng.uniform(1.0, 5.0);
      labs.push_back(lab);
    }
    const double lookback = rng.uniform(0.0, 200.0);
    for (const auto& rec : align_labs(ppg, labs, lookback, 30.0)) {
      bool causal = false;
      for (const auto& lab : labs)
        if (lab.value == rec.label && rec.segment.end_time() <= lab.t &&
            rec.segment.end_time() >= lab.t - lookback)
          causal = true;
      require(causal, "align_labs emitted a non-causal or out-of-window pair");
    }
  }

  for (int trial = 0; trial < 1000; ++trial) {
    LabHistory history;
    double t = 0.0;
    for (int i = 0; i < 10; ++i) {
      t += rng.uniform(0.5, 10.0);
      history.observations.emplace_back(t, static_cast<double>(i));
    }
    // query exactly at observation times: the value at t must be invisible
    const std::size_t k = 1 + rng.index(9);
    const double query = history.observations[k].first;
    const double predicted = locf_predict(history, query);
    require(predicted == static_cast<double>(k - 1),
            "locf consulted an observation at or after the query time");
    bool threw = false;
    try {
      locf_predict(history, history.observations[0].first);
    } catch (const Error& e) {
      threw = e.code() == ErrorCode::NoHistory;
    }
    require(threw, "locf should have no history before the first observation");
  }
}

// --- criterion 10: split integrity ---

void criterion_splits() {
  Rng rng(101);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n_subjects = 6 + rng.index(35);
    std::vector<LabeledSegment> records;
    for (std::size_t s = 0; s < n_subjects; ++s) {
      const std::size_t n_records = 1 + rng.index(5);
      for (std::size_t r = 0; r < n_records; ++r) {
        LabeledSegment rec;
        rec.segment.subject_id = "s" + std::to_string(s);
        records.push_back(std::move(rec));
      }
    }
    const SplitPlan plan = ratio_split(records, rng.next_u64());
    const Fold& fold = plan.folds[0];
    std::set<std::string> train_subjects, val_subjects, test_subjects;
    for (std::size_t idx : fold.train) train_subjects.insert(records[idx].segment.subject_id);
    for (std::size_t idx : fold.val) val_subjects.insert(records[idx].segment.subject_id);
    for (std::size_t idx : fold.test) test_subjects.insert(records[idx].segment.subject_id);
    for (const auto& s : val_subjects)
      require(!train_subjects.count(s), "subject in both train and val");
    for (const auto& s : test_subjects) {
      require(!train_subjects.count(s), "subject in both train and test");
      require(!val_subjects.count(s), "subject in both val and test");
    }
    require(fold.train.size() + fold.val.size() + fold.test.size() == records.size(),
            "ratio split dropped or duplicated records");
  }

  std::vector<LabeledSegment> records;
  for (int s = 0; s < 17; ++s)
    for (int r = 0; r < 3; ++r) {
      LabeledSegment rec;
      rec.segment.subject_id = "s" + std::to_string(s);
      records.push_back(std::move(rec));
    }
  const SplitPlan plan = loo_folds(records, 0.2, 5);
  require(plan.folds.size() == 17, "leave-one-out fold count");
  std::set<std::string> tested;
  for (const Fold& fold : plan.folds) {
    require(!fold.test.empty(), "empty test fold");
    const std::string subject = records[fold.test[0]].segment.subject_id;
    for (std::size_t idx : fold.test)
      require(records[idx].segment.subject_id == subject, "mixed-subject test fold");
    require(tested.insert(subject).second, "subject tested twice");
    for (std::size_t idx : fold.train)
      require(records[idx].segment.subject_id != subject, "test subject leaked to train");
    for (std::size_t idx : fold.val)
      require(records[idx].segment.subject_id != subject, "test subject leaked to val");
  }
  require(tested.size() == 17, "not every subject was tested");
}

struct Criterion {
  int id;
  std::string name;
  std::function<void()> body;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "score reproduction over transcribed tables", criterion_score_reproduction},
      {2, "heart-rate oracle (60/72/96 bpm, clean and noisy)", criterion_hr_oracle},
      {3, "respiration-rate oracle (6/15/27 brpm)", criterion_rr_oracle},
      {4, "ridge exactness and rescaling invariance", criterion_ridge},
      {5, "gradient verification vs central differences", criterion_gradients},
      {6, "training sanity (halved loss, frozen backbone, determinism)",
       criterion_training},
      {7, "attention stochasticity, causality, entropy", criterion_attention},
      {8, "metric formula suite", criterion_metric_formulas},
      {9, "causality audit (lab alignment, LOCF)", criterion_causality},
      {10, "split integrity (1000 rosters, leave-one-out cover)", criterion_splits},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    const auto start = std::chrono::steady_clock::now();
    std::string failure;
    try {
      criterion.body();
    } catch (const CheckFailure& e) {
      failure = e.what();
    } catch (const std::exception& e) {
      failure = std::string("unexpected error: ") + e.what();
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (failure.empty()) {
      std::printf("[PASS] criterion %2d: %s (%.2f s)\n", criterion.id,
                  criterion.name.c_str(), elapsed);
    } else {
      ++failures;
      std::printf("[FAIL] criterion %2d: %s (%.2f s)\n       %s\n", criterion.id,
                  criterion.name.c_str(), elapsed, failure.c_str());
    }
  }
  if (failures > 0)
    std::printf("%d criterion(s) failed\n", failures);
  else
    std::printf("all criteria passed\n");
  return failures == 0 ? 0 : 1;
}
