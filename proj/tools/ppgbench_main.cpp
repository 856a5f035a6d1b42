// ppgbench command line: synthesize data, run the preprocessing and split
// protocols, evaluate baselines and toy transformer models, compute the
// seven comparison dimensions, and reproduce published win-score tables.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ppgbench/baselines.hpp"
#include "ppgbench/csv.hpp"
#include "ppgbench/dataset.hpp"
#include "ppgbench/errors.hpp"
#include "ppgbench/eval.hpp"
#include "ppgbench/model.hpp"
#include "ppgbench/rng.hpp"
#include "ppgbench/score_repro.hpp"
#include "ppgbench/signal.hpp"
#include "ppgbench/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ppgbench;

namespace {

constexpr const char* kVersion = "0.1.0";

struct GlobalOpts {
  std::uint64_t seed = 0;
  bool force = false;
  std::vector<std::string> argv;
};

std::uint64_t default_seed() {
  const char* env = std::getenv("BENCH_SEED");
  if (!env) return 0;
  char* end = nullptr;
  const auto value = std::strtoull(env, &end, 10);
  if (end == env || *end != '\0')
    raise(ErrorCode::InvalidSpec, std::string("BENCH_SEED is not an integer: ") + env);
  return value;
}

void ensure_writable(const std::string& path, bool force) {
  if (path.empty()) return;
  if (fs::exists(path) && !force)
    raise(ErrorCode::IoError, "refusing to overwrite " + path + " (pass --force)");
}

std::uint64_t config_hash(const std::vector<std::string>& argv) {
  std::uint64_t hash = 1469598103934665603ull;
  for (const auto& arg : argv)
    for (char c : arg) {
      hash ^= static_cast<unsigned char>(c);
      hash *= 1099511628211ull;
    }
  return hash;
}

// Machine-readable run manifest next to the primary output. The timestamp is
// the only field allowed to differ between identical runs.
void write_manifest(const std::string& primary_out, const GlobalOpts& opts,
                    const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs) {
  if (primary_out.empty()) return;
  json j;
  j["tool"] = "ppgbench";
  j["version"] = kVersion;
  j["seed"] = opts.seed;
  j["args"] = opts.argv;
  j["config_hash"] = config_hash(opts.argv);
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  j["timestamp_unix"] =
      std::chrono::duration_cast<std::chrono::seconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count();
  std::ofstream out(primary_out + ".manifest.json");
  if (!out) raise(ErrorCode::IoError, "cannot write manifest for " + primary_out);
  out << j.dump(2) << '\n';
}

// --- synth ---

struct SynthOpts {
  double hr = 72.0, rr = 15.0, wander = 0.1, noise = 0.0, fs = 40.0, duration = 30.0;
  double hr_jitter = 0.0;
  int count = 1;
  std::string label = "hr";
  std::string task_id;
  std::string subject_prefix = "synth";
  std::string out;
};

int run_synth(const GlobalOpts& g, const SynthOpts& o) {
  ensure_writable(o.out, g.force);
  std::vector<LabeledSegment> records;
  Rng jitter_rng(g.seed);
  for (int i = 0; i < o.count; ++i) {
    SynthSpec spec;
    spec.hr_bpm = o.hr + (o.hr_jitter > 0.0 ? jitter_rng.uniform(-o.hr_jitter, o.hr_jitter)
                                            : 0.0);
    spec.rr_brpm = o.rr;
    spec.wander_amp = o.wander;
    spec.noise_std = o.noise;
    spec.fs = o.fs;
    spec.duration_s = o.duration;
    spec.seed = g.seed + static_cast<std::uint64_t>(i);
    char subject[64];
    std::snprintf(subject, sizeof subject, "%s-%03d", o.subject_prefix.c_str(), i);
    spec.subject_id = subject;
    const SynthResult synth = synth_ppg(spec);

    LabeledSegment rec;
    rec.segment.samples = synth.signal.samples;
    rec.segment.fs = spec.fs;
    rec.segment.duration_s = spec.duration_s;
    rec.segment.subject_id = spec.subject_id;
    rec.segment.start_time = 0.0;
    rec.label_kind = LabelKind::Real;
    if (o.label == "hr") {
      rec.task_id = o.task_id.empty() ? "heart_rate" : o.task_id;
      rec.label = synth.truth.hr_bpm;
      rec.unit = "bpm";
    } else if (o.label == "rr") {
      rec.task_id = o.task_id.empty() ? "respiration_rate" : o.task_id;
      rec.label = synth.truth.rr_brpm;
      rec.unit = "brpm";
    } else {
      raise(ErrorCode::InvalidSpec, "--label must be hr or rr");
    }
    rec.direction = Direction::LowerBetter;
    records.push_back(std::move(rec));
  }
  write_jsonl(o.out, records);
  write_manifest(o.out, g, {}, {o.out});
  std::cout << "wrote " << records.size() << " record(s) to " << o.out << '\n';
  return 0;
}

// --- preprocess ---

struct PreprocessOpts {
  std::string in, out;
  double target_fs = 40.0;
  double window = 30.0;
  double pad_to = 30.0;
  int channel = 1;  // 1-based
  bool no_normalize = false;
};

// Reads segment records tolerantly (optional channel_count extension) into
// signals; the strict contract reader lives in the dataset module.
struct RawRecord {
  Signal signal;
  std::string task_id, unit;
  LabelKind label_kind = LabelKind::Real;
  double label = 0.0;
  Direction direction = Direction::LowerBetter;
};

std::vector<RawRecord> read_raw_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::IoError, "cannot open " + path);
  std::vector<RawRecord> out;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded())
      raise(ErrorCode::ParseError,
            path + " line " + std::to_string(line_number) + ": invalid JSON");
    auto need = [&](const char* field) -> const json& {
      if (!j.contains(field))
        raise(ErrorCode::SchemaError, path + " line " + std::to_string(line_number) +
                                          ": missing field \"" + field + "\"");
      return j[field];
    };
    RawRecord rec;
    rec.signal.subject_id = need("subject_id").get<std::string>();
    rec.signal.fs = need("fs").get<double>();
    rec.signal.start_time = need("start_time").get<double>();
    rec.signal.samples = need("samples").get<std::vector<double>>();
    rec.signal.channel_count = j.value("channel_count", 1);
    rec.task_id = need("task_id").get<std::string>();
    rec.unit = need("unit").get<std::string>();
    rec.label = need("label").get<double>();
    rec.label_kind =
        need("label_kind").get<std::string>() == "class" ? LabelKind::ClassIndex
                                                         : LabelKind::Real;
    rec.direction = need("direction").get<std::string>() == "higher"
                        ? Direction::HigherBetter
                        : Direction::LowerBetter;
    out.push_back(std::move(rec));
  }
  return out;
}

int run_preprocess(const GlobalOpts& g, const PreprocessOpts& o) {
  ensure_writable(o.out, g.force);
  if (o.channel < 1) raise(ErrorCode::InvalidSpec, "--channel is 1-based");
  const auto raw = read_raw_jsonl(o.in);
  std::vector<LabeledSegment> processed;
  for (const auto& rec : raw) {
    Signal sig = rec.signal.channel_count > 1 ? rec.signal.channel(o.channel - 1)
                                              : rec.signal;
    sig = resample(sig, o.target_fs);

    const double duration =
        static_cast<double>(sig.samples.size()) / sig.fs;
    if (duration < o.window && o.pad_to >= o.window) {
      Segment whole;
      whole.samples = sig.samples;
      whole.fs = sig.fs;
      whole.duration_s = duration;
      whole.subject_id = sig.subject_id;
      whole.start_time = sig.start_time;
      const Segment padded = repeat_pad(whole, o.pad_to);
      sig.samples = padded.samples;
    }

    for (Segment& window : segment_signal(sig, o.window)) {
      LabeledSegment out_rec;
      out_rec.segment = o.no_normalize ? window : minmax_normalize(window);
      out_rec.task_id = rec.task_id;
      out_rec.label_kind = rec.label_kind;
      out_rec.label = rec.label;
      out_rec.unit = rec.unit;
      out_rec.direction = rec.direction;
      processed.push_back(std::move(out_rec));
    }
  }
  write_jsonl(o.out, processed);
  write_manifest(o.out, g, {o.in}, {o.out});
  std::cout << "wrote " << processed.size() << " segment(s) to " << o.out << '\n';
  return 0;
}

// --- split ---

struct SplitOpts {
  std::string in, out;
  std::string protocol = "ratio";
  double val_ratio = 0.2;
  std::string ratios = "4:1:1";
};

int run_split(const GlobalOpts& g, const SplitOpts& o) {
  ensure_writable(o.out, g.force);
  const auto records = ingest_jsonl(o.in);
  int parts[3] = {4, 1, 1};
  if (std::sscanf(o.ratios.c_str(), "%d:%d:%d", &parts[0], &parts[1], &parts[2]) != 3 ||
      parts[0] < 1 || parts[1] < 0 || parts[2] < 0)
    raise(ErrorCode::InvalidSpec, "--ratios must look like 4:1:1");

  SplitPlan plan;
  if (o.protocol == "loo")
    plan = loo_folds(records, o.val_ratio, g.seed);
  else if (o.protocol == "ratio")
    plan = ratio_split(records, g.seed, parts[0], parts[1], parts[2]);
  else if (o.protocol == "record")
    plan = record_split(records, g.seed, parts[0], parts[1], parts[2]);
  else
    raise(ErrorCode::InvalidSpec, "--protocol must be loo, ratio, or record");

  json j;
  j["protocol"] = o.protocol;
  j["seed"] = plan.seed;
  j["folds"] = json::array();
  for (const auto& fold : plan.folds)
    j["folds"].push_back({{"train", fold.train}, {"val", fold.val}, {"test", fold.test}});
  std::ofstream out(o.out);
  if (!out) raise(ErrorCode::IoError, "cannot write " + o.out);
  out << j.dump(2) << '\n';
  write_manifest(o.out, g, {o.in}, {o.out});
  std::cout << "wrote " << plan.folds.size() << " fold(s) to " << o.out << '\n';
  return 0;
}

std::vector<std::size_t> load_fold_indices(const std::string& plan_path, int fold,
                                           const std::string& part) {
  std::ifstream in(plan_path);
  if (!in) raise(ErrorCode::IoError, "cannot open " + plan_path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) raise(ErrorCode::ParseError, plan_path + ": invalid JSON");
  const auto& folds = j.at("folds");
  if (fold < 0 || static_cast<std::size_t>(fold) >= folds.size())
    raise(ErrorCode::InvalidSpec, "fold index out of range");
  return folds[static_cast<std::size_t>(fold)].at(part).get<std::vector<std::size_t>>();
}

// --- baselines ---

struct BaselineCommon {
  std::string results;      // ResultRecord CSV to write
  std::string pred_out;     // optional per-record predictions CSV
  std::string dataset_id = "synth";
  std::string model_id;
  std::string task_id;
  bool append = false;
};

void append_result(const BaselineCommon& c, const GlobalOpts& g, const ResultRecord& rec,
                   const std::vector<std::string>& inputs) {
  std::vector<ResultRecord> rows;
  if (c.append && fs::exists(c.results)) rows = read_results_csv(c.results);
  if (!c.append) ensure_writable(c.results, g.force);
  rows.push_back(rec);
  write_results_csv(c.results, rows);
  write_manifest(c.results, g, inputs, {c.results});
}

void write_predictions(const std::string& path, bool force,
                       const std::vector<std::array<double, 2>>& pred_label) {
  if (path.empty()) return;
  ensure_writable(path, force);
  std::ofstream out(path);
  if (!out) raise(ErrorCode::IoError, "cannot write " + path);
  out << "index,prediction,label\n";
  for (std::size_t i = 0; i < pred_label.size(); ++i)
    out << i << ',' << pred_label[i][0] << ',' << pred_label[i][1] << '\n';
}

int run_baseline_rate(const GlobalOpts& g, const BaselineCommon& c, const std::string& in,
                      bool heart_rate) {
  const auto records = ingest_jsonl(in);
  if (records.empty()) raise(ErrorCode::EmptyData, "no records in " + in);
  std::vector<double> preds, labels;
  std::vector<std::array<double, 2>> pred_label;
  for (const auto& rec : records) {
    const Segment normalized = minmax_normalize(rec.segment);
    const double estimate =
        heart_rate ? hr_ibi(normalized) : rr_baseline_wander(normalized).brpm;
    preds.push_back(estimate);
    labels.push_back(rec.label);
    pred_label.push_back({estimate, rec.label});
  }
  ResultRecord row;
  row.task_id = c.task_id.empty() ? (heart_rate ? "heart_rate" : "respiration_rate")
                                  : c.task_id;
  row.dataset_id = c.dataset_id;
  row.model_id = c.model_id.empty() ? (heart_rate ? "ibi_baseline" : "bw_baseline")
                                    : c.model_id;
  row.model_size = 1;
  row.strategy = Strategy::Full;
  row.metric = Metric::Mae;
  row.value = mae(preds, labels);
  row.direction = Direction::LowerBetter;
  row.domain = DomainKind::In;
  append_result(c, g, row, {in});
  write_predictions(c.pred_out, g.force, pred_label);
  std::cout << row.task_id << " MAE " << row.value << " over " << preds.size()
            << " segment(s)\n";
  return 0;
}

int run_baseline_bp(const GlobalOpts& g, const BaselineCommon& c, const std::string& train_in,
                    const std::string& test_in, double lambda) {
  const auto train_records = ingest_jsonl(train_in);
  const auto test_records = ingest_jsonl(test_in);
  if (train_records.empty() || test_records.empty())
    raise(ErrorCode::EmptyData, "bp baseline needs train and test records");

  auto featurize = [](const LabeledSegment& rec) {
    return beat_features(minmax_normalize(rec.segment)).flat();
  };
  std::vector<std::vector<double>> x_train;
  std::vector<double> y_train;
  for (const auto& rec : train_records) {
    x_train.push_back(featurize(rec));
    y_train.push_back(rec.label);
  }
  const RidgeModel model = ridge_fit(x_train, y_train, lambda);

  std::vector<double> preds, labels;
  std::vector<std::array<double, 2>> pred_label;
  for (const auto& rec : test_records) {
    const double estimate = model.predict(featurize(rec));
    preds.push_back(estimate);
    labels.push_back(rec.label);
    pred_label.push_back({estimate, rec.label});
  }
  ResultRecord row;
  row.task_id = c.task_id.empty() ? test_records.front().task_id : c.task_id;
  row.dataset_id = c.dataset_id;
  row.model_id = c.model_id.empty() ? "morphology_ridge" : c.model_id;
  row.model_size = static_cast<double>(model.weights.size() + 1);
  row.strategy = Strategy::Full;
  row.metric = Metric::Mae;
  row.value = mae(preds, labels);
  row.direction = Direction::LowerBetter;
  row.domain = DomainKind::In;
  append_result(c, g, row, {train_in, test_in});
  write_predictions(c.pred_out, g.force, pred_label);
  std::cout << row.task_id << " MAE " << row.value << '\n';
  return 0;
}

int run_baseline_locf(const GlobalOpts& g, const BaselineCommon& c, const std::string& labs_in,
                      const std::string& queries_in) {
  const auto labs = read_lab_events_csv(labs_in);
  std::map<std::string, LabHistory> histories;
  for (const auto& lab : labs)
    histories[lab.subject_id].observations.emplace_back(lab.t, lab.value);
  for (auto& [subject, hist] : histories) {
    std::sort(hist.observations.begin(), hist.observations.end());
    for (std::size_t i = 1; i < hist.observations.size(); ++i)
      if (hist.observations[i].first == hist.observations[i - 1].first)
        raise(ErrorCode::SchemaError,
              "duplicate lab time for subject " + subject);
  }

  const CsvTable queries = read_csv(queries_in);
  const std::size_t c_subject = queries.column("subject_id");
  const std::size_t c_t = queries.column("t");
  std::optional<std::size_t> c_target;
  for (std::size_t i = 0; i < queries.header.size(); ++i)
    if (queries.header[i] == "target") c_target = i;

  std::vector<double> preds, labels;
  std::vector<std::array<double, 2>> pred_label;
  for (std::size_t i = 0; i < queries.rows.size(); ++i) {
    const auto& row = queries.rows[i];
    const auto it = histories.find(row[c_subject]);
    if (it == histories.end())
      raise(ErrorCode::NoHistory, "no labs for subject " + row[c_subject]);
    const double t = parse_double(row[c_t], queries_in, queries.line_numbers[i]);
    const double pred = locf_predict(it->second, t);
    preds.push_back(pred);
    if (c_target) {
      const double target = parse_double(row[*c_target], queries_in, queries.line_numbers[i]);
      labels.push_back(target);
      pred_label.push_back({pred, target});
    } else {
      pred_label.push_back({pred, std::nan("")});
    }
  }
  write_predictions(c.pred_out, g.force, pred_label);
  if (!labels.empty()) {
    ResultRecord row;
    row.task_id = c.task_id.empty() ? "locf" : c.task_id;
    row.dataset_id = c.dataset_id;
    row.model_id = c.model_id.empty() ? "locf_baseline" : c.model_id;
    row.model_size = 1;
    row.strategy = Strategy::Full;
    row.metric = Metric::Mae;
    row.value = mae(preds, labels);
    row.direction = Direction::LowerBetter;
    row.domain = DomainKind::In;
    append_result(c, g, row, {labs_in, queries_in});
    std::cout << row.task_id << " MAE " << row.value << '\n';
  } else {
    std::cout << "wrote " << preds.size() << " prediction(s)\n";
  }
  return 0;
}

int run_baseline_demographic(const GlobalOpts& g, const BaselineCommon& c,
                             const std::string& train_in, const std::string& test_in) {
  auto load = [](const std::string& path, std::vector<std::vector<double>>& x,
                 std::vector<double>& y) {
    const CsvTable table = read_csv(path);
    const std::size_t c_age = table.column("age");
    const std::size_t c_height = table.column("height");
    const std::size_t c_weight = table.column("weight");
    const std::size_t c_target = table.column("target");
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
      const auto& row = table.rows[i];
      x.push_back({parse_double(row[c_age], path, table.line_numbers[i]),
                   parse_double(row[c_height], path, table.line_numbers[i]),
                   parse_double(row[c_weight], path, table.line_numbers[i])});
      y.push_back(parse_double(row[c_target], path, table.line_numbers[i]));
    }
  };
  std::vector<std::vector<double>> x_train, x_test;
  std::vector<double> y_train, y_test;
  load(train_in, x_train, y_train);
  load(test_in, x_test, y_test);
  // plain least squares on the demographic covariates
  const RidgeModel model = ridge_fit(x_train, y_train, 0.0);
  std::vector<double> preds;
  std::vector<std::array<double, 2>> pred_label;
  for (std::size_t i = 0; i < x_test.size(); ++i) {
    preds.push_back(model.predict(x_test[i]));
    pred_label.push_back({preds.back(), y_test[i]});
  }
  ResultRecord row;
  row.task_id = c.task_id.empty() ? "demographic" : c.task_id;
  row.dataset_id = c.dataset_id;
  row.model_id = c.model_id.empty() ? "demographic_regression" : c.model_id;
  row.model_size = 4;
  row.strategy = Strategy::Full;
  row.metric = Metric::Mae;
  row.value = mae(preds, y_test);
  row.direction = Direction::LowerBetter;
  row.domain = DomainKind::In;
  append_result(c, g, row, {train_in, test_in});
  write_predictions(c.pred_out, g.force, pred_label);
  std::cout << row.task_id << " MAE " << row.value << '\n';
  return 0;
}

// --- train / evaluate ---

struct TrainOpts {
  std::string data, out, trace, init, plan;
  int fold = 0;
  std::string part = "train";
  std::string objective = "next_patch_mse";
  std::string mode = "causal";
  std::string freeze = "full";
  std::size_t layers = 2, d_model = 32, heads = 4, mlp = 64, patch_len = 40;
  double mask_fraction = 0.3;
  std::size_t classes = 0;
  std::size_t steps = 300, batch = 4;
  double lr = 1e-3;
  // which retargetable flags were given explicitly (matters with --init)
  bool objective_set = false, mode_set = false, mask_set = false, classes_set = false;
};

std::vector<TrainItem> to_items(const std::vector<LabeledSegment>& records,
                                std::size_t patch_len,
                                const std::vector<std::size_t>* indices) {
  std::vector<TrainItem> items;
  auto add = [&](const LabeledSegment& rec) {
    TrainItem item;
    item.patches = tokenize(rec.segment, patch_len);
    item.label = rec.label;
    items.push_back(std::move(item));
  };
  if (indices) {
    for (std::size_t idx : *indices) {
      if (idx >= records.size())
        raise(ErrorCode::InvalidSpec, "split index out of range");
      add(records[idx]);
    }
  } else {
    for (const auto& rec : records) add(rec);
  }
  return items;
}

int run_train(const GlobalOpts& g, const TrainOpts& o) {
  ensure_writable(o.out, g.force);
  if (!o.trace.empty()) ensure_writable(o.trace, g.force);

  const auto records = ingest_jsonl(o.data);
  std::optional<std::vector<std::size_t>> indices;
  if (!o.plan.empty()) indices = load_fold_indices(o.plan, o.fold, o.part);
  const auto items = to_items(records, o.patch_len, indices ? &*indices : nullptr);

  ModelParams params = [&] {
    if (o.init.empty()) {
      ModelConfig cfg;
      cfg.d_model = o.d_model;
      cfg.n_heads = o.heads;
      cfg.n_layers = o.layers;
      cfg.mlp_hidden = o.mlp;
      cfg.patch_len = o.patch_len;
      cfg.mode = o.mode == "causal" ? AttentionMode::Causal : AttentionMode::Bidirectional;
      cfg.objective = objective_from_string(o.objective);
      cfg.mask_fraction = o.mask_fraction;
      cfg.n_classes = o.classes;
      cfg.seed = g.seed;
      return init_params(cfg);
    }
    // Fine-tune a checkpoint: explicitly given flags retarget the objective,
    // attention mode, mask fraction, or task-head width. A new head width
    // keeps the backbone and freshly initializes only the mismatched head.
    const ModelParams loaded = load_checkpoint(o.init);
    ModelConfig cfg = loaded.config();
    if (o.objective_set) cfg.objective = objective_from_string(o.objective);
    if (o.mode_set)
      cfg.mode = o.mode == "causal" ? AttentionMode::Causal : AttentionMode::Bidirectional;
    if (o.mask_set) cfg.mask_fraction = o.mask_fraction;
    if (o.classes_set) cfg.n_classes = o.classes;
    cfg.seed = g.seed;
    ModelParams retargeted = init_params(cfg);
    for (std::size_t i = 0; i < retargeted.tensor_count(); ++i)
      if (retargeted.tensor(i).same_shape(loaded.tensor(i)))
        retargeted.tensor(i) = loaded.tensor(i);
    return retargeted;
  }();

  TrainerConfig trainer;
  trainer.lr = o.lr;
  trainer.steps = o.steps;
  trainer.batch = o.batch;
  trainer.seed = g.seed;
  trainer.freeze = o.freeze == "head" ? FreezeMode::HeadOnly : FreezeMode::Full;

  const TrainResult result = train(params, items, trainer);
  save_checkpoint(o.out, result.params);
  if (!o.trace.empty()) {
    std::ofstream trace(o.trace);
    if (!trace) raise(ErrorCode::IoError, "cannot write " + o.trace);
    trace << "step,loss\n";
    for (std::size_t i = 0; i < result.loss_trace.size(); ++i)
      trace << i << ',' << result.loss_trace[i] << '\n';
  }
  write_manifest(o.out, g, {o.data}, {o.out, o.trace});
  std::cout << "trained " << o.steps << " step(s); loss " << result.loss_trace.front()
            << " -> " << result.loss_trace.back() << '\n';
  return 0;
}

struct EvalOpts {
  std::string model, data, out, plan;
  int fold = 0;
  std::string part = "test";
  std::string model_id = "toy";
  std::string strategy = "full";
  std::string domain = "in";
  std::string dataset_id = "synth";
  std::string metric;  // default: f1 for class labels, mae for real
  std::string attn_entropy;  // optional per-layer-per-head entropy JSON
  bool append = false;
};

int run_evaluate(const GlobalOpts& g, const EvalOpts& o) {
  const ModelParams params = load_checkpoint(o.model);
  const auto records = ingest_jsonl(o.data);
  std::optional<std::vector<std::size_t>> indices;
  if (!o.plan.empty()) indices = load_fold_indices(o.plan, o.fold, o.part);

  std::vector<const LabeledSegment*> selected;
  if (indices) {
    for (std::size_t idx : *indices) selected.push_back(&records.at(idx));
  } else {
    for (const auto& rec : records) selected.push_back(&rec);
  }
  if (selected.empty()) raise(ErrorCode::EmptyData, "no records selected");

  const bool classify = selected.front()->label_kind == LabelKind::ClassIndex;
  std::vector<double> preds, targets;
  std::vector<int> pred_classes, label_classes;
  std::vector<std::vector<double>> entropy_sums;  // [layer][head], summed over records
  for (const auto* rec : selected) {
    const ForwardResult fwd = forward(params, tokenize(rec->segment, params.config().patch_len));
    if (!o.attn_entropy.empty()) {
      const auto entropy = attention_entropy(fwd.attn);
      if (entropy_sums.empty())
        entropy_sums.assign(entropy.size(),
                            std::vector<double>(entropy.front().size(), 0.0));
      for (std::size_t l = 0; l < entropy.size(); ++l)
        for (std::size_t h = 0; h < entropy[l].size(); ++h)
          entropy_sums[l][h] += entropy[l][h];
    }
    if (classify) {
      int best = 0;
      for (std::size_t c = 1; c < fwd.task_out.size(); ++c)
        if (fwd.task_out[c] > fwd.task_out[best]) best = static_cast<int>(c);
      pred_classes.push_back(best);
      label_classes.push_back(static_cast<int>(rec->label));
    } else {
      preds.push_back(fwd.task_out[0]);
      targets.push_back(rec->label);
    }
  }

  ResultRecord row;
  row.task_id = selected.front()->task_id;
  row.dataset_id = o.dataset_id;
  row.model_id = o.model_id;
  row.model_size = static_cast<double>(params.param_count());
  row.strategy = o.strategy == "head" ? Strategy::Head : Strategy::Full;
  row.domain = o.domain == "out" ? DomainKind::Out : DomainKind::In;
  if (!o.plan.empty()) {
    // downstream data volume for the size-regime analyses
    double hours = 0.0;
    for (std::size_t idx : load_fold_indices(o.plan, o.fold, "train"))
      hours += records.at(idx).segment.duration_s / 3600.0;
    row.data_hours = hours;
  }
  if (classify) {
    const ClassificationMetrics m = classification_metrics(pred_classes, label_classes);
    const bool use_accuracy = o.metric == "accuracy";
    row.metric = use_accuracy ? Metric::Accuracy : Metric::F1;
    row.value = use_accuracy ? m.accuracy : m.f1;
    row.direction = Direction::HigherBetter;
  } else {
    row.metric = Metric::Mae;
    row.value = mae(preds, targets);
    row.direction = Direction::LowerBetter;
  }

  std::vector<ResultRecord> rows;
  if (o.append && fs::exists(o.out)) rows = read_results_csv(o.out);
  if (!o.append) ensure_writable(o.out, g.force);
  rows.push_back(row);
  write_results_csv(o.out, rows);

  if (!o.attn_entropy.empty()) {
    ensure_writable(o.attn_entropy, g.force);
    json j;
    j["model_id"] = o.model_id;
    j["records"] = selected.size();
    j["mean_entropy"] = json::array();
    for (auto& per_head : entropy_sums) {
      for (double& h : per_head) h /= static_cast<double>(selected.size());
      j["mean_entropy"].push_back(per_head);
    }
    std::ofstream ent(o.attn_entropy);
    if (!ent) raise(ErrorCode::IoError, "cannot write " + o.attn_entropy);
    ent << j.dump(2) << '\n';
  }

  write_manifest(o.out, g, {o.model, o.data}, {o.out});
  std::cout << row.task_id << ' ' << metric_name(row.metric) << ' ' << row.value << '\n';
  return 0;
}

// --- report / reproduce ---

struct ReportOpts {
  std::string results, out, markdown;
  std::string regimes;     // optional domain-regime JSON
  std::string reference;   // regime comparison baseline model
  std::string challenger;
};

int run_report(const GlobalOpts& g, const ReportOpts& o) {
  const std::string& results_path = o.results;
  const std::string& out = o.out;
  const std::string& markdown = o.markdown;
  ensure_writable(out, g.force);
  if (!markdown.empty()) ensure_writable(markdown, g.force);
  const auto records = read_results_csv(results_path);
  if (records.empty()) raise(ErrorCode::EmptySelection, results_path + " has no rows");

  std::vector<ResultRecord> class_rows, reg_rows;
  for (const auto& rec : records)
    (rec.metric == Metric::Mae ? reg_rows : class_rows).push_back(rec);

  json j;
  std::string md;
  if (!class_rows.empty()) {
    const DimensionReport report = compute_dimensions(class_rows);
    j["classification"] = json::parse(dimension_report_json(report));
    md += "## Classification\n\n" + dimension_report_markdown(report) + "\n";
  }
  if (!reg_rows.empty()) {
    const DimensionReport report = compute_dimensions(reg_rows);
    j["regression"] = json::parse(dimension_report_json(report));
    md += "## Regression\n\n" + dimension_report_markdown(report) + "\n";
  }
  std::ofstream outf(out);
  if (!outf) raise(ErrorCode::IoError, "cannot write " + out);
  outf << j.dump(2) << '\n';
  if (!markdown.empty()) {
    std::ofstream mdf(markdown);
    if (!mdf) raise(ErrorCode::IoError, "cannot write " + markdown);
    mdf << md;
  }

  if (!o.regimes.empty()) {
    if (o.reference.empty() || o.challenger.empty())
      raise(ErrorCode::InvalidSpec, "--regimes needs --reference and --challenger");
    ensure_writable(o.regimes, g.force);
    const auto summaries = domain_regime_summary(records, o.reference, o.challenger);
    json jr;
    jr["reference"] = o.reference;
    jr["challenger"] = o.challenger;
    jr["regimes"] = json::array();
    for (const auto& s : summaries) {
      json row;
      row["domain"] = s.domain;
      row["size_regime"] = s.size_regime;
      row["count"] = s.count;
      row["mean_improvement_pct"] = s.mean_improvement;
      row["hours_correlation"] =
          s.hours_correlation ? json(*s.hours_correlation) : json(nullptr);
      jr["regimes"].push_back(row);
    }
    std::ofstream rf(o.regimes);
    if (!rf) raise(ErrorCode::IoError, "cannot write " + o.regimes);
    rf << jr.dump(2) << '\n';
  }

  write_manifest(out, g, {results_path}, {out, markdown});
  std::cout << "wrote " << out << '\n';
  return 0;
}

int run_reproduce(const GlobalOpts& g, const std::string& fixtures, const std::string& out,
                  bool strict) {
  if (!out.empty()) ensure_writable(out, g.force);
  const ScoreReport report = reproduce_scores(fixtures);
  std::cout << score_report_text(report);
  if (!out.empty()) {
    std::ofstream outf(out);
    if (!outf) raise(ErrorCode::IoError, "cannot write " + out);
    outf << score_report_json(report);
    write_manifest(out, g, {fixtures}, {out});
  }
  return (strict && !report.all_matched()) ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Benchmarking toolkit for physiological time-series models"};
  app.set_version_flag("--version", std::string("ppgbench ") + kVersion);
  app.require_subcommand(1);
  // global flags (--seed, --force) may appear after subcommand options
  app.fallthrough();

  GlobalOpts g;
  for (int i = 0; i < argc; ++i) g.argv.emplace_back(argv[i]);

  bool seed_given = false;
  app.add_option("--seed", g.seed, "RNG seed (default: BENCH_SEED env or 0)")
      ->each([&](const std::string&) { seed_given = true; });
  app.add_flag("--force", g.force, "overwrite existing outputs");

  SynthOpts synth_opts;
  auto* synth_cmd = app.add_subcommand("synth", "generate synthetic PPG records");
  synth_cmd->add_option("--hr", synth_opts.hr, "heart rate, bpm");
  synth_cmd->add_option("--rr", synth_opts.rr, "respiration rate, brpm");
  synth_cmd->add_option("--wander-amp", synth_opts.wander, "baseline wander amplitude");
  synth_cmd->add_option("--noise-std", synth_opts.noise, "additive gaussian noise std");
  synth_cmd->add_option("--fs", synth_opts.fs, "sampling rate, Hz");
  synth_cmd->add_option("--duration", synth_opts.duration, "seconds per record");
  synth_cmd->add_option("--count", synth_opts.count, "number of records");
  synth_cmd->add_option("--hr-jitter", synth_opts.hr_jitter, "uniform +- bpm per record");
  synth_cmd->add_option("--label", synth_opts.label, "hr | rr");
  synth_cmd->add_option("--task-id", synth_opts.task_id, "override task id");
  synth_cmd->add_option("--subject-prefix", synth_opts.subject_prefix, "subject id prefix");
  synth_cmd->add_option("--out", synth_opts.out, "output JSONL")->required();

  PreprocessOpts pre_opts;
  auto* pre_cmd = app.add_subcommand("preprocess", "resample, pad, window, normalize");
  pre_cmd->add_option("--in", pre_opts.in, "input JSONL")->required();
  pre_cmd->add_option("--out", pre_opts.out, "output JSONL")->required();
  pre_cmd->add_option("--target-fs", pre_opts.target_fs, "resample target, Hz");
  pre_cmd->add_option("--window", pre_opts.window, "window length, s");
  pre_cmd->add_option("--pad-to", pre_opts.pad_to, "repeat-pad short records to, s");
  pre_cmd->add_option("--channel", pre_opts.channel, "1-based analysis channel");
  pre_cmd->add_flag("--no-normalize", pre_opts.no_normalize, "skip min-max normalization");

  SplitOpts split_opts;
  auto* split_cmd = app.add_subcommand("split", "build train/val/test folds");
  split_cmd->add_option("--in", split_opts.in, "input JSONL")->required();
  split_cmd->add_option("--out", split_opts.out, "output plan JSON")->required();
  split_cmd->add_option("--protocol", split_opts.protocol, "loo | ratio | record");
  split_cmd->add_option("--val-ratio", split_opts.val_ratio, "loo validation share");
  split_cmd->add_option("--ratios", split_opts.ratios, "train:val:test, e.g. 4:1:1");

  auto* base_cmd = app.add_subcommand("baseline", "classical and statistical baselines");
  base_cmd->require_subcommand(1);
  BaselineCommon base_common;
  std::string base_in, base_train, base_test, base_labs, base_queries;
  double base_lambda = 1.0;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--results", base_common.results, "ResultRecord CSV")->required();
    cmd->add_option("--pred-out", base_common.pred_out, "per-record predictions CSV");
    cmd->add_option("--dataset-id", base_common.dataset_id, "dataset id for the row");
    cmd->add_option("--model-id", base_common.model_id, "model id for the row");
    cmd->add_option("--task-id", base_common.task_id, "task id for the row");
    cmd->add_flag("--append", base_common.append, "append to an existing results CSV");
  };
  auto* hr_cmd = base_cmd->add_subcommand("hr", "inter-beat-interval heart rate");
  hr_cmd->add_option("--in", base_in, "segments JSONL")->required();
  add_common(hr_cmd);
  auto* rr_cmd = base_cmd->add_subcommand("rr", "baseline-wander respiration rate");
  rr_cmd->add_option("--in", base_in, "segments JSONL")->required();
  add_common(rr_cmd);
  auto* bp_cmd = base_cmd->add_subcommand("bp", "pulse-morphology ridge regression");
  bp_cmd->add_option("--train", base_train, "training segments JSONL")->required();
  bp_cmd->add_option("--test", base_test, "test segments JSONL")->required();
  bp_cmd->add_option("--lambda", base_lambda, "ridge penalty");
  add_common(bp_cmd);
  auto* locf_cmd = base_cmd->add_subcommand("locf", "last-observation-carried-forward");
  locf_cmd->add_option("--labs", base_labs, "lab events CSV")->required();
  locf_cmd->add_option("--queries", base_queries, "queries CSV (subject_id,t[,target])")
      ->required();
  add_common(locf_cmd);
  auto* demo_cmd = base_cmd->add_subcommand("demographic", "age/height/weight regression");
  demo_cmd->add_option("--train", base_train, "training covariates CSV")->required();
  demo_cmd->add_option("--test", base_test, "test covariates CSV")->required();
  add_common(demo_cmd);

  TrainOpts train_opts;
  auto* train_cmd = app.add_subcommand("train", "pretrain or fine-tune a toy transformer");
  train_cmd->add_option("--data", train_opts.data, "segments JSONL")->required();
  train_cmd->add_option("--out", train_opts.out, "output checkpoint JSON")->required();
  train_cmd->add_option("--trace", train_opts.trace, "loss trace CSV");
  train_cmd->add_option("--init", train_opts.init, "start from this checkpoint");
  train_cmd->add_option("--plan", train_opts.plan, "split plan JSON");
  train_cmd->add_option("--fold", train_opts.fold, "fold index in the plan");
  train_cmd->add_option("--part", train_opts.part, "train | val | test");
  train_cmd
      ->add_option("--objective", train_opts.objective,
                   "next_patch_mse | next_patch_laplace | masked_mse | "
                   "task_regression | task_classification")
      ->each([&](const std::string&) { train_opts.objective_set = true; });
  train_cmd->add_option("--mode", train_opts.mode, "causal | bidirectional")
      ->each([&](const std::string&) { train_opts.mode_set = true; });
  train_cmd->add_option("--freeze", train_opts.freeze, "full | head");
  train_cmd->add_option("--layers", train_opts.layers, "transformer layers");
  train_cmd->add_option("--d-model", train_opts.d_model, "model width");
  train_cmd->add_option("--heads", train_opts.heads, "attention heads");
  train_cmd->add_option("--mlp", train_opts.mlp, "MLP hidden width");
  train_cmd->add_option("--patch-len", train_opts.patch_len, "samples per patch");
  train_cmd->add_option("--mask-fraction", train_opts.mask_fraction, "masked_mse fraction")
      ->each([&](const std::string&) { train_opts.mask_set = true; });
  train_cmd->add_option("--classes", train_opts.classes, "task classes (0 = regression)")
      ->each([&](const std::string&) { train_opts.classes_set = true; });
  train_cmd->add_option("--steps", train_opts.steps, "optimizer steps");
  train_cmd->add_option("--batch", train_opts.batch, "segments per step");
  train_cmd->add_option("--lr", train_opts.lr, "learning rate");

  EvalOpts eval_opts;
  auto* eval_cmd = app.add_subcommand("evaluate", "score a checkpoint on labeled segments");
  eval_cmd->add_option("--model", eval_opts.model, "checkpoint JSON")->required();
  eval_cmd->add_option("--data", eval_opts.data, "segments JSONL")->required();
  eval_cmd->add_option("--out", eval_opts.out, "ResultRecord CSV")->required();
  eval_cmd->add_option("--plan", eval_opts.plan, "split plan JSON");
  eval_cmd->add_option("--fold", eval_opts.fold, "fold index");
  eval_cmd->add_option("--part", eval_opts.part, "train | val | test");
  eval_cmd->add_option("--model-id", eval_opts.model_id, "model id for the row");
  eval_cmd->add_option("--strategy", eval_opts.strategy, "head | full");
  eval_cmd->add_option("--domain", eval_opts.domain, "in | out");
  eval_cmd->add_option("--dataset-id", eval_opts.dataset_id, "dataset id for the row");
  eval_cmd->add_option("--metric", eval_opts.metric, "f1 (default) or accuracy");
  eval_cmd->add_option("--attn-entropy", eval_opts.attn_entropy,
                       "write mean per-layer-per-head attention entropy JSON");
  eval_cmd->add_flag("--append", eval_opts.append, "append to an existing results CSV");

  ReportOpts report_opts;
  auto* report_cmd = app.add_subcommand("report", "seven-dimension radar report");
  report_cmd->add_option("--results", report_opts.results, "ResultRecord CSV")->required();
  report_cmd->add_option("--out", report_opts.out, "radar JSON")->required();
  report_cmd->add_option("--markdown", report_opts.markdown, "markdown tables");
  report_cmd->add_option("--regimes", report_opts.regimes,
                         "domain x data-size regime summary JSON");
  report_cmd->add_option("--reference", report_opts.reference,
                         "regime comparison reference model id");
  report_cmd->add_option("--challenger", report_opts.challenger,
                         "regime comparison challenger model id");

  std::string repro_fixtures = "fixtures/tables", repro_out;
  bool repro_strict = false;
  auto* repro_cmd =
      app.add_subcommand("reproduce", "recompute published win-score rows from fixtures");
  repro_cmd->add_option("--fixtures", repro_fixtures, "fixture directory");
  repro_cmd->add_option("--out", repro_out, "comparison report JSON");
  repro_cmd->add_flag("--strict", repro_strict, "exit nonzero on any mismatch");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  }
  if (!seed_given) {
    try {
      g.seed = default_seed();
    } catch (const Error& e) {
      std::cerr << "usage error: " << e.what() << '\n';
      return 2;
    }
  }

  try {
    if (app.got_subcommand(synth_cmd)) return run_synth(g, synth_opts);
    if (app.got_subcommand(pre_cmd)) return run_preprocess(g, pre_opts);
    if (app.got_subcommand(split_cmd)) return run_split(g, split_opts);
    if (app.got_subcommand(base_cmd)) {
      if (base_cmd->got_subcommand(hr_cmd)) return run_baseline_rate(g, base_common, base_in, true);
      if (base_cmd->got_subcommand(rr_cmd)) return run_baseline_rate(g, base_common, base_in, false);
      if (base_cmd->got_subcommand(bp_cmd))
        return run_baseline_bp(g, base_common, base_train, base_test, base_lambda);
      if (base_cmd->got_subcommand(locf_cmd))
        return run_baseline_locf(g, base_common, base_labs, base_queries);
      if (base_cmd->got_subcommand(demo_cmd))
        return run_baseline_demographic(g, base_common, base_train, base_test);
    }
    if (app.got_subcommand(train_cmd)) return run_train(g, train_opts);
    if (app.got_subcommand(eval_cmd)) return run_evaluate(g, eval_opts);
    if (app.got_subcommand(report_cmd)) return run_report(g, report_opts);
    if (app.got_subcommand(repro_cmd))
      return run_reproduce(g, repro_fixtures, repro_out, repro_strict);
  } catch (const Error& e) {
    const std::string stage =
        app.get_subcommands().empty() ? "ppgbench" : app.get_subcommands().front()->get_name();
    const bool input_contract =
        e.code() == ErrorCode::ParseError || e.code() == ErrorCode::SchemaError ||
        e.code() == ErrorCode::MissingFixture || e.code() == ErrorCode::InvalidSpec;
    std::cerr << (input_contract ? "usage error in " : "error in ") << stage << ": "
              << e.what() << '\n';
    return input_contract ? 2 : 1;
  } catch (const std::exception& e) {
    const std::string stage =
        app.get_subcommands().empty() ? "ppgbench" : app.get_subcommands().front()->get_name();
    std::cerr << "error in " << stage << ": " << e.what() << '\n';
    return 1;
  }
  return 2;
}
