#include "ppgbench/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "ppgbench/csv.hpp"
#include "ppgbench/numeric.hpp"
#include "ppgbench/rng.hpp"

namespace ppgbench {

using nlohmann::json;

namespace {

const std::pair<const char*, Analyte> kAnalytes[] = {
    {"potassium", Analyte::Potassium}, {"sodium", Analyte::Sodium},
    {"glucose", Analyte::Glucose},     {"a1c", Analyte::A1c},
    {"troponin", Analyte::Troponin},   {"lactate", Analyte::Lactate},
    {"hdl", Analyte::Hdl},             {"ldl", Analyte::Ldl},
    {"lvef", Analyte::Lvef},           {"lvmass", Analyte::LvMass},
    {"pr", Analyte::Pr},               {"qrs", Analyte::Qrs},
    {"qt", Analyte::Qt},               {"sbp", Analyte::Sbp},
    {"dbp", Analyte::Dbp},             {"generic", Analyte::Generic},
};

const json& require_field(const json& record, const char* name, std::size_t line) {
  auto it = record.find(name);
  if (it == record.end())
    raise(ErrorCode::SchemaError,
          "line " + std::to_string(line) + ": missing field \"" + name + "\"");
  return *it;
}

std::vector<std::size_t> sorted(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  return v;
}

// Shared subject-level partition arithmetic: smaller partitions floor,
// remainder to train.
void partition_counts(std::size_t n, int train_parts, int val_parts, int test_parts,
                      std::size_t& n_val, std::size_t& n_test) {
  const int total = train_parts + val_parts + test_parts;
  n_val = static_cast<std::size_t>(n) * static_cast<std::size_t>(val_parts) /
          static_cast<std::size_t>(total);
  n_test = static_cast<std::size_t>(n) * static_cast<std::size_t>(test_parts) /
           static_cast<std::size_t>(total);
}

std::vector<std::string> distinct_subjects(const std::vector<LabeledSegment>& records) {
  std::set<std::string> seen;
  for (const auto& rec : records) seen.insert(rec.segment.subject_id);
  return {seen.begin(), seen.end()};
}

}  // namespace

Analyte analyte_from_string(const std::string& name) {
  for (const auto& [text, value] : kAnalytes)
    if (name == text) return value;
  raise(ErrorCode::ParseError, "unknown analyte '" + name + "'");
}

const char* analyte_name(Analyte analyte) {
  for (const auto& [text, value] : kAnalytes)
    if (value == analyte) return text;
  return "generic";
}

std::vector<LabeledSegment> ingest_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::IoError, "cannot open " + path);

  std::vector<LabeledSegment> out;
  std::map<std::string, std::string> task_units;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.is_object())
      raise(ErrorCode::ParseError, "line " + std::to_string(line_number) +
                                       ": not a valid JSON object");

    LabeledSegment seg;
    try {
      seg.segment.subject_id =
          require_field(record, "subject_id", line_number).get<std::string>();
      seg.task_id = require_field(record, "task_id", line_number).get<std::string>();
      seg.segment.fs = require_field(record, "fs", line_number).get<double>();
      seg.segment.duration_s =
          require_field(record, "duration_s", line_number).get<double>();
      const json& samples = require_field(record, "samples", line_number);
      if (!samples.is_array())
        raise(ErrorCode::SchemaError,
              "line " + std::to_string(line_number) + ": \"samples\" must be an array");
      seg.segment.samples.assign(samples.begin(), samples.end());
      seg.label = require_field(record, "label", line_number).get<double>();
      const std::string kind =
          require_field(record, "label_kind", line_number).get<std::string>();
      if (kind == "class")
        seg.label_kind = LabelKind::ClassIndex;
      else if (kind == "real")
        seg.label_kind = LabelKind::Real;
      else
        raise(ErrorCode::SchemaError, "line " + std::to_string(line_number) +
                                          ": label_kind must be \"class\" or \"real\"");
      seg.unit = require_field(record, "unit", line_number).get<std::string>();
      const std::string dir =
          require_field(record, "direction", line_number).get<std::string>();
      if (dir == "higher")
        seg.direction = Direction::HigherBetter;
      else if (dir == "lower")
        seg.direction = Direction::LowerBetter;
      else
        raise(ErrorCode::SchemaError, "line " + std::to_string(line_number) +
                                          ": direction must be \"higher\" or \"lower\"");
      seg.segment.start_time =
          require_field(record, "start_time", line_number).get<double>();
    } catch (const nlohmann::json::exception& e) {
      raise(ErrorCode::ParseError,
            "line " + std::to_string(line_number) + ": " + e.what());
    }

    const auto expected = static_cast<std::size_t>(
        std::llround(seg.segment.duration_s * seg.segment.fs));
    if (seg.segment.samples.empty() || seg.segment.samples.size() != expected)
      raise(ErrorCode::SchemaError,
            "line " + std::to_string(line_number) + ": samples length " +
                std::to_string(seg.segment.samples.size()) + " != round(duration_s*fs) = " +
                std::to_string(expected));
    if (seg.label_kind == LabelKind::ClassIndex &&
        (seg.label < 0.0 || seg.label != std::floor(seg.label)))
      raise(ErrorCode::SchemaError, "line " + std::to_string(line_number) +
                                        ": class label must be a non-negative integer");

    auto [it, inserted] = task_units.emplace(seg.task_id, seg.unit);
    if (!inserted && it->second != seg.unit)
      raise(ErrorCode::SchemaError, "line " + std::to_string(line_number) + ": task \"" +
                                        seg.task_id + "\" mixes units \"" + it->second +
                                        "\" and \"" + seg.unit + "\"");
    out.push_back(std::move(seg));
  }
  return out;
}

void write_jsonl(const std::string& path, const std::vector<LabeledSegment>& records) {
  std::ofstream outf(path);
  if (!outf) raise(ErrorCode::IoError, "cannot write " + path);
  for (const auto& rec : records) {
    json record;
    record["subject_id"] = rec.segment.subject_id;
    record["task_id"] = rec.task_id;
    record["fs"] = rec.segment.fs;
    record["duration_s"] = rec.segment.duration_s;
    record["samples"] = rec.segment.samples;
    record["label"] = rec.label;
    record["label_kind"] = rec.label_kind == LabelKind::ClassIndex ? "class" : "real";
    record["unit"] = rec.unit;
    record["direction"] = rec.direction == Direction::HigherBetter ? "higher" : "lower";
    record["start_time"] = rec.segment.start_time;
    outf << record.dump() << '\n';
  }
}

std::vector<LabEvent> read_lab_events_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  const std::size_t c_subject = table.column("subject_id");
  const std::size_t c_t = table.column("t");
  const std::size_t c_analyte = table.column("analyte");
  const std::size_t c_value = table.column("value");
  const std::size_t c_unit = table.column("unit");
  std::vector<LabEvent> out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    LabEvent ev;
    ev.subject_id = row[c_subject];
    ev.t = parse_double(row[c_t], path, table.line_numbers[i]);
    ev.analyte = analyte_from_string(row[c_analyte]);
    ev.value = parse_double(row[c_value], path, table.line_numbers[i]);
    ev.unit = row[c_unit];
    if (!std::isfinite(ev.t) || !std::isfinite(ev.value))
      raise(ErrorCode::SchemaError,
            path + " line " + std::to_string(table.line_numbers[i]) + ": non-finite lab event");
    out.push_back(std::move(ev));
  }
  return out;
}

std::vector<VitalStream> read_vitals_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  const std::size_t c_subject = table.column("subject_id");
  const std::size_t c_t0 = table.column("t0");
  const std::size_t c_rate = table.column("rate");
  const std::size_t c_values = table.column("values");
  std::vector<VitalStream> out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    VitalStream vs;
    vs.subject_id = row[c_subject];
    vs.t0 = parse_double(row[c_t0], path, table.line_numbers[i]);
    vs.rate = parse_double(row[c_rate], path, table.line_numbers[i]);
    if (vs.rate <= 0.0)
      raise(ErrorCode::SchemaError,
            path + " line " + std::to_string(table.line_numbers[i]) + ": rate must be > 0");
    std::string cur;
    for (char c : row[c_values] + ";") {
      if (c == ';') {
        if (cur.empty() || cur == "nan") {
          vs.values.push_back(std::nan(""));
        } else {
          vs.values.push_back(parse_double(cur, path, table.line_numbers[i]));
        }
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    out.push_back(std::move(vs));
  }
  return out;
}

std::vector<LabeledSegment> align_vitals(const Signal& ppg, const VitalStream& vitals,
                                         double window_s, const std::string& task_id) {
  if (ppg.subject_id != vitals.subject_id)
    raise(ErrorCode::SubjectMismatch,
          "ppg subject \"" + ppg.subject_id + "\" vs vitals \"" + vitals.subject_id + "\"");

  const auto windows = segment_signal(ppg, window_s);
  const std::size_t expected =
      static_cast<std::size_t>(std::llround(window_s * vitals.rate));
  std::vector<LabeledSegment> out;
  for (const Segment& win : windows) {
    std::vector<double> inside;
    bool gap = false;
    for (std::size_t i = 0; i < vitals.values.size(); ++i) {
      const double t = vitals.t0 + static_cast<double>(i) / vitals.rate;
      if (t < win.start_time || t >= win.end_time()) continue;
      if (std::isnan(vitals.values[i])) {
        gap = true;
        break;
      }
      inside.push_back(vitals.values[i]);
    }
    if (gap || inside.size() != expected || inside.empty()) continue;

    LabeledSegment rec;
    rec.segment = win;
    rec.task_id = task_id;
    rec.label_kind = LabelKind::Real;
    rec.label = vec_median(inside);
    rec.unit = vitals.unit;
    rec.direction = Direction::LowerBetter;
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<LabeledSegment> align_labs(const Signal& ppg, const std::vector<LabEvent>& labs,
                                       double lookback_s, double window_s) {
  for (const auto& lab : labs)
    if (lab.subject_id != ppg.subject_id)
      raise(ErrorCode::SubjectMismatch,
            "ppg subject \"" + ppg.subject_id + "\" vs lab \"" + lab.subject_id + "\"");

  const auto windows = segment_signal(ppg, window_s);
  std::vector<LabeledSegment> out;
  for (const auto& lab : labs) {
    for (const Segment& win : windows) {
      const double end = win.end_time();
      if (end < lab.t - lookback_s || end > lab.t) continue;
      LabeledSegment rec;
      rec.segment = win;
      rec.task_id = analyte_name(lab.analyte);
      rec.label_kind = LabelKind::Real;
      rec.label = lab.value;
      rec.unit = lab.unit;
      rec.direction = Direction::LowerBetter;
      out.push_back(std::move(rec));
    }
  }
  return out;
}

SplitPlan loo_folds(const std::vector<LabeledSegment>& records, double val_ratio,
                    std::uint64_t seed) {
  const auto subjects = distinct_subjects(records);
  if (subjects.size() < 2)
    raise(ErrorCode::TooFewSubjects,
          "leave-one-out needs >= 2 subjects, found " + std::to_string(subjects.size()));
  if (val_ratio < 0.0 || val_ratio >= 1.0)
    raise(ErrorCode::InvalidSpec, "val_ratio must be in [0, 1)");

  SplitPlan plan;
  plan.seed = seed;
  plan.protocol = SplitProtocol::LeaveOneOut;
  for (std::size_t s = 0; s < subjects.size(); ++s) {
    Fold fold;
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (records[i].segment.subject_id == subjects[s])
        fold.test.push_back(i);
      else
        rest.push_back(i);
    }
    Rng rng(seed + s);
    rng.shuffle(rest);
    const std::size_t n_val =
        static_cast<std::size_t>(val_ratio * static_cast<double>(rest.size()));
    fold.val.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(n_val));
    fold.train.assign(rest.begin() + static_cast<std::ptrdiff_t>(n_val), rest.end());
    fold.train = sorted(std::move(fold.train));
    fold.val = sorted(std::move(fold.val));
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

SplitPlan ratio_split(const std::vector<LabeledSegment>& records, std::uint64_t seed,
                      int train_parts, int val_parts, int test_parts) {
  auto subjects = distinct_subjects(records);
  const std::size_t min_subjects =
      static_cast<std::size_t>(train_parts + val_parts + test_parts);
  if (subjects.size() < min_subjects)
    raise(ErrorCode::TooFewSubjects, "ratio split needs >= " + std::to_string(min_subjects) +
                                         " subjects, found " + std::to_string(subjects.size()));

  Rng rng(seed);
  rng.shuffle(subjects);
  std::size_t n_val = 0, n_test = 0;
  partition_counts(subjects.size(), train_parts, val_parts, test_parts, n_val, n_test);

  std::map<std::string, int> assignment;  // 0 train, 1 val, 2 test
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    int part = 0;
    if (i < n_val)
      part = 1;
    else if (i < n_val + n_test)
      part = 2;
    assignment[subjects[i]] = part;
  }

  SplitPlan plan;
  plan.seed = seed;
  plan.protocol = SplitProtocol::Ratio;
  Fold fold;
  for (std::size_t i = 0; i < records.size(); ++i) {
    switch (assignment[records[i].segment.subject_id]) {
      case 1: fold.val.push_back(i); break;
      case 2: fold.test.push_back(i); break;
      default: fold.train.push_back(i); break;
    }
  }
  plan.folds.push_back(std::move(fold));
  return plan;
}

SplitPlan record_split(const std::vector<LabeledSegment>& records, std::uint64_t seed,
                       int train_parts, int val_parts, int test_parts) {
  const std::size_t min_records =
      static_cast<std::size_t>(train_parts + val_parts + test_parts);
  if (records.size() < min_records)
    raise(ErrorCode::TooFewSubjects, "record split needs >= " + std::to_string(min_records) +
                                         " records, found " + std::to_string(records.size()));
  std::vector<std::size_t> indices(records.size());
  for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
  Rng rng(seed);
  rng.shuffle(indices);

  std::size_t n_val = 0, n_test = 0;
  partition_counts(indices.size(), train_parts, val_parts, test_parts, n_val, n_test);

  SplitPlan plan;
  plan.seed = seed;
  plan.protocol = SplitProtocol::RecordLevel;
  Fold fold;
  fold.val.assign(indices.begin(), indices.begin() + static_cast<std::ptrdiff_t>(n_val));
  fold.test.assign(indices.begin() + static_cast<std::ptrdiff_t>(n_val),
                   indices.begin() + static_cast<std::ptrdiff_t>(n_val + n_test));
  fold.train.assign(indices.begin() + static_cast<std::ptrdiff_t>(n_val + n_test),
                    indices.end());
  fold.train = sorted(std::move(fold.train));
  fold.val = sorted(std::move(fold.val));
  fold.test = sorted(std::move(fold.test));
  plan.folds.push_back(std::move(fold));
  return plan;
}

}  // namespace ppgbench
