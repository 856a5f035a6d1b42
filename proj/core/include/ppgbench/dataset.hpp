#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ppgbench/signal.hpp"

namespace ppgbench {

enum class Analyte {
  Potassium, Sodium, Glucose, A1c, Troponin, Lactate,
  Hdl, Ldl, Lvef, LvMass, Pr, Qrs, Qt, Sbp, Dbp, Generic,
};

Analyte analyte_from_string(const std::string& name);
const char* analyte_name(Analyte analyte);

struct LabEvent {
  std::string subject_id;
  double t = 0.0;  // seconds
  Analyte analyte = Analyte::Generic;
  double value = 0.0;
  std::string unit;
};

struct VitalStream {
  std::string subject_id;
  double t0 = 0.0;
  double rate = 1.0;  // Hz
  std::vector<double> values;  // NaN marks a flagged gap
  std::string unit;
};

enum class SplitProtocol { LeaveOneOut, Ratio, RecordLevel };

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

struct SplitPlan {
  std::vector<Fold> folds;
  std::uint64_t seed = 0;
  SplitProtocol protocol = SplitProtocol::Ratio;
};

// --- file contracts ---

// JSONL segment record, one object per line:
// {"subject_id": str, "task_id": str, "fs": number, "duration_s": number,
//  "samples": [number...], "label": number, "label_kind": "class"|"real",
//  "unit": str, "direction": "higher"|"lower", "start_time": number}
std::vector<LabeledSegment> ingest_jsonl(const std::string& path);
void write_jsonl(const std::string& path, const std::vector<LabeledSegment>& records);

// Lab events CSV: subject_id,t,analyte,value,unit
std::vector<LabEvent> read_lab_events_csv(const std::string& path);

// Vitals CSV: subject_id,t0,rate,values (semicolon-joined; empty or "nan"
// entries mark gaps)
std::vector<VitalStream> read_vitals_csv(const std::string& path);

// --- label alignment ---

// Cuts the PPG into consecutive non-overlapping windows and labels each with
// the median of the vitals samples it covers. Windows are emitted only when
// both streams fully cover them and the vitals have no flagged gap inside.
std::vector<LabeledSegment> align_vitals(const Signal& ppg, const VitalStream& vitals,
                                         double window_s, const std::string& task_id);

// Pairs each window ending at time e with every lab event at time t
// satisfying t - lookback_s <= e <= t. The window end never exceeds the lab
// time, so every emitted pair is causal. A window inside two labs' windows
// is paired once per lab.
std::vector<LabeledSegment> align_labs(const Signal& ppg, const std::vector<LabEvent>& labs,
                                       double lookback_s = 3600.0, double window_s = 30.0);

// --- split protocols ---

// One fold per subject; that subject's records are the test set and the
// remaining records are split train:val at record level (subjects may appear
// in both). val gets floor(val_ratio * n); the remainder goes to train.
SplitPlan loo_folds(const std::vector<LabeledSegment>& records, double val_ratio,
                    std::uint64_t seed);

// Subjects shuffled by seed and partitioned train:val:test (default 4:1:1);
// every record follows its subject. The smaller partitions take
// floor(n / total_parts * part), the remainder goes to train.
SplitPlan ratio_split(const std::vector<LabeledSegment>& records, std::uint64_t seed,
                      int train_parts = 4, int val_parts = 1, int test_parts = 1);

// Record-level variant used when every participant must appear in training
// (biometric identification): records shuffled and partitioned directly,
// ignoring subject boundaries.
SplitPlan record_split(const std::vector<LabeledSegment>& records, std::uint64_t seed,
                       int train_parts = 4, int val_parts = 1, int test_parts = 1);

}  // namespace ppgbench
