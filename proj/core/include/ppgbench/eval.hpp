#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ppgbench/signal.hpp"

namespace ppgbench {

enum class Metric { F1, Accuracy, Mae };
enum class Strategy { Head, Full };
enum class DomainKind { In, Out };

Metric metric_from_string(const std::string& name);
const char* metric_name(Metric metric);

// Long-form result row; the input grain of every comparison dimension.
struct ResultRecord {
  std::string task_id;
  std::string dataset_id;
  std::string model_id;       // model family, e.g. "moment"
  double model_size = 0.0;    // parameter count
  Strategy strategy = Strategy::Full;
  Metric metric = Metric::Mae;
  double value = 0.0;
  Direction direction = Direction::LowerBetter;
  DomainKind domain = DomainKind::In;
  std::optional<double> data_hours;
};

// CSV columns: task_id,dataset_id,model_id,model_size,strategy,metric,value,
// direction,domain,data_hours
std::vector<ResultRecord> read_results_csv(const std::string& path);
void write_results_csv(const std::string& path, const std::vector<ResultRecord>& records);

struct ClassificationMetrics {
  double precision = 0.0;  // binary only; macro handled through f1
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
};

// Binary: positive class 1, zero-denominator precision/recall are 0.
// Multiclass: accuracy plus macro-averaged F1 (precision/recall reported as
// macro averages as well).
ClassificationMetrics classification_metrics(const std::vector<int>& preds,
                                             const std::vector<int>& labels);

double mae(const std::vector<double>& preds, const std::vector<double>& targets);

// --- win score ---

// One task cell: each competitor's value on a task, plus the direction.
struct TaskCell {
  std::string task_key;
  Direction direction = Direction::LowerBetter;
  std::map<std::string, double> values;  // competitor id -> value
};

struct WinScores {
  std::map<std::string, double> per_model;
  std::map<std::string, double> per_group;
  double task_count = 0.0;
};

// The k competitors tied for best (exact equality, i.e. at whatever
// precision the values carry) each receive 1/k. Group scores sum their
// members. Every competitor must have a value in every cell.
WinScores win_score(const std::vector<TaskCell>& cells,
                    const std::vector<std::string>& models,
                    const std::map<std::string, std::vector<std::string>>& groups);

// --- scalar dimension formulas ---

struct PerformanceFilter {
  std::optional<Strategy> strategy;
  std::optional<DomainKind> domain;
};

// Mean metric value after filtering. All selected records must share one
// metric family (f1/accuracy vs mae).
double aggregate_performance(const std::vector<ResultRecord>& records,
                             const PerformanceFilter& filter);

// Mean over tasks of (P_full - P_head) / P_head with P = value for
// higher-better metrics and 1/value for lower-better ones.
double tuning_gain(const std::vector<double>& head_values,
                   const std::vector<double>& full_values, Direction direction);

// Population standard deviation over mean.
double nsd(const std::vector<double>& values);

struct ScalingFit {
  double slope = 0.0;      // per natural-log parameter count
  double intercept = 0.0;
};

ScalingFit scalability_slope(const std::vector<double>& sizes,
                             const std::vector<double>& performances);

double pearson(const std::vector<double>& x, const std::vector<double>& y);

// (m - g) / m * 100.
double relative_improvement(double m_value, double g_value);

// Weight for a record in group g is N / (K * count(g)); per-group weight
// sums come out equal.
std::vector<double> inverse_frequency_weights(const std::vector<std::string>& group_labels);

// Min-max normalizes each dimension column to [0,1] after negating
// lower-better columns; the best model maps to 1 and the worst to 0.
// table is models x dimensions. A constant column maps to all 0.5.
std::vector<std::vector<double>> radar_normalize(
    const std::vector<std::vector<double>>& table,
    const std::vector<Direction>& directions);

// --- seven-dimension report ---

// Dimensions that need a particular slice of the table are optional: they
// are absent when the table has no head-tuning rows, no head/full pairs,
// no out-of-domain rows, or a single model size.
struct DimensionValues {
  double win_score = 0.0;
  double avg_performance = 0.0;
  std::optional<double> feature_quality;
  std::optional<double> tuning_gain;
  double variance_nsd = 0.0;
  std::optional<double> transferability;
  std::optional<double> scalability_slope;
};

struct DimensionReport {
  Metric family_metric = Metric::Mae;          // representative of the family
  bool higher_is_better = false;               // for the value-based dimensions
  std::vector<std::string> model_ids;
  std::map<std::string, DimensionValues> raw;
  std::map<std::string, DimensionValues> radar;  // normalized to [0,1]
};

// Computes all seven dimensions per model_id over a single-metric-family
// table, then min-max normalizes each dimension (lower-better ones are
// negated first) so the best model maps to 1 and the worst to 0.
DimensionReport compute_dimensions(const std::vector<ResultRecord>& records);

std::string dimension_report_json(const DimensionReport& report);
std::string dimension_report_markdown(const DimensionReport& report);

// Domain x data-size regime summary: per regime, the count of compared
// cells, the mean relative improvement of the challenger over the reference
// in percent, and the Pearson correlation between hours and improvement.
struct RegimeSummary {
  std::string domain;       // in | out
  std::string size_regime;  // <=10h | 10-100h | >=100h
  std::size_t count = 0;
  double mean_improvement = 0.0;
  std::optional<double> hours_correlation;  // absent below 2 points or constant
};

// Cells are (task, dataset, strategy) pairs present for both models, with
// values averaged over sizes; improvement is (ref - challenger)/ref * 100
// for lower-better metrics and (challenger - ref)/ref * 100 for
// higher-better ones, so positive always favors the challenger. Cells
// without data_hours are skipped.
std::vector<RegimeSummary> domain_regime_summary(
    const std::vector<ResultRecord>& records, const std::string& reference,
    const std::string& challenger);

}  // namespace ppgbench
