#include "ppgbench/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ppgbench/csv.hpp"
#include "ppgbench/numeric.hpp"

namespace ppgbench {

namespace {

bool is_classification(Metric m) { return m == Metric::F1 || m == Metric::Accuracy; }

bool better(double a, double b, Direction d) {
  return d == Direction::HigherBetter ? a > b : a < b;
}

// Shortest decimal text that round-trips to the exact double.
std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  for (int prec = 1; prec <= 17; ++prec) {
    std::ostringstream os;
    os.precision(prec);
    os << v;
    if (std::stod(os.str()) == v) return os.str();
  }
  return std::to_string(v);
}

}  // namespace

Metric metric_from_string(const std::string& name) {
  if (name == "f1") return Metric::F1;
  if (name == "accuracy") return Metric::Accuracy;
  if (name == "mae") return Metric::Mae;
  raise(ErrorCode::ParseError, "unknown metric '" + name + "'");
}

const char* metric_name(Metric metric) {
  switch (metric) {
    case Metric::F1: return "f1";
    case Metric::Accuracy: return "accuracy";
    case Metric::Mae: return "mae";
  }
  return "mae";
}

std::vector<ResultRecord> read_results_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  const std::size_t c_task = table.column("task_id");
  const std::size_t c_dataset = table.column("dataset_id");
  const std::size_t c_model = table.column("model_id");
  const std::size_t c_size = table.column("model_size");
  const std::size_t c_strategy = table.column("strategy");
  const std::size_t c_metric = table.column("metric");
  const std::size_t c_value = table.column("value");
  const std::size_t c_direction = table.column("direction");
  const std::size_t c_domain = table.column("domain");
  const std::size_t c_hours = table.column("data_hours");

  std::vector<ResultRecord> out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::size_t line = table.line_numbers[i];
    ResultRecord rec;
    rec.task_id = row[c_task];
    rec.dataset_id = row[c_dataset];
    rec.model_id = row[c_model];
    rec.model_size = parse_double(row[c_size], path, line);
    if (rec.model_size <= 0.0)
      raise(ErrorCode::ParseError,
            path + " line " + std::to_string(line) + ": model_size must be > 0");
    if (row[c_strategy] == "head")
      rec.strategy = Strategy::Head;
    else if (row[c_strategy] == "full")
      rec.strategy = Strategy::Full;
    else
      raise(ErrorCode::ParseError, path + " line " + std::to_string(line) +
                                       ": strategy must be head|full, got '" +
                                       row[c_strategy] + "'");
    rec.metric = metric_from_string(row[c_metric]);
    rec.value = parse_double(row[c_value], path, line);
    if (!std::isfinite(rec.value))
      raise(ErrorCode::ParseError,
            path + " line " + std::to_string(line) + ": value must be finite");
    if (row[c_direction] == "higher")
      rec.direction = Direction::HigherBetter;
    else if (row[c_direction] == "lower")
      rec.direction = Direction::LowerBetter;
    else
      raise(ErrorCode::ParseError,
            path + " line " + std::to_string(line) + ": direction must be higher|lower");
    if (row[c_domain] == "in")
      rec.domain = DomainKind::In;
    else if (row[c_domain] == "out")
      rec.domain = DomainKind::Out;
    else
      raise(ErrorCode::ParseError,
            path + " line " + std::to_string(line) + ": domain must be in|out");
    if (!row[c_hours].empty())
      rec.data_hours = parse_double(row[c_hours], path, line);
    out.push_back(std::move(rec));
  }
  // direction must be consistent per task
  std::map<std::string, Direction> directions;
  for (const auto& rec : out) {
    auto [it, inserted] = directions.emplace(rec.task_id, rec.direction);
    if (!inserted && it->second != rec.direction)
      raise(ErrorCode::ParseError,
            path + ": task '" + rec.task_id + "' mixes higher/lower directions");
  }
  return out;
}

void write_results_csv(const std::string& path, const std::vector<ResultRecord>& records) {
  std::ofstream out(path);
  if (!out) raise(ErrorCode::IoError, "cannot write " + path);
  out << "task_id,dataset_id,model_id,model_size,strategy,metric,value,direction,"
         "domain,data_hours\n";
  for (const auto& rec : records) {
    out << rec.task_id << ',' << rec.dataset_id << ',' << rec.model_id << ','
        << fmt_double(rec.model_size) << ','
        << (rec.strategy == Strategy::Head ? "head" : "full") << ','
        << metric_name(rec.metric) << ',' << fmt_double(rec.value) << ','
        << (rec.direction == Direction::HigherBetter ? "higher" : "lower") << ','
        << (rec.domain == DomainKind::In ? "in" : "out") << ','
        << (rec.data_hours ? fmt_double(*rec.data_hours) : "") << '\n';
  }
}

ClassificationMetrics classification_metrics(const std::vector<int>& preds,
                                             const std::vector<int>& labels) {
  if (preds.size() != labels.size())
    raise(ErrorCode::LengthMismatch, "classification_metrics: preds vs labels");
  if (preds.empty()) raise(ErrorCode::Empty, "classification_metrics: empty input");

  std::set<int> classes(labels.begin(), labels.end());
  classes.insert(preds.begin(), preds.end());
  const std::size_t n = preds.size();

  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (preds[i] == labels[i]) ++correct;

  ClassificationMetrics out;
  out.accuracy = static_cast<double>(correct) / static_cast<double>(n);

  const bool binary = *classes.rbegin() <= 1 && *classes.begin() >= 0;
  std::vector<int> targets =
      binary ? std::vector<int>{1} : std::vector<int>(classes.begin(), classes.end());

  double prec_sum = 0.0, rec_sum = 0.0, f1_sum = 0.0;
  for (int cls : targets) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool p = preds[i] == cls;
      const bool a = labels[i] == cls;
      if (p && a) ++tp;
      if (p && !a) ++fp;
      if (!p && a) ++fn;
    }
    const double precision = (tp + fp) ? static_cast<double>(tp) / (tp + fp) : 0.0;
    const double recall = (tp + fn) ? static_cast<double>(tp) / (tp + fn) : 0.0;
    const double f1 =
        (precision + recall) > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    prec_sum += precision;
    rec_sum += recall;
    f1_sum += f1;
  }
  const double k = static_cast<double>(targets.size());
  out.precision = prec_sum / k;
  out.recall = rec_sum / k;
  out.f1 = f1_sum / k;
  return out;
}

double mae(const std::vector<double>& preds, const std::vector<double>& targets) {
  if (preds.size() != targets.size()) raise(ErrorCode::LengthMismatch, "mae");
  if (preds.empty()) raise(ErrorCode::Empty, "mae: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) acc += std::abs(preds[i] - targets[i]);
  return acc / static_cast<double>(preds.size());
}

WinScores win_score(const std::vector<TaskCell>& cells,
                    const std::vector<std::string>& models,
                    const std::map<std::string, std::vector<std::string>>& groups) {
  WinScores out;
  out.task_count = static_cast<double>(cells.size());
  for (const auto& model : models) out.per_model[model] = 0.0;

  for (const auto& cell : cells) {
    double best = 0.0;
    bool first = true;
    for (const auto& model : models) {
      auto it = cell.values.find(model);
      if (it == cell.values.end())
        raise(ErrorCode::MissingCell,
              "task '" + cell.task_key + "' has no value for model '" + model + "'");
      if (first || better(it->second, best, cell.direction)) {
        best = it->second;
        first = false;
      }
    }
    std::vector<std::string> winners;
    for (const auto& model : models)
      if (cell.values.at(model) == best) winners.push_back(model);
    const double share = 1.0 / static_cast<double>(winners.size());
    for (const auto& model : winners) out.per_model[model] += share;
  }

  for (const auto& [group, members] : groups) {
    double acc = 0.0;
    for (const auto& member : members) {
      auto it = out.per_model.find(member);
      if (it == out.per_model.end())
        raise(ErrorCode::MissingCell, "group '" + group + "' references unknown model '" +
                                          member + "'");
      acc += it->second;
    }
    out.per_group[group] = acc;
  }
  return out;
}

double aggregate_performance(const std::vector<ResultRecord>& records,
                             const PerformanceFilter& filter) {
  std::vector<double> selected;
  bool any_class = false, any_reg = false;
  for (const auto& rec : records) {
    if (filter.strategy && rec.strategy != *filter.strategy) continue;
    if (filter.domain && rec.domain != *filter.domain) continue;
    (is_classification(rec.metric) ? any_class : any_reg) = true;
    selected.push_back(rec.value);
  }
  if (selected.empty()) raise(ErrorCode::EmptySelection, "aggregate_performance");
  if (any_class && any_reg)
    raise(ErrorCode::MixedMetricFamilies,
          "aggregate_performance mixes classification and regression metrics");
  return vec_mean(selected);
}

double tuning_gain(const std::vector<double>& head_values,
                   const std::vector<double>& full_values, Direction direction) {
  if (head_values.size() != full_values.size())
    raise(ErrorCode::LengthMismatch, "tuning_gain: head vs full");
  if (head_values.empty()) raise(ErrorCode::Empty, "tuning_gain: no tasks");
  double acc = 0.0;
  for (std::size_t i = 0; i < head_values.size(); ++i) {
    if (head_values[i] == 0.0)
      raise(ErrorCode::ZeroHeadPerformance, "task " + std::to_string(i));
    const double ph = direction == Direction::HigherBetter ? head_values[i]
                                                           : 1.0 / head_values[i];
    const double pf = direction == Direction::HigherBetter ? full_values[i]
                                                           : 1.0 / full_values[i];
    if (ph == 0.0) raise(ErrorCode::ZeroHeadPerformance, "task " + std::to_string(i));
    acc += (pf - ph) / ph;
  }
  return acc / static_cast<double>(head_values.size());
}

double nsd(const std::vector<double>& values) {
  if (values.size() < 2) raise(ErrorCode::TooFew, "nsd needs >= 2 values");
  const double mu = vec_mean(values);
  if (std::abs(mu) < 1e-12) raise(ErrorCode::ZeroMean, "nsd undefined for zero mean");
  return vec_stddev_population(values) / mu;
}

ScalingFit scalability_slope(const std::vector<double>& sizes,
                             const std::vector<double>& performances) {
  if (sizes.size() != performances.size())
    raise(ErrorCode::LengthMismatch, "scalability_slope");
  if (sizes.size() < 2) raise(ErrorCode::InsufficientPoints, "need >= 2 sizes");
  std::vector<double> logs(sizes.size());
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] <= 0.0)
      raise(ErrorCode::DegenerateSizes, "model size must be > 0 for the log fit");
    logs[i] = std::log(sizes[i]);
  }
  const double mx = vec_mean(logs);
  const double my = vec_mean(performances);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    sxx += (logs[i] - mx) * (logs[i] - mx);
    sxy += (logs[i] - mx) * (performances[i] - my);
  }
  if (sxx == 0.0) raise(ErrorCode::DegenerateSizes, "all sizes equal");
  ScalingFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) raise(ErrorCode::LengthMismatch, "pearson");
  if (x.size() < 2) raise(ErrorCode::TooFew, "pearson needs >= 2 points");
  const double mx = vec_mean(x);
  const double my = vec_mean(y);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0)
    raise(ErrorCode::ConstantInput, "pearson undefined for constant input");
  return sxy / std::sqrt(sxx * syy);
}

double relative_improvement(double m_value, double g_value) {
  if (m_value == 0.0) raise(ErrorCode::ZeroReference, "relative_improvement");
  return (m_value - g_value) / m_value * 100.0;
}

std::vector<double> inverse_frequency_weights(const std::vector<std::string>& group_labels) {
  if (group_labels.empty()) raise(ErrorCode::Empty, "inverse_frequency_weights");
  std::map<std::string, double> counts;
  for (const auto& label : group_labels) counts[label] += 1.0;
  const double n = static_cast<double>(group_labels.size());
  const double k = static_cast<double>(counts.size());
  std::vector<double> weights;
  weights.reserve(group_labels.size());
  for (const auto& label : group_labels) weights.push_back(n / (k * counts[label]));
  return weights;
}

namespace {

// Normalizes one dimension column over the models that have a value.
void normalize_column(std::vector<std::pair<std::string, double>>& column, bool higher,
                      std::map<std::string, double>& out) {
  if (column.empty()) return;
  double lo = column[0].second, hi = column[0].second;
  for (const auto& [id, v] : column) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (const auto& [id, v] : column) {
    double coord = 0.5;
    if (hi > lo) {
      coord = (v - lo) / (hi - lo);
      if (!higher) coord = 1.0 - coord;
    }
    out[id] = coord;
  }
}

}  // namespace

std::vector<std::vector<double>> radar_normalize(
    const std::vector<std::vector<double>>& table,
    const std::vector<Direction>& directions) {
  if (table.size() < 2) raise(ErrorCode::SingleModel, "radar needs >= 2 models");
  const std::size_t dims = directions.size();
  for (const auto& row : table)
    if (row.size() != dims) raise(ErrorCode::ShapeMismatch, "radar table is ragged");

  std::vector<std::vector<double>> out(table.size(), std::vector<double>(dims, 0.5));
  for (std::size_t d = 0; d < dims; ++d) {
    double lo = table[0][d], hi = table[0][d];
    for (const auto& row : table) {
      lo = std::min(lo, row[d]);
      hi = std::max(hi, row[d]);
    }
    if (hi == lo) continue;
    for (std::size_t m = 0; m < table.size(); ++m) {
      double coord = (table[m][d] - lo) / (hi - lo);
      if (directions[d] == Direction::LowerBetter) coord = 1.0 - coord;
      out[m][d] = coord;
    }
  }
  return out;
}

DimensionReport compute_dimensions(const std::vector<ResultRecord>& records) {
  if (records.empty()) raise(ErrorCode::EmptySelection, "compute_dimensions: no records");

  bool any_class = false, any_reg = false;
  for (const auto& rec : records)
    (is_classification(rec.metric) ? any_class : any_reg) = true;
  if (any_class && any_reg)
    raise(ErrorCode::MixedMetricFamilies,
          "compute_dimensions requires a single metric family; "
          "split classification and regression tables first");

  DimensionReport report;
  report.higher_is_better = any_class;
  report.family_metric = any_class ? records.front().metric : Metric::Mae;

  std::set<std::string> model_set;
  std::set<std::string> competitor_set;  // model_id@size
  for (const auto& rec : records) {
    model_set.insert(rec.model_id);
    competitor_set.insert(rec.model_id + "@" + fmt_double(rec.model_size));
  }
  report.model_ids.assign(model_set.begin(), model_set.end());

  // Win score over (task, dataset, strategy) cells, competitors are
  // (model, size) pairs; family score sums its sizes' scores.
  std::map<std::string, TaskCell> cells;
  for (const auto& rec : records) {
    const std::string key = rec.task_id + "|" + rec.dataset_id + "|" +
                            (rec.strategy == Strategy::Head ? "head" : "full");
    TaskCell& cell = cells[key];
    cell.task_key = key;
    cell.direction = rec.direction;
    cell.values[rec.model_id + "@" + fmt_double(rec.model_size)] = rec.value;
  }
  std::vector<TaskCell> cell_list;
  for (auto& [key, cell] : cells) cell_list.push_back(std::move(cell));
  std::map<std::string, std::vector<std::string>> families;
  for (const auto& competitor : competitor_set)
    families[competitor.substr(0, competitor.find('@'))].push_back(competitor);
  const WinScores wins =
      win_score(cell_list, {competitor_set.begin(), competitor_set.end()}, families);

  for (const auto& model : report.model_ids) {
    DimensionValues dims;
    dims.win_score = wins.per_group.at(model);

    std::vector<double> all_values, head_values, out_values;
    std::map<double, std::vector<double>> per_size;
    // (task|dataset|size) -> head/full values for the tuning-gain pairing
    struct Pair { double head = 0, full = 0; bool has_head = false, has_full = false;
                  Direction dir = Direction::LowerBetter; };
    std::map<std::string, Pair> pairs;
    for (const auto& rec : records) {
      if (rec.model_id != model) continue;
      all_values.push_back(rec.value);
      if (rec.strategy == Strategy::Head) head_values.push_back(rec.value);
      if (rec.domain == DomainKind::Out) out_values.push_back(rec.value);
      per_size[rec.model_size].push_back(rec.value);
      Pair& pair =
          pairs[rec.task_id + "|" + rec.dataset_id + "|" + fmt_double(rec.model_size)];
      pair.dir = rec.direction;
      if (rec.strategy == Strategy::Head) {
        pair.head = rec.value;
        pair.has_head = true;
      } else {
        pair.full = rec.value;
        pair.has_full = true;
      }
    }
    if (all_values.empty())
      raise(ErrorCode::EmptySelection, "model '" + model + "' has no records");

    dims.avg_performance = vec_mean(all_values);
    if (!head_values.empty()) dims.feature_quality = vec_mean(head_values);
    if (!out_values.empty()) dims.transferability = vec_mean(out_values);
    dims.variance_nsd = all_values.size() >= 2 ? nsd(all_values) : 0.0;

    std::vector<double> gains;
    for (const auto& [key, pair] : pairs) {
      if (!pair.has_head || !pair.has_full || pair.head == 0.0) continue;
      const bool higher = pair.dir == Direction::HigherBetter;
      const double ph = higher ? pair.head : 1.0 / pair.head;
      const double pf = higher ? pair.full : 1.0 / pair.full;
      gains.push_back((pf - ph) / ph);
    }
    if (!gains.empty()) dims.tuning_gain = vec_mean(gains);

    if (per_size.size() >= 2) {
      std::vector<double> sizes, performances;
      for (const auto& [size, values] : per_size) {
        sizes.push_back(size);
        performances.push_back(vec_mean(values));
      }
      dims.scalability_slope = scalability_slope(sizes, performances).slope;
    }

    report.raw[model] = dims;
  }

  // Radar coordinates. Value-based dimensions follow the family direction;
  // win score and tuning gain are always higher-better, variance lower.
  if (report.model_ids.size() >= 2) {
    const bool family_higher = report.higher_is_better;
    auto column = [&](auto getter, bool higher) {
      std::vector<std::pair<std::string, double>> col;
      for (const auto& model : report.model_ids) {
        const auto value = getter(report.raw.at(model));
        if (value.has_value()) col.emplace_back(model, *value);
      }
      std::map<std::string, double> coords;
      normalize_column(col, higher, coords);
      return coords;
    };
    auto some = [](double v) { return std::optional<double>(v); };

    const auto win_c = column([&](const DimensionValues& d) { return some(d.win_score); }, true);
    const auto avg_c =
        column([&](const DimensionValues& d) { return some(d.avg_performance); }, family_higher);
    const auto fq_c =
        column([&](const DimensionValues& d) { return d.feature_quality; }, family_higher);
    const auto tg_c = column([&](const DimensionValues& d) { return d.tuning_gain; }, true);
    const auto var_c =
        column([&](const DimensionValues& d) { return some(d.variance_nsd); }, false);
    const auto tr_c =
        column([&](const DimensionValues& d) { return d.transferability; }, family_higher);
    const auto sc_c =
        column([&](const DimensionValues& d) { return d.scalability_slope; }, family_higher);

    for (const auto& model : report.model_ids) {
      DimensionValues radar;
      auto fetch = [&](const std::map<std::string, double>& coords) {
        auto it = coords.find(model);
        return it == coords.end() ? std::optional<double>() : std::optional<double>(it->second);
      };
      radar.win_score = fetch(win_c).value_or(0.5);
      radar.avg_performance = fetch(avg_c).value_or(0.5);
      radar.feature_quality = fetch(fq_c);
      radar.tuning_gain = fetch(tg_c);
      radar.variance_nsd = fetch(var_c).value_or(0.5);
      radar.transferability = fetch(tr_c);
      radar.scalability_slope = fetch(sc_c);
      report.radar[model] = radar;
    }
  }

  return report;
}

std::vector<RegimeSummary> domain_regime_summary(const std::vector<ResultRecord>& records,
                                                 const std::string& reference,
                                                 const std::string& challenger) {
  struct Cell {
    std::vector<double> ref, cha;
    Direction direction = Direction::LowerBetter;
    DomainKind domain = DomainKind::In;
    std::optional<double> hours;
  };
  std::map<std::string, Cell> cells;
  for (const auto& rec : records) {
    if (rec.model_id != reference && rec.model_id != challenger) continue;
    const std::string key = rec.task_id + "|" + rec.dataset_id + "|" +
                            (rec.strategy == Strategy::Head ? "head" : "full");
    Cell& cell = cells[key];
    cell.direction = rec.direction;
    cell.domain = rec.domain;
    if (rec.data_hours) cell.hours = rec.data_hours;
    (rec.model_id == reference ? cell.ref : cell.cha).push_back(rec.value);
  }

  struct Bucket {
    std::vector<double> hours, improvements;
  };
  auto regime_of = [](double hours) {
    if (hours <= 10.0) return std::string("<=10h");
    if (hours < 100.0) return std::string("10-100h");
    return std::string(">=100h");
  };
  std::map<std::pair<std::string, std::string>, Bucket> buckets;
  for (const auto& [key, cell] : cells) {
    if (cell.ref.empty() || cell.cha.empty() || !cell.hours) continue;
    const double ref = vec_mean(cell.ref);
    const double cha = vec_mean(cell.cha);
    if (ref == 0.0) continue;
    const double improvement = cell.direction == Direction::LowerBetter
                                   ? relative_improvement(ref, cha)
                                   : -relative_improvement(ref, cha);
    Bucket& bucket = buckets[{cell.domain == DomainKind::In ? "in" : "out",
                              regime_of(*cell.hours)}];
    bucket.hours.push_back(*cell.hours);
    bucket.improvements.push_back(improvement);
  }

  std::vector<RegimeSummary> out;
  for (const auto& [key, bucket] : buckets) {
    RegimeSummary summary;
    summary.domain = key.first;
    summary.size_regime = key.second;
    summary.count = bucket.improvements.size();
    summary.mean_improvement = vec_mean(bucket.improvements);
    if (bucket.hours.size() >= 2) {
      try {
        summary.hours_correlation = pearson(bucket.hours, bucket.improvements);
      } catch (const Error&) {
        // constant hours or improvements inside the regime
      }
    }
    out.push_back(std::move(summary));
  }
  return out;
}

namespace {

nlohmann::json dimensions_to_json(const DimensionValues& d) {
  nlohmann::json j;
  j["win_score"] = d.win_score;
  j["avg_performance"] = d.avg_performance;
  j["feature_quality"] = d.feature_quality ? nlohmann::json(*d.feature_quality)
                                           : nlohmann::json(nullptr);
  j["tuning_gain"] =
      d.tuning_gain ? nlohmann::json(*d.tuning_gain) : nlohmann::json(nullptr);
  j["variance_nsd"] = d.variance_nsd;
  j["transferability"] = d.transferability ? nlohmann::json(*d.transferability)
                                           : nlohmann::json(nullptr);
  j["scalability_slope"] = d.scalability_slope ? nlohmann::json(*d.scalability_slope)
                                               : nlohmann::json(nullptr);
  return j;
}

std::string fmt_cell(const std::optional<double>& v) {
  return v ? fmt_double(*v) : std::string("-");
}

}  // namespace

std::string dimension_report_json(const DimensionReport& report) {
  nlohmann::json j;
  j["family"] = report.higher_is_better ? "classification" : "regression";
  j["metric"] = metric_name(report.family_metric);
  for (const auto& model : report.model_ids) {
    j["models"][model]["raw"] = dimensions_to_json(report.raw.at(model));
    auto it = report.radar.find(model);
    j["models"][model]["radar"] =
        it != report.radar.end() ? dimensions_to_json(it->second) : nlohmann::json(nullptr);
  }
  return j.dump(2) + "\n";
}

std::string dimension_report_markdown(const DimensionReport& report) {
  std::ostringstream os;
  os << "| model | win score | avg perf | feature quality | tuning gain | variance "
        "(NSD) | transferability | scalability |\n";
  os << "|---|---|---|---|---|---|---|---|\n";
  for (const auto& model : report.model_ids) {
    const DimensionValues& d = report.raw.at(model);
    os << "| " << model << " | " << fmt_double(d.win_score) << " | "
       << fmt_double(d.avg_performance) << " | " << fmt_cell(d.feature_quality) << " | "
       << fmt_cell(d.tuning_gain) << " | " << fmt_double(d.variance_nsd) << " | "
       << fmt_cell(d.transferability) << " | " << fmt_cell(d.scalability_slope) << " |\n";
  }
  return os.str();
}

}  // namespace ppgbench
