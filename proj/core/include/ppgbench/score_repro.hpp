#pragma once

#include <map>
#include <string>
#include <vector>

#include "ppgbench/eval.hpp"

namespace ppgbench {

// Fixture tables transcribe the published per-cell results; this engine
// recomputes every per-model and per-group win score and compares it with
// the published score rows.
//
// Published scores are printed at varying precision (some tables round to
// integers, others keep two decimals), so a comparison matches when either
// the raw difference is within 0.01 or the recomputed score printed at the
// published precision equals the published value.

struct FixtureTable {
  std::string id;       // e.g. "table3"
  std::string label;
  std::string total_with;  // id of the table this one forms p1+p2 totals with
  std::vector<TaskCell> cells;
  // row -> entry -> published text; rows: score, score_comb, score_total,
  // score_total_comb
  std::map<std::string, std::map<std::string, std::string>> published;
};

struct ScoreComparison {
  std::string table_id;
  std::string row;      // score | score_comb | score_total | score_total_comb
  std::string entry;    // model or group id
  double computed = 0.0;
  std::string published;
  bool matched = false;
};

struct ScoreReport {
  std::vector<ScoreComparison> comparisons;
  std::vector<std::string> notes;  // published-table arithmetic inconsistencies
  std::size_t matched_rows = 0;    // a row matches when all its entries match
  std::size_t total_rows = 0;

  bool all_matched() const { return matched_rows == total_rows; }
};

// Loads manifest.json plus the table fixtures from fixture_dir.
std::vector<FixtureTable> load_fixture_tables(
    const std::string& fixture_dir,
    std::map<std::string, std::vector<std::string>>& groups,
    std::vector<std::string>& model_order);

ScoreReport reproduce_scores(const std::string& fixture_dir);

std::string score_report_text(const ScoreReport& report);
std::string score_report_json(const ScoreReport& report);

// true when |computed - published| <= 0.01 or when computed printed at the
// published precision equals the published text.
bool score_matches(double computed, const std::string& published);

}  // namespace ppgbench
