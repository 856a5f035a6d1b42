#include "ppgbench/score_repro.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ppgbench/csv.hpp"
#include "ppgbench/errors.hpp"

namespace ppgbench {

namespace {

int decimals_of(const std::string& text) {
  const auto dot = text.find('.');
  return dot == std::string::npos ? 0 : static_cast<int>(text.size() - dot - 1);
}

double round_to(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(value * scale) / scale;
}

FixtureTable load_table(const std::string& dir, const nlohmann::json& jt,
                        const std::vector<std::string>& model_order) {
  FixtureTable table;
  table.id = jt.at("id").get<std::string>();
  table.label = jt.at("label").get<std::string>();
  if (jt.contains("total_with")) table.total_with = jt["total_with"].get<std::string>();

  const std::string cells_path = dir + "/" + jt.at("cells").get<std::string>();
  const CsvTable cells = read_csv(cells_path);
  const std::size_t c_task = cells.column("task_id");
  const std::size_t c_dataset = cells.column("dataset_id");
  const std::size_t c_direction = cells.column("direction");
  std::vector<std::size_t> model_cols;
  for (const auto& model : model_order) model_cols.push_back(cells.column(model));

  for (std::size_t i = 0; i < cells.rows.size(); ++i) {
    const auto& row = cells.rows[i];
    TaskCell cell;
    cell.task_key = row[c_dataset] + "/" + row[c_task];
    if (row[c_direction] == "higher")
      cell.direction = Direction::HigherBetter;
    else if (row[c_direction] == "lower")
      cell.direction = Direction::LowerBetter;
    else
      raise(ErrorCode::ParseError, cells_path + ": direction must be higher|lower");
    for (std::size_t m = 0; m < model_order.size(); ++m) {
      const std::string& text = row[model_cols[m]];
      if (text.empty())
        raise(ErrorCode::MissingFixture, table.id + " cell " + cell.task_key +
                                             " has no value for " + model_order[m]);
      cell.values[model_order[m]] =
          parse_double(text, cells_path, cells.line_numbers[i]);
    }
    table.cells.push_back(std::move(cell));
  }

  const std::string scores_path = dir + "/" + jt.at("scores").get<std::string>();
  const CsvTable scores = read_csv(scores_path);
  const std::size_t c_row = scores.column("row");
  const std::size_t c_entry = scores.column("entry");
  const std::size_t c_published = scores.column("published");
  for (const auto& row : scores.rows)
    table.published[row[c_row]][row[c_entry]] = row[c_published];
  return table;
}

}  // namespace

bool score_matches(double computed, const std::string& published) {
  const double published_value = std::stod(published);
  if (std::abs(computed - published_value) <= 0.01 + 1e-9) return true;
  const double displayed = round_to(computed, decimals_of(published));
  return std::abs(displayed - published_value) <= 1e-9;
}

std::vector<FixtureTable> load_fixture_tables(
    const std::string& fixture_dir,
    std::map<std::string, std::vector<std::string>>& groups,
    std::vector<std::string>& model_order) {
  const std::string manifest_path = fixture_dir + "/manifest.json";
  std::ifstream in(manifest_path);
  if (!in) raise(ErrorCode::MissingFixture, "cannot open " + manifest_path);
  nlohmann::json manifest = nlohmann::json::parse(in, nullptr, false);
  if (manifest.is_discarded())
    raise(ErrorCode::ParseError, manifest_path + ": invalid JSON");

  model_order = manifest.at("model_order").get<std::vector<std::string>>();
  groups.clear();
  for (const auto& [group, members] : manifest.at("groups").items())
    groups[group] = members.get<std::vector<std::string>>();

  std::vector<FixtureTable> tables;
  for (const auto& jt : manifest.at("tables"))
    tables.push_back(load_table(fixture_dir, jt, model_order));
  return tables;
}

ScoreReport reproduce_scores(const std::string& fixture_dir) {
  std::map<std::string, std::vector<std::string>> groups;
  std::vector<std::string> model_order;
  const auto tables = load_fixture_tables(fixture_dir, groups, model_order);

  std::map<std::string, WinScores> computed;
  for (const auto& table : tables) {
    try {
      computed[table.id] = win_score(table.cells, model_order, groups);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::MissingCell)
        raise(ErrorCode::MissingFixture, table.id + ": " + e.what());
      throw;
    }
  }

  ScoreReport report;
  for (const auto& table : tables) {
    const WinScores& own = computed.at(table.id);

    auto compare_row = [&](const std::string& row_name,
                           const std::map<std::string, std::string>& entries,
                           auto value_of) {
      bool row_ok = true;
      for (const auto& [entry, published] : entries) {
        ScoreComparison cmp;
        cmp.table_id = table.id;
        cmp.row = row_name;
        cmp.entry = entry;
        cmp.computed = value_of(entry);
        cmp.published = published;
        cmp.matched = score_matches(cmp.computed, published);
        row_ok = row_ok && cmp.matched;
        report.comparisons.push_back(std::move(cmp));
      }
      ++report.total_rows;
      if (row_ok) ++report.matched_rows;
    };

    for (const auto& [row_name, entries] : table.published) {
      if (row_name == "score") {
        compare_row(row_name, entries,
                    [&](const std::string& e) { return own.per_model.at(e); });
      } else if (row_name == "score_comb") {
        compare_row(row_name, entries,
                    [&](const std::string& e) { return own.per_group.at(e); });
      } else if (row_name == "score_total" || row_name == "score_total_comb") {
        if (table.total_with.empty() || !computed.count(table.total_with))
          raise(ErrorCode::MissingFixture,
                table.id + ": row '" + row_name + "' needs a linked table");
        const WinScores& other = computed.at(table.total_with);
        if (row_name == "score_total")
          compare_row(row_name, entries, [&](const std::string& e) {
            return own.per_model.at(e) + other.per_model.at(e);
          });
        else
          compare_row(row_name, entries, [&](const std::string& e) {
            return own.per_group.at(e) + other.per_group.at(e);
          });
      } else {
        raise(ErrorCode::ParseError, table.id + ": unknown score row '" + row_name + "'");
      }
    }

    // Arithmetic audit of the published rows themselves: per-model win
    // scores over N tasks must sum to N, and combined rows must equal the
    // sum of their per-model rows. Published rows that break this cannot be
    // reproduced by any tie convention.
    auto published_sum = [&](const std::string& row_name) {
      double acc = 0.0;
      auto it = table.published.find(row_name);
      if (it == table.published.end()) return -1.0;
      for (const auto& [entry, text] : it->second) acc += std::stod(text);
      return acc;
    };
    const double task_count = static_cast<double>(table.cells.size());
    const double score_sum = published_sum("score");
    if (score_sum >= 0.0 && std::abs(score_sum - task_count) > 0.05)
      report.notes.push_back(table.id + ": published per-model scores sum to " +
                             std::to_string(score_sum) + " over " +
                             std::to_string(static_cast<int>(task_count)) + " tasks");
    if (!table.total_with.empty()) {
      const double total_sum = published_sum("score_total");
      const double expected =
          task_count + static_cast<double>(computed.at(table.total_with).task_count);
      if (total_sum >= 0.0 && std::abs(total_sum - expected) > 0.05)
        report.notes.push_back(table.id + ": published combined-table scores sum to " +
                               std::to_string(total_sum) + " over " +
                               std::to_string(static_cast<int>(expected)) + " tasks");
    }
  }
  return report;
}

std::string score_report_text(const ScoreReport& report) {
  std::ostringstream os;
  for (const auto& cmp : report.comparisons) {
    os << (cmp.matched ? "[ ok ] " : "[FAIL] ") << cmp.table_id << ' ' << cmp.row << ' '
       << cmp.entry << ": computed " << cmp.computed << " vs published " << cmp.published
       << '\n';
  }
  for (const auto& note : report.notes) os << "[note] " << note << '\n';
  os << report.matched_rows << '/' << report.total_rows << " score rows match\n";
  return os.str();
}

std::string score_report_json(const ScoreReport& report) {
  nlohmann::json j;
  j["matched_rows"] = report.matched_rows;
  j["total_rows"] = report.total_rows;
  j["all_matched"] = report.all_matched();
  j["notes"] = report.notes;
  j["comparisons"] = nlohmann::json::array();
  for (const auto& cmp : report.comparisons) {
    j["comparisons"].push_back({{"table", cmp.table_id},
                                {"row", cmp.row},
                                {"entry", cmp.entry},
                                {"computed", cmp.computed},
                                {"published", cmp.published},
                                {"matched", cmp.matched}});
  }
  return j.dump(2) + "\n";
}

}  // namespace ppgbench
