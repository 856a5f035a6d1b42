#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "ppgbench/dataset.hpp"
#include "ppgbench/eval.hpp"

using namespace ppgbench;
namespace fs = std::filesystem;

namespace {

struct CliSandbox {
  fs::path dir;
  CliSandbox() {
    dir = fs::temp_directory_path() / "ppgbench_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

const CliSandbox& box() {
  static const CliSandbox sandbox;
  return sandbox;
}

int run(const std::string& args, const std::string& log_name = "log.txt") {
  const std::string log = box().path(log_name);
  const std::string cmd =
      std::string(PPGBENCH_CLI_PATH) + " " + args + " > " + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("cli end-to-end pipeline") {
  const auto& sandbox = box();
  const std::string raw = sandbox.path("raw.jsonl");
  const std::string proc = sandbox.path("proc.jsonl");
  const std::string plan = sandbox.path("plan.json");
  const std::string results = sandbox.path("results.csv");
  const std::string model = sandbox.path("model.json");
  const std::string radar = sandbox.path("radar.json");

  // synth example from the interface contract: one record, with the global
  // seed flag appearing after the subcommand options
  const std::string single = sandbox.path("single.jsonl");
  CHECK(run("synth --hr 72 --rr 15 --duration 30 --seed 7 --out " + single) == 0);
  CHECK(ingest_jsonl(single).size() == 1);
  CHECK(fs::exists(single + ".manifest.json"));

  // a small multi-subject corpus for the pipeline
  REQUIRE(run("--seed 3 synth --hr 72 --hr-jitter 18 --count 12 --noise-std 0.03 "
              "--duration 30 --out " + raw) == 0);
  REQUIRE(run("preprocess --in " + raw + " --out " + proc) == 0);
  const auto processed = ingest_jsonl(proc);
  REQUIRE(processed.size() == 12);
  for (const auto& rec : processed) {
    CHECK(rec.segment.samples.size() == 1200);
    for (double v : rec.segment.samples) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }

  REQUIRE(run("--seed 11 split --in " + proc + " --protocol ratio --out " + plan) == 0);
  nlohmann::json plan_json = nlohmann::json::parse(slurp(plan));
  CHECK(plan_json["folds"].size() == 1);
  CHECK(plan_json["folds"][0]["train"].size() == 8);
  CHECK(plan_json["folds"][0]["val"].size() == 2);
  CHECK(plan_json["folds"][0]["test"].size() == 2);

  REQUIRE(run("baseline hr --in " + proc + " --results " + results) == 0);

  REQUIRE(run("--seed 5 train --data " + proc + " --plan " + plan +
              " --objective task_regression --layers 1 --d-model 16 --heads 2 "
              "--mlp 32 --steps 20 --batch 2 --out " + model) == 0);
  // retraining with the same seed writes a byte-identical checkpoint
  const std::string model_again = sandbox.path("model_again.json");
  REQUIRE(run("--seed 5 train --data " + proc + " --plan " + plan +
              " --objective task_regression --layers 1 --d-model 16 --heads 2 "
              "--mlp 32 --steps 20 --batch 2 --out " + model_again) == 0);
  CHECK(slurp(model) == slurp(model_again));
  const std::string entropy = sandbox.path("entropy.json");
  REQUIRE(run("evaluate --model " + model + " --data " + proc + " --plan " + plan +
              " --part test --model-id toy_reg --append --attn-entropy " + entropy +
              " --out " + results) == 0);
  nlohmann::json entropy_json = nlohmann::json::parse(slurp(entropy));
  REQUIRE(entropy_json["mean_entropy"].size() == 1);  // one layer
  REQUIRE(entropy_json["mean_entropy"][0].size() == 2);  // two heads
  for (const auto& h : entropy_json["mean_entropy"][0]) {
    CHECK(h.get<double>() >= 0.0);
    CHECK(h.get<double>() <= std::log(30.0) + 1e-9);  // ln T upper bound
  }
  const auto rows = read_results_csv(results);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].model_id == "ibi_baseline");
  CHECK(rows[1].model_id == "toy_reg");
  CHECK(rows[1].metric == Metric::Mae);

  // two models suffice for a radar report; the regime summary compares them
  const std::string regimes = sandbox.path("regimes.json");
  REQUIRE(run("report --results " + results + " --out " + radar + " --regimes " +
              regimes + " --reference ibi_baseline --challenger toy_reg") == 0);
  nlohmann::json regimes_json = nlohmann::json::parse(slurp(regimes));
  REQUIRE(regimes_json["regimes"].size() == 1);
  CHECK(regimes_json["regimes"][0]["count"] == 1);
  CHECK(regimes_json["regimes"][0]["domain"] == "in");
  nlohmann::json radar_json = nlohmann::json::parse(slurp(radar));
  REQUIRE(radar_json.contains("regression"));
  CHECK(radar_json["regression"]["models"].contains("toy_reg"));
  const auto coord =
      radar_json["regression"]["models"]["toy_reg"]["radar"]["avg_performance"];
  CHECK(coord.is_number());
  CHECK(coord.get<double>() >= 0.0);
  CHECK(coord.get<double>() <= 1.0);
}

TEST_CASE("cli fine-tunes a pretrained checkpoint onto a classification head") {
  const auto& sandbox = box();
  const std::string raw = sandbox.path("cls_raw.jsonl");
  const std::string proc = sandbox.path("cls_proc.jsonl");
  const std::string cls = sandbox.path("cls_labeled.jsonl");
  const std::string pretrained = sandbox.path("cls_pretrained.json");
  const std::string tuned = sandbox.path("cls_tuned.json");
  const std::string results = sandbox.path("cls_results.csv");

  REQUIRE(run("--seed 21 synth --hr 72 --hr-jitter 20 --count 8 --out " + raw) == 0);
  REQUIRE(run("preprocess --in " + raw + " --out " + proc) == 0);

  // relabel: class 1 when the heart rate is above the jitter midpoint
  auto records = ingest_jsonl(proc);
  for (auto& rec : records) {
    rec.task_id = "fast_vs_slow";
    rec.label_kind = LabelKind::ClassIndex;
    rec.label = rec.label > 72.0 ? 1.0 : 0.0;
    rec.unit = "class";
    rec.direction = Direction::HigherBetter;
  }
  write_jsonl(cls, records);

  REQUIRE(run("--seed 2 train --data " + proc +
              " --objective next_patch_mse --layers 1 --d-model 16 --heads 2 --mlp 32 "
              "--steps 10 --batch 2 --out " + pretrained) == 0);
  REQUIRE(run("--seed 2 train --data " + cls + " --init " + pretrained +
              " --objective task_classification --classes 2 --freeze head "
              "--steps 10 --batch 2 --out " + tuned) == 0);
  REQUIRE(run("evaluate --model " + tuned + " --data " + cls +
              " --model-id toy_cls --strategy head --out " + results) == 0);
  const auto rows = read_results_csv(results);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].metric == Metric::F1);
  CHECK(rows[0].value >= 0.0);
  CHECK(rows[0].value <= 1.0);
  CHECK(rows[0].strategy == Strategy::Head);
}

TEST_CASE("cli outputs are deterministic for a fixed seed") {
  const auto& sandbox = box();
  const std::string a = sandbox.path("det_a.jsonl");
  const std::string b = sandbox.path("det_b.jsonl");
  REQUIRE(run("--seed 42 synth --count 3 --noise-std 0.05 --out " + a) == 0);
  REQUIRE(run("--seed 42 synth --count 3 --noise-std 0.05 --out " + b) == 0);
  CHECK(slurp(a) == slurp(b));
  REQUIRE(run("--seed 43 synth --count 3 --noise-std 0.05 --out " +
              sandbox.path("det_c.jsonl")) == 0);
  CHECK(slurp(a) != slurp(sandbox.path("det_c.jsonl")));
}

TEST_CASE("cli refuses to overwrite outputs without --force") {
  const auto& sandbox = box();
  const std::string out = sandbox.path("overwrite.jsonl");
  REQUIRE(run("synth --out " + out) == 0);
  CHECK(run("synth --out " + out, "overwrite_log.txt") == 1);
  const std::string log = slurp(sandbox.path("overwrite_log.txt"));
  CHECK(log.find("--force") != std::string::npos);
  CHECK(run("--force synth --out " + out) == 0);
}

TEST_CASE("cli exits 2 on usage errors and malformed inputs") {
  const auto& sandbox = box();
  CHECK(run("frobnicate", "usage_log.txt") == 2);

  const std::string bad = sandbox.path("bad_results.csv");
  {
    std::ofstream out(bad);
    out << "task_id,dataset_id,model_id,model_size,strategy,metric,value,direction,"
           "domain,data_hours\n";
    out << "t,d,m,1000,full,mae,not_a_number,lower,in,\n";
  }
  CHECK(run("report --results " + bad + " --out " + sandbox.path("bad_radar.json"),
            "bad_csv_log.txt") == 2);
  const std::string log = slurp(sandbox.path("bad_csv_log.txt"));
  CHECK(log.find("line 2") != std::string::npos);
}

TEST_CASE("cli honors BENCH_SEED as the default seed") {
  const auto& sandbox = box();
  const std::string a = sandbox.path("env_a.jsonl");
  const std::string b = sandbox.path("env_b.jsonl");
  const std::string base = std::string(PPGBENCH_CLI_PATH);
  CHECK(WEXITSTATUS(std::system(("BENCH_SEED=77 " + base + " synth --count 2 "
                                 "--noise-std 0.05 --out " + a + " > /dev/null 2>&1")
                                    .c_str())) == 0);
  CHECK(run("--seed 77 synth --count 2 --noise-std 0.05 --out " + b) == 0);
  CHECK(slurp(a) == slurp(b));
}

TEST_CASE("cli reproduce writes the comparison report") {
  const auto& sandbox = box();
  const std::string out = sandbox.path("repro.json");
  REQUIRE(run(std::string("reproduce --fixtures ") + PPGBENCH_FIXTURE_DIR + " --out " +
              out) == 0);
  nlohmann::json j = nlohmann::json::parse(slurp(out));
  CHECK(j["total_rows"] == 16);
  CHECK(j["matched_rows"] == 14);
}
