#include <cmath>
#include <filesystem>
#include <map>

#include <doctest.h>

#include "desync/digest.hpp"
#include "desync/error.hpp"
#include "desync/harness.hpp"

using namespace desync;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.tvla_size = 500;
  c.trials = 50;
  return c;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = sha256_hex(read_file(e.path()));
  return files;
}

}  // namespace

TEST_CASE("config parsing is strict") {
  CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"sed", 1}}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"schema_version", 7}}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"campaign_size", 0}}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"distinguisher", {{"querys", 3}}}}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"protect_delay", "fast"}}), ConfigError);
  const auto c = ExperimentConfig::from_json(
      json{{"seed", 9}, {"protect_delay", "none"}, {"distinguisher", {{"query_plan", "uniform"}}}});
  CHECK(c.seed == 9);
  CHECK(c.protect_delay.dist.mean == 0.0);
  CHECK(c.query_plan == QueryPlan::Uniform);
}

TEST_CASE("config round-trips and digests are stable") {
  const ExperimentConfig c;
  const auto back = ExperimentConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(back.digest() == c.digest());
  auto d = c;
  d.seed += 1;
  CHECK(d.digest() != c.digest());
  auto e = c;
  e.output_dir = "/elsewhere";
  CHECK(e.digest() == c.digest());
}

TEST_CASE("delay presets and settings") {
  CHECK(delay_preset("calibrated") == calibrated_delay());
  CHECK(delay_preset("table2-regime") == table2_regime_delay());
  CHECK(delay_preset("none").mean == 0.0);
  CHECK_THROWS_AS(delay_preset("huge"), ConfigError);
  CHECK(DelaySetting::parse("auto-calibrate").auto_calibrate);
  const auto s = DelaySetting::parse(json{{"mean_s", 1e-3}, {"variance_s2", 2e-6}});
  CHECK(s.dist.mean == 1e-3);
}

TEST_CASE("figure1 default table matches Table 1 within 2%") {
  Experiment exp{ExperimentConfig{}};
  const auto res = exp.run_figure1();
  const double expected[3][3] = {{0.0207, 0.0206, 0.0209}, {0.4481, 0.3920, 0.4845}, {0.5170, 0.4375, 0.5985}};
  REQUIRE(res.table.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(res.table[i].mean * 1e3 - expected[i][0]) / expected[i][0] < 0.02);
    CHECK(std::abs(res.table[i].min * 1e3 - expected[i][1]) / expected[i][1] < 0.02);
    CHECK(std::abs(res.table[i].max * 1e3 - expected[i][2]) / expected[i][2] < 0.02);
  }
  const auto text = summary_table(res.table);
  CHECK(text.rfind("kind,mean_ms,min_ms,max_ms\n", 0) == 0);
}

TEST_CASE("figure1: seed change keeps statistics, n = 1 collapses the row") {
  ExperimentConfig c;
  c.seed = 777;
  Experiment a{ExperimentConfig{}}, b{c};
  const auto ra = a.run_figure1(), rb = b.run_figure1();
  CHECK(ra.traces[2].entries != rb.traces[2].entries);
  CHECK(std::abs(ra.table[2].mean - rb.table[2].mean) / ra.table[2].mean < 0.02);

  ExperimentConfig one;
  one.campaign_size = 1;
  const auto r1 = Experiment{one}.run_figure1();
  for (const auto& row : r1.table) {
    CHECK(row.mean == row.min);
    CHECK(row.mean == row.max);
  }
}

TEST_CASE("identity countermeasure reproduces the unprotected table") {
  ExperimentConfig c;
  c.protect_delay = DelaySetting::parse("none");
  Experiment exp{c};
  const auto fig = exp.run_figure1();
  const auto prot = exp.run_protected();
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(prot.table[i].mean == fig.table[i].mean);
    CHECK(prot.table[i].min == fig.table[i].min);
    CHECK(prot.table[i].max == fig.table[i].max);
  }
}

TEST_CASE("auto-calibrate emits a report whose digest covers the pooled traces") {
  ExperimentConfig c;
  c.protect_delay = DelaySetting::parse("auto-calibrate");
  Experiment exp{c};
  const auto prot = exp.run_protected();
  REQUIRE(prot.calibration.has_value());
  std::vector<double> pooled;
  for (const auto& t : exp.run_figure1().traces)
    for (double d : t.durations()) pooled.push_back(d);
  CHECK(prot.calibration->inputs_digest == digest_doubles(pooled));
  CHECK(prot.delay.mean == 6e-4);
  CHECK(prot.delay.variance == 1e-5);
}

TEST_CASE("tvla suite defaults and low-power flag") {
  ExperimentConfig c;
  Experiment exp{c};
  const auto r = exp.run_tvla_suite();
  REQUIRE(r.unprotected.size() == 3);
  REQUIRE(r.protected_results.size() == 3);
  for (const auto& t : r.unprotected) CHECK(t.leaks);
  for (const auto& t : r.protected_results) CHECK_FALSE(t.leaks);

  c.tvla_size = 2;
  const auto low = Experiment{c}.run_tvla_suite();
  for (const auto& t : low.unprotected) CHECK(t.low_power);
}

TEST_CASE("repro output is byte-identical across reruns and stamped") {
  const auto base = fs::temp_directory_path() / "desync_unit" / "repro";
  fs::remove_all(base);
  auto c = small_config();
  c.output_dir = base / "a";
  const auto doc = Experiment{c}.run_repro();
  c.output_dir = base / "b";
  Experiment{c}.run_repro();
  const auto a = snapshot(base / "a"), b = snapshot(base / "b");
  CHECK(a.size() >= 15);
  CHECK(a == b);
  CHECK(doc.at("config_digest") == c.digest());
  CHECK(doc.at("tool_version") == std::string(tool_version()));
  CHECK(a.count("traces/unprotected_tanh.csv") == 1);
  CHECK(a.count("traces/protected_relu.meta.json") == 1);
  CHECK(a.count("tvla_plot.dat") == 1);

  // Traces read back give the in-memory statistics.
  const auto t = load_trace(base / "a" / "traces" / "unprotected_sigmoid.csv");
  const auto row = summarize_trace(t);
  const auto mem = Experiment{small_config()}.run_figure1().table[1];
  CHECK(row.mean == mem.mean);
  CHECK(row.max == mem.max);
}

TEST_CASE("run_command validates requests") {
  CHECK_THROWS_AS(run_command("fly", json::object()), ConfigError);
  CHECK_THROWS_AS(run_command("tvla", json{{"colour", "red"}}), ConfigError);
  CHECK_THROWS_AS(run_command("calibrate", json{{"traces", "/nonexistent/dir"}}), IoError);
  const auto over = run_command("overhead", json::object());
  CHECK(over.contains("config_digest"));
  const auto prof = run_command("profile", json{{"kind", "relu"}, {"n", 50}});
  CHECK(prof.dump().find("relu") != std::string::npos);
}

TEST_CASE("profiles load from builtin or file") {
  CHECK(load_profiles("builtin").size() == 3);
  CHECK_THROWS_AS(load_profiles("/nonexistent/profiles.json"), IoError);
}
