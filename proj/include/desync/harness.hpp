#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "desync/countermeasure.hpp"
#include "desync/leakage.hpp"
#include "desync/overhead.hpp"
#include "desync/serialize.hpp"
#include "desync/timing_model.hpp"

namespace desync {

std::string_view tool_version() noexcept;

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr std::string_view kOutputDirEnv = "DESYNC_OUT_DIR";

/// Delay choice in a config: a named preset, explicit parameters, or
/// "auto-calibrate" (derive from the unprotected campaign of the same run).
struct DelaySetting {
  bool auto_calibrate = false;
  DelayDistribution dist;

  static DelaySetting parse(const json& j);
  json to_json() const;
};

/// Resolves "calibrated", "table2-regime" or "none". Throws ConfigError.
DelayDistribution delay_preset(std::string_view name);

struct ExperimentConfig {
  std::string profiles = "builtin";  // or a profile calibration file
  std::vector<std::string> activations{"relu", "sigmoid", "tanh"};
  std::size_t campaign_size = 2000;
  std::size_t tvla_size = 5000;
  std::string input_sampler = "uniform";
  std::optional<double> fixed_input;
  DelaySetting protect_delay{false, table2_regime_delay()};
  DelaySetting assessment_delay{true, {}};
  std::uint64_t seed = 20230;
  Aggregation aggregate = Aggregation::PerCall;
  std::size_t layer_width = 1;
  std::size_t queries = 10;
  std::size_t trials = 1000;
  QueryPlan query_plan = QueryPlan::Stratified;
  NetworkCostModel network = reference_cost_model();
  std::string overhead_ranges = "published";  // or "simulated"
  std::filesystem::path output_dir;           // empty: keep results in memory

  /// Strict parse: unknown keys and schema mismatches throw ConfigError.
  static ExperimentConfig from_json(const json& j);
  /// Every field except output_dir.
  json to_json() const;
  std::string digest() const;
};

struct SummaryRow {
  std::string kind;
  std::size_t n = 0;
  double mean = 0.0;  // seconds
  double min = 0.0;
  double max = 0.0;
  double stddev = 0.0;
};

SummaryRow summarize_trace(const TimingTrace& t);
/// "kind,mean_ms,min_ms,max_ms" table with four decimals.
std::string summary_table(const std::vector<SummaryRow>& rows);

struct Figure1Result {
  std::vector<TimingTrace> traces;
  std::vector<SummaryRow> table;
};

struct ProtectedResult {
  DelayDistribution delay;
  std::optional<CalibrationReport> calibration;
  std::vector<TimingTrace> traces;
  std::vector<SummaryRow> table;
  double pooled_stddev = 0.0;  // seconds
};

struct TvlaSuiteResult {
  std::vector<TvlaResult> unprotected;
  std::vector<TvlaResult> protected_results;
  DelayDistribution delay;
};

struct DistinguishResult {
  AccuracyTable unprotected;
  AccuracyTable protected_table;
  DelayDistribution delay;
};

/// Runs the reproduction pipelines for one configuration. Each campaign
/// derives its own seed from `config.seed` and a stage label, so stages can
/// run in any order and give the same bytes. Files go to `config.output_dir`
/// when it is set.
class Experiment {
 public:
  explicit Experiment(ExperimentConfig config);

  const ExperimentConfig& config() const noexcept { return config_; }
  const ProfileSet& profiles() const noexcept { return profiles_; }

  std::uint64_t stage_seed(std::string_view stage) const;

  Figure1Result run_figure1();
  CalibrationReport run_calibration();
  ProtectedResult run_protected();
  TvlaSuiteResult run_tvla_suite();
  DistinguishResult run_distinguish();
  OverheadReport run_overhead();
  /// Every stage above plus a combined report.json.
  json run_repro();

  /// Adds config digest and tool version to a result document.
  json stamp(json doc) const;

 private:
  DelayDistribution resolve(const DelaySetting& s, std::optional<CalibrationReport>* report);
  const Figure1Result& unprotected();
  void emit(const std::filesystem::path& rel, std::string_view contents) const;

  ExperimentConfig config_;
  ProfileSet profiles_;
  std::optional<Figure1Result> figure1_;
  std::optional<CalibrationReport> calibration_;
};

ProfileSet load_profiles(std::string_view source);

/// Command dispatcher behind the C API and CLI. `request` carries an optional
/// "config" object plus verb-specific keys; the return value is the result
/// document. Verbs: profile, calibrate, protect, tvla, distinguish, overhead, repro.
json run_command(std::string_view verb, const json& request);

}  // namespace desync
