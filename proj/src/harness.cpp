#include "desync/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>

#include "desync/digest.hpp"
#include "desync/error.hpp"
#include "desync/number_format.hpp"
#include "desync/stats.hpp"

namespace desync {

namespace fs = std::filesystem;

std::string_view tool_version() noexcept { return "desync 0.3.0"; }

DelayDistribution delay_preset(std::string_view name) {
  if (name == "calibrated") return calibrated_delay();
  if (name == "table2-regime") return table2_regime_delay();
  if (name == "none") return {0.0, 0.0, "none"};
  throw ConfigError("unknown delay preset '" + std::string(name) +
                    "' (expected calibrated, table2-regime, none or auto-calibrate)");
}

DelaySetting DelaySetting::parse(const json& j) {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "auto-calibrate") return {true, {}};
    return {false, delay_preset(name)};
  }
  if (j.is_object()) return {false, delay_from_json(j)};
  throw ConfigError("delay must be a preset name or an object with mean_s and variance_s2");
}

json DelaySetting::to_json() const {
  if (auto_calibrate) return "auto-calibrate";
  return {{"mean_s", dist.mean}, {"variance_s2", dist.variance}, {"label", dist.label}};
}

namespace {

constexpr std::string_view kConfigKeys[] = {
    "schema_version", "profiles", "activations", "campaign_size", "tvla_size", "input_sampler",
    "fixed_input", "protect_delay", "assessment_delay", "seed", "aggregate", "layer_width",
    "distinguisher", "network", "overhead_ranges", "output_dir"};

template <typename T>
T field(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: bad value for '") + key + "': " + e.what());
  }
}

std::size_t positive_count(const json& j, const char* key) {
  const auto v = field<long long>(j, key);
  if (v < 1) throw ConfigError(std::string("config: '") + key + "' must be >= 1");
  return static_cast<std::size_t>(v);
}

void reject_unknown(const json& j, std::span<const std::string_view> allowed, std::string_view what) {
  if (!j.is_object()) throw ConfigError(std::string(what) + ": expected an object");
  for (const auto& [key, _] : j.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError(std::string(what) + ": unknown key '" + key + "'");
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  reject_unknown(j, kConfigKeys, "config");
  ExperimentConfig c;
  if (j.contains("schema_version") && field<int>(j, "schema_version") != kConfigSchemaVersion)
    throw ConfigError("config: unsupported schema_version (expected " + std::to_string(kConfigSchemaVersion) + ")");
  if (j.contains("profiles")) c.profiles = field<std::string>(j, "profiles");
  if (j.contains("activations")) {
    c.activations = field<std::vector<std::string>>(j, "activations");
    if (c.activations.empty()) throw ConfigError("config: 'activations' must not be empty");
  }
  if (j.contains("campaign_size")) c.campaign_size = positive_count(j, "campaign_size");
  if (j.contains("tvla_size")) c.tvla_size = positive_count(j, "tvla_size");
  if (j.contains("input_sampler")) {
    c.input_sampler = field<std::string>(j, "input_sampler");
    parse_sampler(c.input_sampler);
  }
  if (j.contains("fixed_input") && !j.at("fixed_input").is_null()) c.fixed_input = field<double>(j, "fixed_input");
  if (j.contains("protect_delay")) c.protect_delay = DelaySetting::parse(j.at("protect_delay"));
  if (j.contains("assessment_delay")) c.assessment_delay = DelaySetting::parse(j.at("assessment_delay"));
  if (j.contains("seed")) c.seed = field<std::uint64_t>(j, "seed");
  if (j.contains("aggregate")) c.aggregate = parse_aggregation(field<std::string>(j, "aggregate"));
  if (j.contains("layer_width")) c.layer_width = positive_count(j, "layer_width");
  if (j.contains("distinguisher")) {
    const json& d = j.at("distinguisher");
    constexpr std::string_view keys[] = {"queries", "trials", "query_plan"};
    reject_unknown(d, keys, "config.distinguisher");
    if (d.contains("queries")) c.queries = positive_count(d, "queries");
    if (d.contains("trials")) c.trials = positive_count(d, "trials");
    if (d.contains("query_plan")) c.query_plan = parse_query_plan(field<std::string>(d, "query_plan"));
  }
  if (j.contains("network")) {
    const json& n = j.at("network");
    c.network = n.is_string() ? network_from_json(read_json_file(n.get<std::string>())) : network_from_json(n);
  }
  if (j.contains("overhead_ranges")) {
    c.overhead_ranges = field<std::string>(j, "overhead_ranges");
    if (c.overhead_ranges != "published" && c.overhead_ranges != "simulated")
      throw ConfigError("config: overhead_ranges must be 'published' or 'simulated'");
  }
  if (j.contains("output_dir")) c.output_dir = field<std::string>(j, "output_dir");
  return c;
}

json ExperimentConfig::to_json() const {
  return {{"schema_version", kConfigSchemaVersion},
          {"profiles", profiles},
          {"activations", activations},
          {"campaign_size", campaign_size},
          {"tvla_size", tvla_size},
          {"input_sampler", input_sampler},
          {"fixed_input", fixed_input ? json(*fixed_input) : json(nullptr)},
          {"protect_delay", protect_delay.to_json()},
          {"assessment_delay", assessment_delay.to_json()},
          {"seed", seed},
          {"aggregate", desync::to_string(aggregate)},
          {"layer_width", layer_width},
          {"distinguisher", {{"queries", queries}, {"trials", trials}, {"query_plan", desync::to_string(query_plan)}}},
          {"network", network_to_json(network)},
          {"overhead_ranges", overhead_ranges}};
}

std::string ExperimentConfig::digest() const { return sha256_hex(to_json().dump()); }

SummaryRow summarize_trace(const TimingTrace& t) {
  const auto d = t.durations();
  const auto s = summarize(d);
  return {t.kind, s.count(), s.mean(), s.min(), s.max(), s.stddev()};
}

std::string summary_table(const std::vector<SummaryRow>& rows) {
  std::string out = "kind,mean_ms,min_ms,max_ms\n";
  for (const auto& r : rows)
    out += r.kind + "," + format_fixed(r.mean * 1e3, 4) + "," + format_fixed(r.min * 1e3, 4) + "," +
           format_fixed(r.max * 1e3, 4) + "\n";
  return out;
}

ProfileSet load_profiles(std::string_view source) {
  if (source == "builtin") return builtin_profiles();
  return profiles_from_json(read_json_file(fs::path(std::string(source))));
}

Experiment::Experiment(ExperimentConfig config) : config_(std::move(config)) {
  const ProfileSet all = load_profiles(config_.profiles);
  for (const auto& k : config_.activations) profiles_.add(all.at(k));
  parse_sampler(config_.input_sampler);
}

std::uint64_t Experiment::stage_seed(std::string_view stage) const {
  return derive_seed(config_.seed, label_id(stage));
}

void Experiment::emit(const fs::path& rel, std::string_view contents) const {
  if (config_.output_dir.empty()) return;
  write_file_atomic(config_.output_dir / rel, contents);
}

json Experiment::stamp(json doc) const {
  doc["config_digest"] = config_.digest();
  doc["tool_version"] = tool_version();
  return doc;
}

namespace {

std::string scatter_data(const TimingTrace& t) {
  std::string out = "# input duration_ms\n";
  for (const auto& e : t.entries) out += format_double(e.input) + " " + format_double(e.duration * 1e3) + "\n";
  return out;
}

json table_json(const std::vector<SummaryRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows)
    arr.push_back({{"kind", r.kind},
                   {"n", r.n},
                   {"mean_ms", r.mean * 1e3},
                   {"min_ms", r.min * 1e3},
                   {"max_ms", r.max * 1e3},
                   {"stddev_ms", r.stddev * 1e3}});
  return arr;
}

}  // namespace

Figure1Result Experiment::run_figure1() {
  if (figure1_) return *figure1_;
  Figure1Result res;
  const auto sampler = parse_sampler(config_.input_sampler);
  for (const auto& p : profiles_) {
    Rng rng(stage_seed("figure1/" + p.kind()));
    auto trace = capture_trace(p, config_.campaign_size, sampler, rng);
    if (!config_.output_dir.empty()) save_trace(trace, config_.output_dir / "traces" / ("unprotected_" + p.kind() + ".csv"));
    emit(fs::path("figure1") / (p.kind() + ".dat"), scatter_data(trace));
    res.table.push_back(summarize_trace(trace));
    res.traces.push_back(std::move(trace));
  }
  emit("table1.csv", summary_table(res.table));
  figure1_ = res;
  return res;
}

const Figure1Result& Experiment::unprotected() {
  if (!figure1_) run_figure1();
  return *figure1_;
}

CalibrationReport Experiment::run_calibration() {
  if (calibration_) return *calibration_;
  std::vector<double> pooled;
  for (const auto& t : unprotected().traces)
    for (const auto& e : t.entries) pooled.push_back(e.duration);
  calibration_ = calibrate(pooled);
  emit("calibration.json", dump(stamp(to_json(*calibration_))));
  return *calibration_;
}

DelayDistribution Experiment::resolve(const DelaySetting& s, std::optional<CalibrationReport>* report) {
  if (!s.auto_calibrate) return s.dist;
  auto r = run_calibration();
  if (report) *report = r;
  return r.result;
}

ProtectedResult Experiment::run_protected() {
  ProtectedResult res;
  res.delay = resolve(config_.protect_delay, &res.calibration);
  double var_sum = 0.0;
  for (const auto& t : unprotected().traces) {
    Rng rng(stage_seed("protect/" + t.kind));
    auto prot = protect_trace(t, res.delay, rng);
    if (!config_.output_dir.empty()) save_trace(prot, config_.output_dir / "traces" / ("protected_" + t.kind + ".csv"));
    emit(fs::path("figure2") / (t.kind + ".dat"), scatter_data(prot));
    res.table.push_back(summarize_trace(prot));
    var_sum += res.table.back().stddev * res.table.back().stddev;
    res.traces.push_back(std::move(prot));
  }
  res.pooled_stddev = std::sqrt(var_sum / static_cast<double>(res.table.size()));
  emit("table2.csv", summary_table(res.table));
  return res;
}

namespace {

std::string tvla_plot(const TvlaSuiteResult& r) {
  std::string out = "# label t_value\n";
  auto line = [&](const TvlaResult& t, const char* tag) {
    out += t.label + "/" + tag + " " + (std::isfinite(t.t_statistic) ? format_double(t.t_statistic) : std::string("inf")) + "\n";
  };
  for (const auto& t : r.unprotected) line(t, "unprotected");
  for (const auto& t : r.protected_results) line(t, "protected");
  const double thr = r.unprotected.empty() ? kTvlaThreshold : r.unprotected.front().threshold;
  out += "# threshold " + format_double(thr) + "\n";
  out += "threshold " + format_double(thr) + "\n";
  out += "threshold " + format_double(-thr) + "\n";
  return out;
}

json tvla_json(const TvlaSuiteResult& r) {
  json un = json::array(), pr = json::array();
  for (const auto& t : r.unprotected) un.push_back(to_json(t));
  for (const auto& t : r.protected_results) pr.push_back(to_json(t));
  return {{"unprotected", un}, {"protected", pr}, {"delay", delay_to_json(r.delay)}, {"threshold", kTvlaThreshold}};
}

}  // namespace

TvlaSuiteResult Experiment::run_tvla_suite() {
  TvlaSuiteResult res;
  res.delay = resolve(config_.assessment_delay, nullptr);
  TvlaOptions opts;
  opts.n_per_set = config_.tvla_size;
  opts.fixed_input = config_.fixed_input;
  opts.aggregate = config_.aggregate;
  opts.layer_width = config_.layer_width;
  for (const auto& p : profiles_) {
    const Rng rng(stage_seed("tvla/" + p.kind()));
    res.unprotected.push_back(tvla_campaign(p, std::nullopt, opts, rng));
    res.protected_results.push_back(tvla_campaign(p, res.delay, opts, rng));
  }
  emit("tvla.json", dump(stamp(tvla_json(res))));
  emit("tvla_plot.dat", tvla_plot(res));
  return res;
}

DistinguishResult Experiment::run_distinguish() {
  DistinguishResult res;
  res.delay = resolve(config_.assessment_delay, nullptr);
  res.unprotected = accuracy_sweep(profiles_, std::nullopt, config_.queries, config_.trials,
                                   Rng(stage_seed("distinguish/unprotected")), config_.query_plan);
  res.protected_table = accuracy_sweep(profiles_, res.delay, config_.queries, config_.trials,
                                       Rng(stage_seed("distinguish/protected")), config_.query_plan);
  emit("distinguish.json",
       dump(stamp({{"unprotected", to_json(res.unprotected)},
                   {"protected", to_json(res.protected_table)},
                   {"delay", delay_to_json(res.delay)}})));
  return res;
}

OverheadReport Experiment::run_overhead() {
  RangeTable unprot, prot;
  if (config_.overhead_ranges == "published") {
    unprot["*"] = reference_unprotected_activation_range();
    prot["*"] = reference_protected_activation_range();
  } else {
    const auto protected_run = run_protected();
    TimeRange all_u{INFINITY, -INFINITY}, all_p{INFINITY, -INFINITY};
    for (std::size_t i = 0; i < protected_run.table.size(); ++i) {
      const auto& u = unprotected().table[i];
      const auto& p = protected_run.table[i];
      unprot[u.kind] = {u.min, u.max};
      prot[p.kind] = {p.min, p.max};
      all_u = {std::min(all_u.min, u.min), std::max(all_u.max, u.max)};
      all_p = {std::min(all_p.min, p.min), std::max(all_p.max, p.max)};
    }
    unprot["*"] = all_u;
    prot["*"] = all_p;
  }
  auto report = overhead_report(config_.network, unprot, prot);
  json doc = to_json(report);
  doc["ranges"] = config_.overhead_ranges;
  emit("overhead.json", dump(stamp(doc)));
  return report;
}

json Experiment::run_repro() {
  const auto fig1 = run_figure1();
  const auto calib = run_calibration();
  const auto prot = run_protected();
  const auto tvla = run_tvla_suite();
  const auto dist = run_distinguish();
  const auto over = run_overhead();

  json doc = {{"table1", table_json(fig1.table)},
              {"calibration", to_json(calib)},
              {"table2", table_json(prot.table)},
              {"table2_delay", delay_to_json(prot.delay)},
              {"table2_pooled_stddev_ms", prot.pooled_stddev * 1e3},
              {"tvla", tvla_json(tvla)},
              {"distinguish", {{"unprotected", to_json(dist.unprotected)}, {"protected", to_json(dist.protected_table)}}},
              {"overhead", to_json(over)},
              {"config", config_.to_json()}};
  doc = stamp(doc);
  emit("report.json", dump(doc));
  return doc;
}

namespace {

constexpr std::string_view kCommonKeys[] = {"config", "config_file", "seed", "out"};

void check_request(const json& req, std::initializer_list<std::string_view> extra, std::string_view verb) {
  if (!req.is_object()) throw ConfigError("request must be an object");
  for (const auto& [key, _] : req.items()) {
    const bool common = std::find(std::begin(kCommonKeys), std::end(kCommonKeys), key) != std::end(kCommonKeys);
    const bool specific = std::find(extra.begin(), extra.end(), key) != extra.end();
    if (!common && !specific) throw ConfigError(std::string(verb) + ": unknown option '" + key + "'");
  }
}

ExperimentConfig config_for(const json& req) {
  ExperimentConfig c;
  if (req.contains("config_file")) c = ExperimentConfig::from_json(read_json_file(req.at("config_file").get<std::string>()));
  else if (req.contains("config")) c = ExperimentConfig::from_json(req.at("config"));
  if (req.contains("seed")) c.seed = field<std::uint64_t>(req, "seed");
  if (req.contains("out")) c.output_dir = field<std::string>(req, "out");
  else if (c.output_dir.empty())
    if (const char* env = std::getenv(std::string(kOutputDirEnv).c_str()); env && *env) c.output_dir = env;
  return c;
}

void select_kind(ExperimentConfig& c, const json& req) {
  if (!req.contains("kind")) return;
  const auto kind = field<std::string>(req, "kind");
  if (kind != "all") c.activations = {kind};
}

json host_timings(const ExperimentConfig& c, const json& req) {
  const auto reps = req.contains("host_repetitions") ? positive_count(req, "host_repetitions") : 1000;
  const double x = req.contains("host_input") ? field<double>(req, "host_input") : 0.5;
  json arr = json::array();
  for (const auto& k : c.activations) {
    const auto kind = parse_activation(k);
    if (!kind) continue;  // user-registered kinds have no host kernel
    const auto m = measure_host_time(*kind, x, reps);
    arr.push_back({{"kind", k}, {"seconds", m.seconds}, {"resolution_warning", m.resolution_warning},
                   {"input", x}, {"repetitions", reps}});
  }
  return arr;
}

std::vector<fs::path> trace_files(const json& spec) {
  std::vector<fs::path> files;
  auto add_dir = [&](const fs::path& dir) {
    std::error_code ec;
    for (const auto& e : fs::directory_iterator(dir, ec))
      if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
    if (ec) throw IoError("cannot list " + dir.string() + ": " + ec.message());
  };
  const auto one = [&](const std::string& s) {
    if (fs::is_directory(s)) add_dir(s);
    else files.emplace_back(s);
  };
  if (spec.is_string()) one(spec.get<std::string>());
  else if (spec.is_array())
    for (const auto& s : spec) one(s.get<std::string>());
  else throw ConfigError("calibrate: 'traces' must be a path or a list of paths");
  std::sort(files.begin(), files.end());
  return files;
}

json calibrate_command(const json& req) {
  check_request(req, {"traces", "max_clusters"}, "calibrate");
  const auto cfg = config_for(req);
  const std::size_t max_clusters = req.contains("max_clusters") ? positive_count(req, "max_clusters") : kDefaultMaxClusters;
  if (!req.contains("traces")) {
    Experiment exp(cfg);
    return exp.stamp(to_json(exp.run_calibration()));
  }
  std::vector<double> pooled;
  json sources = json::array(), skipped = json::array();
  for (const auto& f : trace_files(req.at("traces"))) {
    const auto t = load_trace(f);
    if (t.is_protected) {
      skipped.push_back(f.string());
      continue;
    }
    sources.push_back(f.string());
    for (const auto& e : t.entries) pooled.push_back(e.duration);
  }
  json doc = to_json(calibrate(pooled, max_clusters));
  doc["sources"] = sources;
  doc["skipped_protected"] = skipped;
  doc["tool_version"] = tool_version();
  if (!cfg.output_dir.empty()) write_file_atomic(cfg.output_dir / "calibration.json", dump(doc));
  return doc;
}

}  // namespace

json run_command(std::string_view verb, const json& request) {
  const json req = request.is_null() ? json::object() : request;

  if (verb == "profile") {
    check_request(req, {"kind", "n", "sampler", "export_profiles", "host", "host_repetitions", "host_input"}, verb);
    auto cfg = config_for(req);
    select_kind(cfg, req);
    if (req.contains("n")) cfg.campaign_size = positive_count(req, "n");
    if (req.contains("sampler")) cfg.input_sampler = field<std::string>(req, "sampler");
    Experiment exp(cfg);
    if (req.contains("export_profiles"))
      write_file_atomic(field<std::string>(req, "export_profiles"), dump(profiles_to_json(exp.profiles())));
    const auto fig = exp.run_figure1();
    json doc = {{"table", table_json(fig.table)}, {"table_text", summary_table(fig.table)}};
    json seeds = json::object();
    for (const auto& t : fig.traces) seeds[t.kind] = t.seed;
    doc["seeds"] = seeds;
    if (req.value("host", false)) doc["host"] = host_timings(cfg, req);
    return exp.stamp(doc);
  }
  if (verb == "calibrate") return calibrate_command(req);
  if (verb == "protect") {
    check_request(req, {"trace", "delay", "output"}, verb);
    auto cfg = config_for(req);
    if (req.contains("delay")) cfg.protect_delay = DelaySetting::parse(req.at("delay"));
    if (!req.contains("trace")) {
      Experiment exp(cfg);
      const auto res = exp.run_protected();
      json doc = {{"table", table_json(res.table)},
                  {"table_text", summary_table(res.table)},
                  {"delay", delay_to_json(res.delay)},
                  {"pooled_stddev_ms", res.pooled_stddev * 1e3}};
      if (res.calibration) doc["calibration"] = to_json(*res.calibration);
      return exp.stamp(doc);
    }
    if (cfg.protect_delay.auto_calibrate)
      throw ConfigError("protect: auto-calibrate needs a campaign; pass an explicit delay with a trace file");
    const fs::path in = field<std::string>(req, "trace");
    const auto trace = load_trace(in);
    Rng rng(derive_seed(cfg.seed, label_id("protect/" + trace.kind)));
    const auto prot = protect_trace(trace, cfg.protect_delay.dist, rng);
    fs::path out = req.contains("output") ? fs::path(field<std::string>(req, "output"))
                                          : (cfg.output_dir.empty() ? in.parent_path() : cfg.output_dir) /
                                                ("protected_" + in.stem().string() + ".csv");
    save_trace(prot, out);
    return {{"output", out.string()}, {"summary", table_json({summarize_trace(prot)})}, {"delay", delay_to_json(cfg.protect_delay.dist)},
            {"tool_version", tool_version()}};
  }
  if (verb == "tvla") {
    check_request(req, {"kind", "n_per_set", "fixed_input", "delay", "aggregate", "layer_width"}, verb);
    auto cfg = config_for(req);
    select_kind(cfg, req);
    if (req.contains("n_per_set")) cfg.tvla_size = positive_count(req, "n_per_set");
    if (req.contains("fixed_input")) cfg.fixed_input = field<double>(req, "fixed_input");
    if (req.contains("delay")) cfg.assessment_delay = DelaySetting::parse(req.at("delay"));
    if (req.contains("aggregate")) cfg.aggregate = parse_aggregation(field<std::string>(req, "aggregate"));
    if (req.contains("layer_width")) cfg.layer_width = positive_count(req, "layer_width");
    if (cfg.tvla_size < 2) throw DataError("tvla: n_per_set must be at least 2");
    Experiment exp(cfg);
    return exp.stamp(tvla_json(exp.run_tvla_suite()));
  }
  if (verb == "distinguish") {
    check_request(req, {"trace", "delay", "queries", "trials", "query_plan"}, verb);
    auto cfg = config_for(req);
    if (req.contains("delay")) cfg.assessment_delay = DelaySetting::parse(req.at("delay"));
    if (req.contains("queries")) cfg.queries = positive_count(req, "queries");
    if (req.contains("trials")) cfg.trials = positive_count(req, "trials");
    if (req.contains("query_plan")) cfg.query_plan = parse_query_plan(field<std::string>(req, "query_plan"));
    Experiment exp(cfg);
    if (req.contains("trace")) {
      const auto trace = load_trace(field<std::string>(req, "trace"));
      std::optional<DelayDistribution> hyp;
      if (req.contains("delay")) {
        if (cfg.assessment_delay.auto_calibrate) hyp = exp.run_calibration().result;
        else hyp = cfg.assessment_delay.dist;
      }
      const auto d = trace.durations();
      return exp.stamp(to_json(distinguish(d, exp.profiles(), hyp)));
    }
    const auto res = exp.run_distinguish();
    return exp.stamp({{"unprotected", to_json(res.unprotected)},
                             {"protected", to_json(res.protected_table)},
                             {"delay", delay_to_json(res.delay)}});
  }
  if (verb == "overhead") {
    check_request(req, {"network", "delay", "ranges", "activation_range", "protected_range"}, verb);
    auto cfg = config_for(req);
    if (req.contains("network")) {
      const json& n = req.at("network");
      cfg.network = n.is_string() ? network_from_json(read_json_file(n.get<std::string>())) : network_from_json(n);
    }
    if (req.contains("delay")) cfg.protect_delay = DelaySetting::parse(req.at("delay"));
    if (req.contains("ranges")) {
      cfg.overhead_ranges = field<std::string>(req, "ranges");
      if (cfg.overhead_ranges != "published" && cfg.overhead_ranges != "simulated")
        throw ConfigError("overhead: ranges must be 'published' or 'simulated'");
    }
    if (req.contains("activation_range") || req.contains("protected_range")) {
      auto range = [&](const char* key, TimeRange fallback) {
        if (!req.contains(key)) return fallback;
        const auto v = field<std::vector<double>>(req, key);
        if (v.size() != 2 || v[0] > v[1]) throw ConfigError(std::string("overhead: '") + key + "' must be [min, max]");
        return TimeRange{v[0], v[1]};
      };
      RangeTable u{{"*", range("activation_range", reference_unprotected_activation_range())}};
      RangeTable p{{"*", range("protected_range", reference_protected_activation_range())}};
      json doc = to_json(overhead_report(cfg.network, u, p));
      doc["ranges"] = "explicit";
      doc["config_digest"] = cfg.digest();
      doc["tool_version"] = tool_version();
      if (!cfg.output_dir.empty()) write_file_atomic(cfg.output_dir / "overhead.json", dump(doc));
      return doc;
    }
    Experiment exp(cfg);
    json doc = to_json(exp.run_overhead());
    doc["ranges"] = cfg.overhead_ranges;
    return exp.stamp(doc);
  }
  if (verb == "repro") {
    check_request(req, {}, verb);
    Experiment exp(config_for(req));
    return exp.run_repro();
  }
  throw ConfigError("unknown command '" + std::string(verb) + "'");
}

}  // namespace desync
