#include "desync/serialize.hpp"

#include <unistd.h>

#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include "desync/error.hpp"
#include "desync/number_format.hpp"

namespace desync {

namespace fs = std::filesystem;

namespace {

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view what) {
  if (!j.is_object()) throw ConfigError(std::string(what) + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(std::string(what) + ": unknown key '" + key + "'");
  }
}

template <typename T>
T require(const json& j, const char* key, std::string_view what) {
  if (!j.contains(key)) throw ConfigError(std::string(what) + ": missing key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string(what) + ": bad value for '" + key + "': " + e.what());
  }
}

json interval_json(const Interval& iv) { return json::array({iv.lo, iv.hi}); }

Interval interval_from(const json& j, std::string_view what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigError(std::string(what) + ": interval must be [lo, hi]");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

json profile_to_json(const TimingProfile& p) {
  json clusters = json::array();
  for (const auto& c : p.clusters()) {
    json region = json::array();
    for (const auto& iv : c.region) region.push_back(interval_json(iv));
    clusters.push_back({{"label", c.label}, {"region", region}, {"mean_s", c.mean}, {"spread_s", c.spread}});
  }
  return {{"kind", p.kind()},
          {"id", p.id()},
          {"domain", interval_json(p.domain())},
          {"provenance", p.provenance()},
          {"clusters", clusters}};
}

TimingProfile profile_from_json(const json& j) {
  constexpr std::string_view what = "profile";
  check_keys(j, {"kind", "id", "domain", "provenance", "clusters"}, what);
  std::vector<TimingCluster> clusters;
  const json& cl = j.contains("clusters") ? j.at("clusters") : json();
  if (!cl.is_array()) throw ConfigError("profile: 'clusters' must be an array");
  for (const auto& c : cl) {
    check_keys(c, {"label", "region", "mean_s", "spread_s"}, "profile cluster");
    TimingCluster tc;
    tc.label = c.value("label", "");
    tc.mean = require<double>(c, "mean_s", "profile cluster");
    tc.spread = require<double>(c, "spread_s", "profile cluster");
    const json& region = c.contains("region") ? c.at("region") : json();
    if (!region.is_array()) throw ConfigError("profile cluster: 'region' must be a list of intervals");
    for (const auto& iv : region) tc.region.push_back(interval_from(iv, "profile cluster region"));
    clusters.push_back(std::move(tc));
  }
  const Interval domain = j.contains("domain") ? interval_from(j.at("domain"), what) : Interval{-2.0, 2.0};
  return TimingProfile(require<std::string>(j, "kind", what), std::move(clusters), domain, j.value("id", ""),
                       j.value("provenance", ""));
}

json profiles_to_json(const ProfileSet& set) {
  json arr = json::array();
  for (const auto& p : set) arr.push_back(profile_to_json(p));
  return {{"schema_version", kProfileSchemaVersion}, {"profiles", arr}};
}

ProfileSet profiles_from_json(const json& j) {
  check_keys(j, {"schema_version", "profiles"}, "profile file");
  if (require<int>(j, "schema_version", "profile file") != kProfileSchemaVersion)
    throw ConfigError("profile file: unsupported schema_version");
  const json& arr = j.at("profiles");
  if (!arr.is_array() || arr.empty()) throw ConfigError("profile file: 'profiles' must be a non-empty array");
  ProfileSet set;
  for (const auto& p : arr) set.add(profile_from_json(p));
  return set;
}

DelayDistribution delay_from_json(const json& j) {
  // Effective moments are derived; accepted so emitted documents read back.
  check_keys(j, {"mean_s", "variance_s2", "label", "truncation", "effective_mean_s", "effective_variance_s2"},
             "delay");
  if (j.contains("truncation") && j.at("truncation") != "resample-if-negative")
    throw ConfigError("delay: unsupported truncation policy");
  DelayDistribution d{require<double>(j, "mean_s", "delay"), require<double>(j, "variance_s2", "delay"),
                      j.value("label", "")};
  d.validate();
  return d;
}

json delay_to_json(const DelayDistribution& d) {
  return {{"mean_s", d.mean},
          {"variance_s2", d.variance},
          {"label", d.label},
          {"truncation", "resample-if-negative"},
          {"effective_mean_s", d.effective_mean()},
          {"effective_variance_s2", d.effective_variance()}};
}

json to_json(const CalibrationReport& r) {
  return {{"t_f_s", r.fastest_mean},
          {"t_s_s", r.slowest_mean},
          {"delta_t_s", r.delta_t},
          {"magnitude", r.magnitude},
          {"variance_exponent", r.variance_exponent},
          {"cluster_count", r.cluster_count},
          {"sample_count", r.sample_count},
          {"result", delay_to_json(r.result)},
          {"inputs_digest", r.inputs_digest},
          {"notes", r.notes}};
}

namespace {

json finite_or_string(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

}  // namespace

json to_json(const TvlaResult& r) {
  json j = {{"t_statistic", finite_or_string(r.t_statistic)},
            {"abs_t", finite_or_string(std::abs(r.t_statistic))},
            {"n_fixed", r.n_fixed},
            {"n_random", r.n_random},
            {"threshold", r.threshold},
            {"leaks", r.leaks},
            {"low_power", r.low_power},
            {"label", r.label},
            {"seed", r.seed},
            {"aggregate", r.aggregate},
            {"protected", r.is_protected}};
  j["fixed_input"] = r.fixed_input ? json(*r.fixed_input) : json(nullptr);
  return j;
}

json to_json(const DistinguisherVerdict& v) {
  json scores = json::array();
  for (const auto& [k, s] : v.scores) scores.push_back({{"kind", k}, {"distance_s", s}});
  return {{"predicted", v.predicted}, {"scores", scores}, {"n_queries", v.n_queries}, {"tie_break", v.tie_break}};
}

json to_json(const AccuracyTable& t) {
  json per_kind = json::object();
  for (std::size_t i = 0; i < t.kinds.size(); ++i) per_kind[t.kinds[i]] = t.accuracy(i);
  return {{"kinds", t.kinds},
          {"confusion", t.confusion},
          {"per_kind_accuracy", per_kind},
          {"overall_accuracy", t.overall()},
          {"queries_per_trial", t.queries_per_trial},
          {"trials", t.trials},
          {"protected", t.is_protected},
          {"query_plan", to_string(t.plan)},
          {"seed", t.seed}};
}

json to_json(const TimeRange& r) { return json::array({r.min, r.max}); }

json to_json(const OverheadReport& r) {
  auto pct = [](const OverheadPercent& p) { return json::array({p.min, p.max}); };
  json layers = json::array();
  for (const auto& l : r.layers) {
    layers.push_back({{"fan_in", l.fan_in},
                      {"neuron_count", l.neuron_count},
                      {"activation", l.activation},
                      {"neuron_baseline_s", to_json(l.neuron_baseline)},
                      {"neuron_protected_s", to_json(l.neuron_protected)},
                      {"layer_baseline_s", to_json(l.layer_baseline)},
                      {"layer_protected_s", to_json(l.layer_protected)},
                      {"overhead_pct", pct(l.overhead)},
                      {"overhead_cross_pct", pct(l.overhead_cross)}});
  }
  return {{"layers", layers},
          {"network_baseline_s", to_json(r.network_baseline)},
          {"network_protected_s", to_json(r.network_protected)},
          {"network_overhead_pct", pct(r.network_overhead)},
          {"notes", r.notes}};
}

NetworkCostModel network_from_json(const json& j) {
  check_keys(j, {"schema_version", "mult_time_s", "add_time_s", "layers"}, "network");
  if (j.contains("schema_version") && j.at("schema_version") != 1)
    throw ConfigError("network: unsupported schema_version");
  NetworkCostModel m;
  m.mult_time = require<double>(j, "mult_time_s", "network");
  m.add_time = require<double>(j, "add_time_s", "network");
  if (!j.contains("layers") || !j.at("layers").is_array()) throw ConfigError("network: 'layers' must be an array");
  for (const auto& l : j.at("layers")) {
    check_keys(l, {"fan_in", "neuron_count", "activation"}, "network layer");
    const auto fan_in = require<long long>(l, "fan_in", "network layer");
    const auto neurons = require<long long>(l, "neuron_count", "network layer");
    if (fan_in < 1 || neurons < 1) throw ConfigError("network layer: fan_in and neuron_count must be >= 1");
    m.layers.push_back({static_cast<std::size_t>(fan_in), static_cast<std::size_t>(neurons),
                        l.value("activation", std::string("*"))});
  }
  m.validate();
  return m;
}

json network_to_json(const NetworkCostModel& m) {
  json layers = json::array();
  for (const auto& l : m.layers)
    layers.push_back({{"fan_in", l.fan_in}, {"neuron_count", l.neuron_count}, {"activation", l.activation}});
  return {{"schema_version", 1}, {"mult_time_s", m.mult_time}, {"add_time_s", m.add_time}, {"layers", layers}};
}

std::string trace_csv(const TimingTrace& t) {
  std::string out = "input,duration_s\n";
  out.reserve(out.size() + t.entries.size() * 40);
  for (const auto& e : t.entries) {
    out += format_double(e.input);
    out += ',';
    out += format_double(e.duration);
    out += '\n';
  }
  return out;
}

json trace_metadata(const TimingTrace& t) {
  return {{"schema_version", kTraceSchemaVersion},
          {"kind", t.kind},
          {"protected", t.is_protected},
          {"seed", t.seed},
          {"protect_seed", t.protect_seed},
          {"profile_id", t.profile_id},
          {"campaign", t.campaign},
          {"countermeasure", t.countermeasure},
          {"count", t.entries.size()}};
}

fs::path sidecar_path(const fs::path& csv) {
  fs::path p = csv;
  p.replace_extension(".meta.json");
  return p;
}

void save_trace(const TimingTrace& t, const fs::path& csv) {
  write_file_atomic(csv, trace_csv(t));
  write_file_atomic(sidecar_path(csv), dump(trace_metadata(t)));
}

namespace {

double parse_csv_number(std::string_view s, const fs::path& path, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw DataError(path.string() + ":" + std::to_string(line) + ": bad number '" + std::string(s) + "'");
  return v;
}

}  // namespace

TimingTrace load_trace(const fs::path& csv) {
  const std::string text = read_file(csv);
  TimingTrace t;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header = true;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    std::string_view line(text.data() + pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (header) {
      if (line != "input,duration_s")
        throw DataError(csv.string() + ": expected header 'input,duration_s'");
      header = false;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string_view::npos) throw DataError(csv.string() + ":" + std::to_string(line_no) + ": expected two columns");
    const double input = parse_csv_number(line.substr(0, comma), csv, line_no);
    const double duration = parse_csv_number(line.substr(comma + 1), csv, line_no);
    if (!(duration > 0.0))
      throw DataError(csv.string() + ":" + std::to_string(line_no) + ": durations must be positive");
    t.entries.push_back({input, duration});
  }
  if (header) throw DataError(csv.string() + ": empty trace file");

  const fs::path meta = sidecar_path(csv);
  if (fs::exists(meta)) {
    const json m = read_json_file(meta);
    check_keys(m, {"schema_version", "kind", "protected", "seed", "protect_seed", "profile_id", "campaign",
                   "countermeasure", "count"},
               "trace metadata");
    t.kind = require<std::string>(m, "kind", "trace metadata");
    t.is_protected = require<bool>(m, "protected", "trace metadata");
    t.seed = m.value("seed", std::uint64_t{0});
    t.protect_seed = m.value("protect_seed", std::uint64_t{0});
    t.profile_id = m.value("profile_id", "");
    t.campaign = m.value("campaign", "");
    t.countermeasure = m.value("countermeasure", "");
    if (m.contains("count") && m.at("count").get<std::size_t>() != t.entries.size())
      throw DataError(csv.string() + ": entry count disagrees with sidecar metadata");
  } else {
    t.kind = csv.stem().string();
  }
  return t;
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
  static std::atomic<unsigned> counter{0};
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename into " + path.string());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed for " + path.string());
  return ss.str();
}

json read_json_file(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace desync
