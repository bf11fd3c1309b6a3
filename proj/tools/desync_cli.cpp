// desync command-line front end. Talks to the library only through desync.h.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "desync/desync.h"

using nlohmann::json;

namespace {

struct DelayFlags {
  std::string preset;
  std::optional<double> mean;
  std::optional<double> variance;

  void attach(CLI::App* cmd) {
    cmd->add_option("--delay", preset, "Delay preset: calibrated, table2-regime, none, auto-calibrate");
    cmd->add_option("--delay-mean", mean, "Explicit delay mean (s)");
    cmd->add_option("--delay-variance", variance, "Explicit delay variance (s^2)");
  }

  void apply(json& req) const {
    if (mean || variance) {
      req["delay"] = {{"mean_s", mean.value_or(0.0)}, {"variance_s2", variance.value_or(0.0)}, {"label", "cli"}};
    } else if (!preset.empty()) {
      req["delay"] = preset;
    }
  }
};

int run(const std::string& verb, const json& request) {
  char* response = nullptr;
  const std::string text = request.dump();
  const desync_status st = desync_run(verb.c_str(), text.c_str(), &response);
  if (st != DESYNC_OK) {
    std::cerr << "desync " << verb << ": " << desync_last_error() << "\n";
    return static_cast<int>(st);
  }
  std::fputs(response, stdout);
  desync_string_free(response);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Timing side-channel simulator for activation functions with a random-delay countermeasure"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(desync_version()));

  std::optional<std::uint64_t> seed;
  std::string config_file;
  std::string out_dir;
  app.add_option("--seed", seed, "Master seed; every campaign derives its own seed from it");
  app.add_option("--config", config_file, "Experiment config file (JSON)")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Output directory (default: $DESYNC_OUT_DIR or ./desync-out)");

  json req = json::object();

  auto* profile = app.add_subcommand("profile", "Capture unprotected timing campaigns (Table 1 / Figure 1)");
  std::string kind = "all";
  std::optional<std::size_t> count;
  std::string sampler, export_profiles;
  bool host = false;
  std::optional<std::size_t> host_reps;
  std::optional<double> host_input;
  profile->add_option("--kind", kind, "relu, sigmoid, tanh, a user profile kind, or all");
  profile->add_option("-n,--count", count, "Samples per activation");
  profile->add_option("--sampler", sampler, "uniform | uniform(lo,hi) | fixed(x)");
  profile->add_option("--export-profiles", export_profiles, "Write the profile calibration file here");
  profile->add_flag("--host", host, "Also time the activations on this machine (not reproducible)");
  profile->add_option("--host-repetitions", host_reps);
  profile->add_option("--host-input", host_input);

  auto* calib = app.add_subcommand("calibrate", "Derive delay parameters from unprotected trace CSVs");
  std::vector<std::string> traces;
  std::optional<std::size_t> max_clusters;
  calib->add_option("--traces", traces, "Trace CSV files or directories (default: fresh campaign)");
  calib->add_option("--max-clusters", max_clusters);

  auto* protect = app.add_subcommand("protect", "Add random delays to a trace (Table 2 / Figure 2)");
  std::string trace_in, trace_out;
  DelayFlags protect_delay;
  protect->add_option("--trace", trace_in, "Unprotected trace CSV (default: protect a fresh campaign)");
  protect->add_option("--output", trace_out, "Protected trace CSV path");
  protect_delay.attach(protect);

  auto* tvla = app.add_subcommand("tvla", "Fixed-vs-random Welch t-test, unprotected and protected");
  std::string tvla_kind = "all", aggregate;
  std::optional<std::size_t> n_per_set, layer_width;
  std::optional<double> fixed_input;
  DelayFlags tvla_delay;
  tvla->add_option("--kind", tvla_kind);
  tvla->add_option("--n-per-set", n_per_set);
  tvla->add_option("--fixed-input", fixed_input);
  tvla->add_option("--aggregate", aggregate, "per-call | per-layer");
  tvla->add_option("--layer-width", layer_width);
  tvla_delay.attach(tvla);

  auto* dist = app.add_subcommand("distinguish", "Mean-distance activation distinguisher");
  std::string dist_trace;
  std::optional<std::size_t> queries, trials;
  std::string query_plan;
  DelayFlags dist_delay;
  dist->add_option("--trace", dist_trace, "Classify the durations in this trace instead of sweeping");
  dist->add_option("--queries", queries);
  dist->add_option("--trials", trials);
  dist->add_option("--query-plan", query_plan, "stratified (chosen inputs, default) | uniform (i.i.d. inputs)");
  dist_delay.attach(dist);

  auto* over = app.add_subcommand("overhead", "Per-neuron and per-layer cost of the countermeasure");
  std::string network, ranges;
  std::vector<double> act_range, prot_range;
  DelayFlags over_delay;
  over->add_option("--network", network, "Network description (JSON)")->check(CLI::ExistingFile);
  over->add_option("--ranges", ranges, "published | simulated");
  over->add_option("--activation-range", act_range, "Unprotected activation time min max (s)")->expected(2);
  over->add_option("--protected-range", prot_range, "Protected activation time min max (s)")->expected(2);
  over_delay.attach(over);

  auto* repro = app.add_subcommand("repro", "Full pipeline: tables, calibration, TVLA, distinguisher, overhead");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : DESYNC_ERR_CONFIG;
  }

  if (seed) req["seed"] = *seed;
  if (!config_file.empty()) req["config_file"] = config_file;
  if (out_dir.empty()) {
    const char* env = std::getenv("DESYNC_OUT_DIR");
    out_dir = env && *env ? env : "desync-out";
  }
  req["out"] = out_dir;

  if (profile->parsed()) {
    req["kind"] = kind;
    if (count) req["n"] = *count;
    if (!sampler.empty()) req["sampler"] = sampler;
    if (!export_profiles.empty()) req["export_profiles"] = export_profiles;
    if (host) req["host"] = true;
    if (host_reps) req["host_repetitions"] = *host_reps;
    if (host_input) req["host_input"] = *host_input;
    return run("profile", req);
  }
  if (calib->parsed()) {
    if (!traces.empty()) req["traces"] = traces;
    if (max_clusters) req["max_clusters"] = *max_clusters;
    return run("calibrate", req);
  }
  if (protect->parsed()) {
    if (!trace_in.empty()) req["trace"] = trace_in;
    if (!trace_out.empty()) req["output"] = trace_out;
    protect_delay.apply(req);
    return run("protect", req);
  }
  if (tvla->parsed()) {
    req["kind"] = tvla_kind;
    if (n_per_set) req["n_per_set"] = *n_per_set;
    if (fixed_input) req["fixed_input"] = *fixed_input;
    if (!aggregate.empty()) req["aggregate"] = aggregate;
    if (layer_width) req["layer_width"] = *layer_width;
    tvla_delay.apply(req);
    return run("tvla", req);
  }
  if (dist->parsed()) {
    if (!dist_trace.empty()) req["trace"] = dist_trace;
    if (queries) req["queries"] = *queries;
    if (trials) req["trials"] = *trials;
    if (!query_plan.empty()) req["query_plan"] = query_plan;
    dist_delay.apply(req);
    return run("distinguish", req);
  }
  if (over->parsed()) {
    if (!network.empty()) req["network"] = network;
    if (!ranges.empty()) req["ranges"] = ranges;
    if (!act_range.empty()) req["activation_range"] = act_range;
    if (!prot_range.empty()) req["protected_range"] = prot_range;
    over_delay.apply(req);
    return run("overhead", req);
  }
  if (repro->parsed()) return run("repro", req);
  return DESYNC_ERR_CONFIG;
}
