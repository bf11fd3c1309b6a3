#include "desync/desync.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <new>
#include <string>

#include "desync/activation.hpp"
#include "desync/countermeasure.hpp"
#include "desync/error.hpp"
#include "desync/harness.hpp"
#include "desync/leakage.hpp"
#include "desync/overhead.hpp"
#include "desync/serialize.hpp"
#include "desync/stats.hpp"
#include "desync/timing_model.hpp"

struct desync_profiles {
  desync::ProfileSet set;
};

struct desync_trace {
  desync::TimingTrace trace;
};

namespace {

thread_local std::string g_last_error;

desync_status status_of(desync::ErrorKind kind) {
  switch (kind) {
    case desync::ErrorKind::Config: return DESYNC_ERR_CONFIG;
    case desync::ErrorKind::Data: return DESYNC_ERR_DATA;
    case desync::ErrorKind::Io: return DESYNC_ERR_IO;
  }
  return DESYNC_ERR_INTERNAL;
}

template <typename F>
desync_status guarded(F&& body) noexcept {
  try {
    body();
    g_last_error.clear();
    return DESYNC_OK;
  } catch (const desync::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const nlohmann::json::exception& e) {
    g_last_error = std::string("malformed request: ") + e.what();
    return DESYNC_ERR_CONFIG;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return DESYNC_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return DESYNC_ERR_INTERNAL;
  }
}

void require(const void* p, const char* name) {
  if (!p) throw desync::ConfigError(std::string("null argument: ") + name);
}

desync::ActivationKind core_kind(const char* kind) {
  require(kind, "kind");
  auto k = desync::parse_activation(kind);
  if (!k) throw desync::ConfigError(std::string("unknown activation '") + kind + "'");
  return *k;
}

desync::DelayDistribution to_dist(const desync_delay& d) { return {d.mean, d.variance, {}}; }

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void fill(const desync::TvlaResult& r, desync_tvla* out) {
  out->t_statistic = r.t_statistic;
  out->n_fixed = r.n_fixed;
  out->n_random = r.n_random;
  out->threshold = r.threshold;
  out->leaks = r.leaks ? 1 : 0;
  out->low_power = r.low_power ? 1 : 0;
  out->fixed_input = r.fixed_input ? *r.fixed_input : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

extern "C" {

const char* desync_version(void) { return desync::tool_version().data(); }

const char* desync_last_error(void) { return g_last_error.c_str(); }

void desync_string_free(char* s) { std::free(s); }

desync_status desync_activation_eval(const char* kind, double x, double* out) {
  return guarded([&] {
    require(out, "out");
    *out = desync::evaluate(core_kind(kind), x);
  });
}

desync_status desync_host_time(const char* kind, double x, size_t repetitions, double* seconds,
                               int* resolution_warning) {
  return guarded([&] {
    require(seconds, "seconds");
    const auto m = desync::measure_host_time(core_kind(kind), x, repetitions);
    *seconds = m.seconds;
    if (resolution_warning) *resolution_warning = m.resolution_warning ? 1 : 0;
  });
}

desync_status desync_profiles_builtin(desync_profiles** out) {
  return guarded([&] {
    require(out, "out");
    *out = new desync_profiles{desync::builtin_profiles()};
  });
}

desync_status desync_profiles_load(const char* path, desync_profiles** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new desync_profiles{desync::load_profiles(path)};
  });
}

desync_status desync_profiles_save(const desync_profiles* p, const char* path) {
  return guarded([&] {
    require(p, "profiles");
    require(path, "path");
    desync::write_file_atomic(path, desync::dump(desync::profiles_to_json(p->set)));
  });
}

void desync_profiles_free(desync_profiles* p) { delete p; }

size_t desync_profiles_count(const desync_profiles* p) { return p ? p->set.size() : 0; }

const char* desync_profiles_kind(const desync_profiles* p, size_t index) {
  if (!p || index >= p->set.size()) return nullptr;
  return p->set.profiles()[index].kind().c_str();
}

desync_status desync_profiles_info(const desync_profiles* p, const char* kind, desync_profile_info* out) {
  return guarded([&] {
    require(p, "profiles");
    require(kind, "kind");
    require(out, "out");
    const auto& prof = p->set.at(kind);
    *out = {prof.clusters().size(), prof.aggregate_mean(), prof.declared_min(), prof.declared_max(),
            prof.domain().lo, prof.domain().hi};
  });
}

desync_status desync_sample_time(const desync_profiles* p, const char* kind, double x, uint64_t seed, double* out) {
  return guarded([&] {
    require(p, "profiles");
    require(kind, "kind");
    require(out, "out");
    desync::Rng rng(seed);
    *out = desync::sample_time(p->set.at(kind), x, rng);
  });
}

desync_status desync_trace_capture(const desync_profiles* p, const char* kind, size_t n, const char* sampler,
                                   uint64_t seed, desync_trace** out) {
  return guarded([&] {
    require(p, "profiles");
    require(kind, "kind");
    require(out, "out");
    desync::Rng rng(seed);
    auto t = desync::capture_trace(p->set.at(kind), n, desync::parse_sampler(sampler ? sampler : "uniform"), rng);
    *out = new desync_trace{std::move(t)};
  });
}

desync_status desync_trace_protect(const desync_trace* t, desync_delay delay, uint64_t seed, desync_trace** out) {
  return guarded([&] {
    require(t, "trace");
    require(out, "out");
    desync::Rng rng(seed);
    *out = new desync_trace{desync::protect_trace(t->trace, to_dist(delay), rng)};
  });
}

desync_status desync_trace_load(const char* csv_path, desync_trace** out) {
  return guarded([&] {
    require(csv_path, "csv_path");
    require(out, "out");
    *out = new desync_trace{desync::load_trace(csv_path)};
  });
}

desync_status desync_trace_save(const desync_trace* t, const char* csv_path) {
  return guarded([&] {
    require(t, "trace");
    require(csv_path, "csv_path");
    desync::save_trace(t->trace, csv_path);
  });
}

void desync_trace_free(desync_trace* t) { delete t; }

size_t desync_trace_size(const desync_trace* t) { return t ? t->trace.entries.size() : 0; }

int desync_trace_is_protected(const desync_trace* t) { return t && t->trace.is_protected ? 1 : 0; }

desync_status desync_trace_entries(const desync_trace* t, double* inputs, double* durations, size_t capacity,
                                   size_t* written) {
  return guarded([&] {
    require(t, "trace");
    const size_t n = std::min(capacity, t->trace.entries.size());
    for (size_t i = 0; i < n; ++i) {
      if (inputs) inputs[i] = t->trace.entries[i].input;
      if (durations) durations[i] = t->trace.entries[i].duration;
    }
    if (written) *written = n;
  });
}

desync_status desync_trace_summary(const desync_trace* t, desync_summary* out) {
  return guarded([&] {
    require(t, "trace");
    require(out, "out");
    const auto r = desync::summarize_trace(t->trace);
    *out = {r.n, r.mean, r.min, r.max, r.stddev};
  });
}

desync_status desync_delay_preset(const char* name, desync_delay* out) {
  return guarded([&] {
    require(name, "name");
    require(out, "out");
    const auto d = desync::delay_preset(name);
    *out = {d.mean, d.variance};
  });
}

desync_status desync_sample_delay(desync_delay delay, uint64_t seed, double* out) {
  return guarded([&] {
    require(out, "out");
    desync::Rng rng(seed);
    *out = desync::sample_delay(to_dist(delay), rng);
  });
}

desync_status desync_order_of_magnitude(double n, int* out) {
  return guarded([&] {
    require(out, "out");
    *out = desync::order_of_magnitude(n);
  });
}

desync_status desync_calibrate(const double* timings, size_t n, desync_calibration* out) {
  return guarded([&] {
    require(timings, "timings");
    require(out, "out");
    const auto r = desync::calibrate({timings, n});
    out->fastest_mean = r.fastest_mean;
    out->slowest_mean = r.slowest_mean;
    out->delta_t = r.delta_t;
    out->magnitude = r.magnitude;
    out->variance_exponent = r.variance_exponent;
    out->cluster_count = r.cluster_count;
    out->sample_count = r.sample_count;
    out->result = {r.result.mean, r.result.variance};
    std::memset(out->inputs_digest, 0, sizeof out->inputs_digest);
    std::memcpy(out->inputs_digest, r.inputs_digest.data(), std::min<size_t>(64, r.inputs_digest.size()));
  });
}

desync_status desync_welch_t(const double* xs, size_t nx, const double* ys, size_t ny, desync_tvla* out) {
  return guarded([&] {
    require(xs, "xs");
    require(ys, "ys");
    require(out, "out");
    fill(desync::welch_t({xs, nx}, {ys, ny}), out);
  });
}

desync_status desync_tvla_campaign(const desync_profiles* p, const char* kind, const desync_delay* delay,
                                   const desync_tvla_options* options, uint64_t seed, desync_tvla* out) {
  return guarded([&] {
    require(p, "profiles");
    require(kind, "kind");
    require(out, "out");
    desync::TvlaOptions opts;
    if (options) {
      if (options->n_per_set) opts.n_per_set = options->n_per_set;
      if (options->has_fixed_input) opts.fixed_input = options->fixed_input;
      opts.aggregate = options->per_layer ? desync::Aggregation::PerLayer : desync::Aggregation::PerCall;
      if (options->layer_width) opts.layer_width = options->layer_width;
      if (options->threshold > 0.0) opts.threshold = options->threshold;
    }
    std::optional<desync::DelayDistribution> cm;
    if (delay) cm = to_dist(*delay);
    fill(desync::tvla_campaign(p->set.at(kind), cm, opts, desync::Rng(seed)), out);
  });
}

desync_status desync_distinguish(const double* samples, size_t n, const desync_profiles* p,
                                 const desync_delay* hypothesis, size_t* predicted) {
  return guarded([&] {
    require(samples, "samples");
    require(p, "profiles");
    require(predicted, "predicted");
    std::optional<desync::DelayDistribution> hyp;
    if (hypothesis) hyp = to_dist(*hypothesis);
    const auto v = desync::distinguish({samples, n}, p->set, hyp);
    for (size_t i = 0; i < p->set.size(); ++i)
      if (p->set.profiles()[i].kind() == v.predicted) *predicted = i;
  });
}

desync_status desync_accuracy_sweep(const desync_profiles* p, const desync_delay* delay, size_t queries_per_trial,
                                    size_t trials, uint64_t seed, double* per_kind, size_t capacity,
                                    double* overall) {
  return guarded([&] {
    require(p, "profiles");
    std::optional<desync::DelayDistribution> cm;
    if (delay) cm = to_dist(*delay);
    const auto table = desync::accuracy_sweep(p->set, cm, queries_per_trial, trials, desync::Rng(seed));
    if (per_kind)
      for (size_t i = 0; i < std::min(capacity, table.kinds.size()); ++i) per_kind[i] = table.accuracy(i);
    if (overall) *overall = table.overall();
  });
}

desync_status desync_neuron_time_range(double mult_time, double add_time, size_t fan_in, double activation_min,
                                       double activation_max, double* out_min, double* out_max) {
  return guarded([&] {
    require(out_min, "out_min");
    require(out_max, "out_max");
    desync::NetworkCostModel m{mult_time, add_time, {{fan_in, 1, "*"}}};
    m.validate();
    const auto r = desync::neuron_time_range(m, 0, {activation_min, activation_max});
    *out_min = r.min;
    *out_max = r.max;
  });
}

desync_status desync_overhead_percent(double base_min, double base_max, double prot_min, double prot_max,
                                      double* pct_min, double* pct_max) {
  return guarded([&] {
    require(pct_min, "pct_min");
    require(pct_max, "pct_max");
    const auto r = desync::overhead_percent({base_min, base_max}, {prot_min, prot_max});
    *pct_min = r.min;
    *pct_max = r.max;
  });
}

desync_status desync_run(const char* verb, const char* request_json, char** response_json) {
  return guarded([&] {
    require(verb, "verb");
    require(response_json, "response_json");
    *response_json = nullptr;
    nlohmann::json req = nlohmann::json::object();
    if (request_json && *request_json) {
      try {
        req = nlohmann::json::parse(request_json);
      } catch (const nlohmann::json::parse_error& e) {
        throw desync::ConfigError(std::string("request is not valid JSON: ") + e.what());
      }
    }
    *response_json = dup_string(desync::dump(desync::run_command(verb, req)));
  });
}

}  // extern "C"
