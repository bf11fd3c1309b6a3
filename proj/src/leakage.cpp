#include "desync/leakage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "desync/error.hpp"
#include "desync/stats.hpp"

namespace desync {

TvlaResult welch_t(std::span<const double> xs, std::span<const double> ys, double threshold) {
  if (xs.size() < 2 || ys.size() < 2)
    throw DataError("welch t-test needs at least two observations per population");
  const auto sx = summarize(xs);
  const auto sy = summarize(ys);

  TvlaResult r;
  r.n_fixed = xs.size();
  r.n_random = ys.size();
  r.threshold = threshold;
  r.low_power = r.n_fixed < kLowPowerSamples || r.n_random < kLowPowerSamples;

  const double diff = sx.mean() - sy.mean();
  const double se = std::sqrt(sx.variance() / static_cast<double>(xs.size()) +
                              sy.variance() / static_cast<double>(ys.size()));
  if (se == 0.0) {
    r.t_statistic = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
  } else {
    r.t_statistic = diff / se;
  }
  r.leaks = std::abs(r.t_statistic) > threshold;
  return r;
}

std::string to_string(Aggregation a) { return a == Aggregation::PerCall ? "per-call" : "per-layer"; }

Aggregation parse_aggregation(std::string_view text) {
  if (text == "per-call") return Aggregation::PerCall;
  if (text == "per-layer") return Aggregation::PerLayer;
  throw ConfigError("unknown aggregation '" + std::string(text) + "' (expected per-call or per-layer)");
}

namespace {

// Observations for one TVLA population. `inputs_for(obs, neuron)` yields the
// activation input; every call gets its own jitter and (optionally) its own delay.
template <typename InputFn>
std::vector<double> observe(const TimingProfile& profile, const std::optional<DelayDistribution>& cm,
                            std::size_t n, std::size_t width, InputFn inputs_for, Rng& timing_rng,
                            Rng& delay_rng) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < width; ++j) {
      total += sample_time(profile, inputs_for(j), timing_rng);
      if (cm) total += sample_delay(*cm, delay_rng);
    }
    out[i] = total;
  }
  return out;
}

}  // namespace

TvlaResult tvla_campaign(const TimingProfile& profile, const std::optional<DelayDistribution>& countermeasure,
                         const TvlaOptions& options, const Rng& rng) {
  if (options.n_per_set < 2) throw DataError("TVLA needs at least two executions per set");
  const std::size_t width = options.aggregate == Aggregation::PerLayer ? options.layer_width : 1;
  if (width == 0) throw ConfigError("layer width must be at least 1");
  if (countermeasure) countermeasure->validate();

  const Interval dom = profile.domain();
  Rng input_rng = rng.split("tvla/fixed-input");
  std::vector<double> fixed_inputs(width);
  for (std::size_t j = 0; j < width; ++j) {
    if (j == 0 && options.fixed_input) {
      fixed_inputs[j] = *options.fixed_input;
      if (!profile.in_domain(fixed_inputs[j]))
        throw DomainError("fixed input outside the profile domain");
    } else {
      fixed_inputs[j] = input_rng.uniform(dom.lo, dom.hi);
    }
  }

  Rng fixed_timing = rng.split("tvla/fixed");
  Rng fixed_delay = rng.split("tvla/fixed-delay");
  Rng random_timing = rng.split("tvla/random");
  Rng random_delay = rng.split("tvla/random-delay");
  Rng random_inputs = rng.split("tvla/random-input");

  const auto xs = observe(profile, countermeasure, options.n_per_set, width,
                          [&](std::size_t j) { return fixed_inputs[j]; }, fixed_timing, fixed_delay);
  const auto ys = observe(profile, countermeasure, options.n_per_set, width,
                          [&](std::size_t) { return random_inputs.uniform(dom.lo, dom.hi); }, random_timing,
                          random_delay);

  auto r = welch_t(xs, ys, options.threshold);
  r.label = profile.kind();
  r.seed = rng.seed();
  r.fixed_input = fixed_inputs.front();
  r.aggregate = to_string(options.aggregate);
  r.is_protected = countermeasure.has_value();
  return r;
}

DistinguisherVerdict distinguish(std::span<const double> samples, const ProfileSet& profiles,
                                 const std::optional<DelayDistribution>& protected_hypothesis) {
  if (profiles.size() < 2) throw ConfigError("the distinguisher needs at least two candidate profiles");
  if (samples.empty()) throw DataError("the distinguisher needs at least one timing sample");

  const double observed = summarize(samples).mean();
  const double shift = protected_hypothesis ? protected_hypothesis->effective_mean() : 0.0;

  DistinguisherVerdict v;
  v.n_queries = samples.size();
  v.tie_break = "relu<sigmoid<tanh<other-by-name";
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : profiles) {
    const double score = std::abs(observed - (p.aggregate_mean() + shift));
    v.scores.emplace_back(p.kind(), score);
    if (score < best) {
      best = score;
      v.predicted = p.kind();
    }
  }
  return v;
}

double AccuracyTable::accuracy(std::size_t truth) const {
  std::size_t total = 0;
  for (auto c : confusion.at(truth)) total += c;
  return total ? static_cast<double>(confusion[truth][truth]) / static_cast<double>(total) : 0.0;
}

double AccuracyTable::overall() const {
  std::size_t hit = 0, total = 0;
  for (std::size_t i = 0; i < confusion.size(); ++i)
    for (std::size_t j = 0; j < confusion[i].size(); ++j) {
      total += confusion[i][j];
      if (i == j) hit += confusion[i][j];
    }
  return total ? static_cast<double>(hit) / static_cast<double>(total) : 0.0;
}

std::string to_string(QueryPlan p) { return p == QueryPlan::Uniform ? "uniform" : "stratified"; }

QueryPlan parse_query_plan(std::string_view text) {
  if (text == "uniform") return QueryPlan::Uniform;
  if (text == "stratified") return QueryPlan::Stratified;
  throw ConfigError("unknown query plan '" + std::string(text) + "' (expected uniform or stratified)");
}

AccuracyTable accuracy_sweep(const ProfileSet& profiles, const std::optional<DelayDistribution>& countermeasure,
                             std::size_t queries_per_trial, std::size_t trials, const Rng& rng, QueryPlan plan) {
  if (trials == 0) throw DataError("accuracy sweep needs at least one trial");
  if (queries_per_trial == 0) throw DataError("accuracy sweep needs at least one query per trial");
  if (countermeasure) countermeasure->validate();

  AccuracyTable table;
  for (const auto& p : profiles) table.kinds.push_back(p.kind());
  table.confusion.assign(table.kinds.size(), std::vector<std::size_t>(table.kinds.size(), 0));
  table.queries_per_trial = queries_per_trial;
  table.trials = trials;
  table.is_protected = countermeasure.has_value();
  table.plan = plan;
  table.seed = rng.seed();

  std::vector<double> samples(queries_per_trial);
  for (std::size_t truth = 0; truth < table.kinds.size(); ++truth) {
    const auto& profile = profiles.profiles()[truth];
    Rng stream = rng.split("sweep/" + profile.kind());
    const Interval dom = profile.domain();
    const double stratum = dom.width() / static_cast<double>(queries_per_trial);
    for (std::size_t t = 0; t < trials; ++t) {
      for (std::size_t q = 0; q < queries_per_trial; ++q) {
        double x = plan == QueryPlan::Uniform
                       ? stream.uniform(dom.lo, dom.hi)
                       : dom.lo + stratum * (static_cast<double>(q) + stream.uniform(0.0, 1.0));
        x = std::min(x, dom.hi);
        double s = sample_time(profile, x, stream);
        if (countermeasure) s += sample_delay(*countermeasure, stream);
        samples[q] = s;
      }
      const auto verdict = distinguish(samples, profiles, countermeasure);
      for (std::size_t k = 0; k < table.kinds.size(); ++k)
        if (table.kinds[k] == verdict.predicted) ++table.confusion[truth][k];
    }
  }
  return table;
}

}  // namespace desync
