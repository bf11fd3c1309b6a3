#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "desync/countermeasure.hpp"
#include "desync/rng.hpp"
#include "desync/timing_model.hpp"

namespace desync {

inline constexpr double kTvlaThreshold = 4.5;
// Below this many observations per population a result is flagged as low power.
inline constexpr std::size_t kLowPowerSamples = 100;

struct TvlaResult {
  double t_statistic = 0.0;
  std::size_t n_fixed = 0;
  std::size_t n_random = 0;
  double threshold = kTvlaThreshold;
  bool leaks = false;  // |t| > threshold, strictly
  bool low_power = false;
  std::string label;

  // Campaign provenance; zero/empty for bare welch_t calls.
  std::uint64_t seed = 0;
  std::optional<double> fixed_input;
  std::string aggregate;
  bool is_protected = false;
};

/// Welch's t between two populations with Bessel-corrected variances.
/// Zero pooled variance yields t = 0 for equal means and +-inf (leaking) otherwise.
TvlaResult welch_t(std::span<const double> xs, std::span<const double> ys,
                   double threshold = kTvlaThreshold);

enum class Aggregation {
  PerCall,   // one activation call per observation
  PerLayer,  // sum of `layer_width` calls per observation, one delay per call
};

struct TvlaOptions {
  std::size_t n_per_set = 5000;
  std::optional<double> fixed_input;  // unset: drawn from the domain with the campaign seed
  Aggregation aggregate = Aggregation::PerCall;
  std::size_t layer_width = 1;
  double threshold = kTvlaThreshold;
};

std::string to_string(Aggregation a);
Aggregation parse_aggregation(std::string_view text);

/// Fixed-vs-random campaign. The fixed set repeats one input (per neuron in
/// per-layer mode); the random set draws fresh uniform inputs per execution.
/// When `countermeasure` is given, both sets are protected.
TvlaResult tvla_campaign(const TimingProfile& profile, const std::optional<DelayDistribution>& countermeasure,
                         const TvlaOptions& options, const Rng& rng);

struct DistinguisherVerdict {
  std::string predicted;
  std::vector<std::pair<std::string, double>> scores;  // in tie-break order
  std::size_t n_queries = 0;
  std::string tie_break;
};

/// Mean-distance classifier: picks the candidate whose expected mean (shifted by
/// the hypothesised delay's mean) is closest to the sample mean. Ties go to the
/// candidate that comes first in ReLU < Sigmoid < Tanh < user-kinds-by-name order.
DistinguisherVerdict distinguish(std::span<const double> samples, const ProfileSet& profiles,
                                 const std::optional<DelayDistribution>& protected_hypothesis);

/// How the attacker picks query inputs in a sweep.
enum class QueryPlan {
  Uniform,     // i.i.d. uniform over the domain
  Stratified,  // one uniform draw in each of `queries` equal-width strata (chosen-input attacker)
};

std::string to_string(QueryPlan p);
QueryPlan parse_query_plan(std::string_view text);

struct AccuracyTable {
  std::vector<std::string> kinds;
  std::vector<std::vector<std::size_t>> confusion;  // [truth][predicted]
  std::size_t queries_per_trial = 0;
  std::size_t trials = 0;
  bool is_protected = false;
  QueryPlan plan = QueryPlan::Stratified;
  std::uint64_t seed = 0;

  double accuracy(std::size_t truth) const;
  double overall() const;
};

/// Repeats `distinguish` `trials` times per kind with known ground truth.
AccuracyTable accuracy_sweep(const ProfileSet& profiles, const std::optional<DelayDistribution>& countermeasure,
                             std::size_t queries_per_trial, std::size_t trials, const Rng& rng,
                             QueryPlan plan = QueryPlan::Stratified);

}  // namespace desync
