#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "desync/rng.hpp"
#include "desync/timing_model.hpp"

namespace desync {

/// Normal random delay added to every activation call. Negative draws are
/// redrawn (never clamped), so the delay law is Normal(mean, variance)
/// truncated to [0, inf).
///
/// `variance == 0` is accepted and means a constant shift by `mean`; with a
/// zero mean as well the distribution is the identity countermeasure.
struct DelayDistribution {
  double mean = 0.0;      // seconds
  double variance = 0.0;  // seconds^2
  std::string label;

  static constexpr int kMaxRedraws = 1000;

  double stddev() const;
  /// Moments of the delay actually added (after truncation at zero).
  double effective_mean() const;
  double effective_variance() const;

  /// Throws ConfigError on negative or non-finite parameters.
  void validate() const;
  std::string describe() const;

  friend bool operator==(const DelayDistribution&, const DelayDistribution&) = default;
};

/// Output of the calibration procedure on the built-in profiles:
/// mean 0.6 ms, variance 1e-5 s^2.
DelayDistribution calibrated_delay();

/// Parameters that reproduce the protected-timing table (means 6.3-6.8 ms,
/// extremes roughly 2.7-10 ms over 2000 calls). The published text chooses a
/// 0.6 ms mean, an order of magnitude below what that table implies.
DelayDistribution table2_regime_delay();

/// One draw. Throws DataError when `kMaxRedraws` consecutive draws are negative.
double sample_delay(const DelayDistribution& dist, Rng& rng);

/// Adds an independent delay to each duration. Throws DataError if `trace`
/// is already protected.
TimingTrace protect_trace(const TimingTrace& trace, const DelayDistribution& dist, Rng& rng);

/// The b with n = a * 10^b and 1/sqrt(10) <= a < sqrt(10). Throws DomainError for n <= 0.
int order_of_magnitude(double n);

/// floor(log10(n)), exact at powers of ten. Throws DomainError for n <= 0.
int scientific_exponent(double n);

/// Smallest d * 10^e >= x with a single digit d, returned as the nearest double.
double round_up_one_significant(double x);

/// 10^e as the correctly rounded double.
double exact_pow10(int e);

struct DurationCluster {
  double center = 0.0;
  std::vector<std::size_t> members;  // indices into the input
};

/// 1-D clustering: split sorted durations at the widest gap while that gap
/// exceeds `kGapFraction` of its segment's range (at most `max_clusters`
/// groups), then refine with Lloyd iterations. Sorted by center ascending.
/// Fully deterministic.
std::vector<DurationCluster> find_clusters(std::span<const double> durations, std::size_t max_clusters);
inline constexpr double kGapFraction = 0.20;
inline constexpr std::size_t kDefaultMaxClusters = 16;

struct CalibrationReport {
  double fastest_mean = 0.0;   // average of the fastest cluster
  double slowest_mean = 0.0;   // average of the slowest cluster
  double delta_t = 0.0;        // max - min over every timing
  int magnitude = 0;           // order_of_magnitude(delta_t)
  int variance_exponent = 0;   // scientific_exponent(delta_t) - 1
  std::size_t cluster_count = 0;
  std::size_t sample_count = 0;
  DelayDistribution result;
  std::string inputs_digest;
  std::vector<std::string> notes;
};

/// Derives delay parameters from pooled unprotected timings (at least 100).
/// mean     = slowest - fastest cluster average, rounded up to one significant digit;
/// variance = 10^(scientific_exponent(delta_t) - 1).
CalibrationReport calibrate(std::span<const double> all_timings,
                            std::size_t max_clusters = kDefaultMaxClusters);

}  // namespace desync
