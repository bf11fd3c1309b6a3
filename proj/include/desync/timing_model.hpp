#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "desync/activation.hpp"
#include "desync/rng.hpp"

namespace desync {

/// Half-open input interval [lo, hi). Inside a profile, the interval whose `hi`
/// equals the domain's upper bound also contains that bound.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const noexcept { return hi - lo; }
  bool contains(double x) const noexcept { return x >= lo && x < hi; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Execution-time cluster: every input in `region` takes `mean` seconds, give or
/// take a uniform jitter of at most `spread`.
struct TimingCluster {
  std::vector<Interval> region;
  double mean = 0.0;    // seconds
  double spread = 0.0;  // seconds, half-width
  std::string label;

  double lower() const noexcept { return mean - spread; }
  double upper() const noexcept { return mean + spread; }
  friend bool operator==(const TimingCluster&, const TimingCluster&) = default;
};

class TimingProfile {
 public:
  TimingProfile(std::string kind, std::vector<TimingCluster> clusters,
                Interval domain = {-2.0, 2.0}, std::string id = {}, std::string provenance = {});

  const std::string& kind() const noexcept { return kind_; }
  const std::string& id() const noexcept { return id_; }
  const std::string& provenance() const noexcept { return provenance_; }
  const Interval& domain() const noexcept { return domain_; }
  const std::vector<TimingCluster>& clusters() const noexcept { return clusters_; }

  bool in_domain(double x) const noexcept { return x >= domain_.lo && x <= domain_.hi; }

  /// Index of the cluster owning `x`. Throws DomainError outside the domain.
  std::size_t cluster_index(double x) const;
  const TimingCluster& cluster_for(double x) const { return clusters_[cluster_index(x)]; }

  /// Fraction of the input domain covered by cluster `i`.
  double weight(std::size_t i) const;

  /// Expected duration under uniform inputs over the domain.
  double aggregate_mean() const;
  double aggregate_variance() const;
  double declared_min() const;
  double declared_max() const;

  friend bool operator==(const TimingProfile&, const TimingProfile&) = default;

 private:
  void validate() const;

  std::string kind_;
  std::vector<TimingCluster> clusters_;
  Interval domain_;
  std::string id_;
  std::string provenance_;
};

/// Ordered collection of profiles keyed by kind name. Core activations come
/// first in ReLU, Sigmoid, Tanh order; user-registered kinds follow by name.
class ProfileSet {
 public:
  ProfileSet() = default;
  explicit ProfileSet(std::vector<TimingProfile> profiles);

  void add(TimingProfile profile);
  const TimingProfile& at(std::string_view kind) const;
  const TimingProfile& at(ActivationKind kind) const { return at(to_string(kind)); }
  const TimingProfile* find(std::string_view kind) const noexcept;

  const std::vector<TimingProfile>& profiles() const noexcept { return profiles_; }
  std::size_t size() const noexcept { return profiles_.size(); }
  bool empty() const noexcept { return profiles_.empty(); }
  auto begin() const noexcept { return profiles_.begin(); }
  auto end() const noexcept { return profiles_.end(); }

 private:
  std::vector<TimingProfile> profiles_;
};

/// Ordering rank used for deterministic tie-breaks across kinds.
int kind_rank(std::string_view kind) noexcept;

/// Built-in profiles fitted to the published ReLU/sigmoid/tanh measurements.
ProfileSet builtin_profiles();
inline constexpr std::string_view kBuiltinProfileVersion = "builtin-v1";

/// Input distribution for a campaign.
struct UniformInputs {
  std::optional<Interval> range;  // unset: the profile's domain
};
struct FixedInput {
  double x = 0.0;
};
using InputSampler = std::variant<UniformInputs, FixedInput>;

/// Parses "uniform", "uniform(lo,hi)" or "fixed(x)". Throws ConfigError.
InputSampler parse_sampler(std::string_view text);
std::string describe(const InputSampler& sampler);

struct TraceEntry {
  double input = 0.0;
  double duration = 0.0;  // seconds
  friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

struct TimingTrace {
  std::vector<TraceEntry> entries;
  std::string kind;
  bool is_protected = false;
  std::uint64_t seed = 0;           // capture seed
  std::uint64_t protect_seed = 0;   // meaningful when is_protected
  std::string profile_id;
  std::string campaign;             // sampler description
  std::string countermeasure;       // delay description, empty when unprotected

  std::vector<double> durations() const;
  friend bool operator==(const TimingTrace&, const TimingTrace&) = default;
};

/// One observation: the owning cluster's mean plus uniform jitter in [-spread, spread].
double sample_time(const TimingProfile& profile, double x, Rng& rng);

/// `n` independent observations. Inputs and jitter both come from `rng`.
TimingTrace capture_trace(const TimingProfile& profile, std::size_t n, const InputSampler& sampler,
                          Rng& rng);

struct HostMeasurement {
  double seconds = 0.0;
  bool resolution_warning = false;
};

/// Median wall-clock time of one activation evaluation on this machine. The
/// result depends on the host and is never used by the acceptance checks.
HostMeasurement measure_host_time(ActivationKind kind, double x, std::size_t repetitions);

}  // namespace desync
