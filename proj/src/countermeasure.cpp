#include "desync/countermeasure.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "desync/digest.hpp"
#include "desync/error.hpp"
#include "desync/number_format.hpp"

namespace desync {

double DelayDistribution::stddev() const { return std::sqrt(variance); }

double DelayDistribution::effective_mean() const {
  if (variance == 0.0) return mean;
  const double sigma = stddev();
  const double alpha = -mean / sigma;
  const double tail = 0.5 * std::erfc(alpha / std::numbers::sqrt2);  // P(Z > alpha)
  const double pdf = std::exp(-0.5 * alpha * alpha) / std::sqrt(2.0 * std::numbers::pi);
  return mean + sigma * pdf / tail;
}

double DelayDistribution::effective_variance() const {
  if (variance == 0.0) return 0.0;
  const double sigma = stddev();
  const double alpha = -mean / sigma;
  const double tail = 0.5 * std::erfc(alpha / std::numbers::sqrt2);
  const double lambda = std::exp(-0.5 * alpha * alpha) / std::sqrt(2.0 * std::numbers::pi) / tail;
  return variance * (1.0 + alpha * lambda - lambda * lambda);
}

void DelayDistribution::validate() const {
  if (!std::isfinite(mean) || mean < 0.0)
    throw ConfigError("delay mean must be finite and non-negative");
  if (!std::isfinite(variance) || variance < 0.0)
    throw ConfigError("delay variance must be finite and non-negative");
}

std::string DelayDistribution::describe() const {
  std::string s = "normal(mean=" + format_double(mean) + "s,variance=" + format_double(variance) +
                  "s^2,truncation=resample-if-negative)";
  if (!label.empty()) s = label + ":" + s;
  return s;
}

DelayDistribution calibrated_delay() { return {6e-4, 1e-5, "calibrated"}; }

DelayDistribution table2_regime_delay() { return {6.3e-3, 1e-6, "table2-regime"}; }

double sample_delay(const DelayDistribution& dist, Rng& rng) {
  dist.validate();
  if (dist.variance == 0.0) return dist.mean;
  const double sigma = dist.stddev();
  for (int i = 0; i <= DelayDistribution::kMaxRedraws; ++i) {
    const double d = rng.normal(dist.mean, sigma);
    if (d >= 0.0) return d;
  }
  throw DataError("delay distribution misconfigured: " + std::to_string(DelayDistribution::kMaxRedraws) +
                  " consecutive negative draws from " + dist.describe());
}

TimingTrace protect_trace(const TimingTrace& trace, const DelayDistribution& dist, Rng& rng) {
  if (trace.is_protected)
    throw DataError("trace for '" + trace.kind + "' is already protected; delays would compound");
  dist.validate();
  TimingTrace out = trace;
  for (auto& e : out.entries) e.duration += sample_delay(dist, rng);
  out.is_protected = true;
  out.protect_seed = rng.seed();
  out.countermeasure = dist.describe();
  return out;
}

double exact_pow10(int e) {
  // Integral powers of ten up to 1e22 are exact doubles, so one multiply or
  // divide gives the correctly rounded result.
  double p = 1.0;
  for (int i = 0; i < std::min(std::abs(e), 22); ++i) p *= 10.0;
  if (std::abs(e) > 22) return std::pow(10.0, e);
  return e >= 0 ? p : 1.0 / p;
}

int scientific_exponent(double n) {
  if (!(n > 0.0) || !std::isfinite(n)) throw DomainError("order of magnitude needs a positive finite value");
  int e = static_cast<int>(std::floor(std::log10(n)));
  if (exact_pow10(e) > n) --e;
  if (exact_pow10(e + 1) <= n) ++e;
  return e;
}

int order_of_magnitude(double n) {
  if (!(n > 0.0) || !std::isfinite(n)) throw DomainError("order of magnitude needs a positive finite value");
  int b = static_cast<int>(std::floor(std::log10(n) + 0.5));
  // Bracket check on the mantissa, nudging b across the +-0.5 decade edges.
  const double lo = 1.0 / std::sqrt(10.0), hi = std::sqrt(10.0);
  for (int guard = 0; guard < 4; ++guard) {
    const double a = n / exact_pow10(b);
    if (a >= hi) ++b;
    else if (a < lo) --b;
    else break;
  }
  return b;
}

double round_up_one_significant(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("rounding needs a positive finite value");
  int e = scientific_exponent(x);
  // Tolerate representation error so 3e-4 stays 3e-4 rather than becoming 4e-4.
  double digit = std::ceil(x / exact_pow10(e) - 1e-9);
  if (digit >= 10.0) {
    digit = 1.0;
    ++e;
  }
  return e >= 0 ? digit * exact_pow10(e) : digit / exact_pow10(-e);
}

namespace {

struct Segment {
  std::size_t begin;  // into the sorted order
  std::size_t end;
};

}  // namespace

std::vector<DurationCluster> find_clusters(std::span<const double> durations, std::size_t max_clusters) {
  if (durations.empty()) throw DataError("cannot cluster an empty duration list");
  if (max_clusters == 0) throw ConfigError("max_clusters must be at least 1");

  std::vector<std::size_t> order(durations.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return durations[a] < durations[b]; });
  auto value = [&](std::size_t rank) { return durations[order[rank]]; };

  // Gap splitting: repeatedly cut the segment whose widest internal gap is the
  // largest share of that segment's own range.
  std::vector<Segment> segments{{0, order.size()}};
  while (segments.size() < max_clusters) {
    double best_ratio = 0.0;
    std::size_t best_seg = 0, best_cut = 0;
    for (std::size_t s = 0; s < segments.size(); ++s) {
      const auto [b, e] = segments[s];
      const double range = value(e - 1) - value(b);
      if (e - b < 2 || !(range > 0.0)) continue;
      for (std::size_t i = b + 1; i < e; ++i) {
        const double ratio = (value(i) - value(i - 1)) / range;
        if (ratio > best_ratio) {
          best_ratio = ratio;
          best_seg = s;
          best_cut = i;
        }
      }
    }
    if (best_ratio < kGapFraction) break;
    const Segment old = segments[best_seg];
    segments[best_seg] = {old.begin, best_cut};
    segments.insert(segments.begin() + static_cast<std::ptrdiff_t>(best_seg) + 1, {best_cut, old.end});
  }

  // Lloyd refinement. In 1-D with sorted data each cluster is a contiguous run,
  // so assignment reduces to moving boundaries to the midpoints between centers.
  // Offsets from the first member keep constant runs exact.
  auto seg_mean = [&](const Segment& s) {
    const double ref = value(s.begin);
    double sum = 0.0;
    for (std::size_t i = s.begin; i < s.end; ++i) sum += value(i) - ref;
    return ref + sum / static_cast<double>(s.end - s.begin);
  };
  std::vector<double> centers;
  for (const auto& s : segments) centers.push_back(seg_mean(s));
  for (int iter = 0; iter < 100 && centers.size() > 1; ++iter) {
    std::vector<Segment> next;
    std::size_t start = 0;
    for (std::size_t c = 0; c + 1 < centers.size(); ++c) {
      const double boundary = 0.5 * (centers[c] + centers[c + 1]);
      std::size_t stop = start;
      while (stop < order.size() && value(stop) <= boundary) ++stop;
      if (stop > start) next.push_back({start, stop});
      start = stop;
    }
    if (start < order.size()) next.push_back({start, order.size()});

    std::vector<double> next_centers;
    for (const auto& s : next) next_centers.push_back(seg_mean(s));
    const bool stable = next.size() == segments.size() &&
                        std::equal(next.begin(), next.end(), segments.begin(),
                                   [](const Segment& a, const Segment& b) {
                                     return a.begin == b.begin && a.end == b.end;
                                   });
    segments = std::move(next);
    centers = std::move(next_centers);
    if (stable) break;
  }

  std::vector<DurationCluster> out;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    DurationCluster c;
    c.center = centers[s];
    for (std::size_t i = segments[s].begin; i < segments[s].end; ++i) c.members.push_back(order[i]);
    std::sort(c.members.begin(), c.members.end());
    out.push_back(std::move(c));
  }
  return out;
}

CalibrationReport calibrate(std::span<const double> all_timings, std::size_t max_clusters) {
  if (all_timings.size() < 100)
    throw DataError("calibration needs at least 100 pooled timings, got " +
                    std::to_string(all_timings.size()));
  for (double t : all_timings)
    if (!(t > 0.0) || !std::isfinite(t)) throw DataError("calibration timings must be positive and finite");

  const auto clusters = find_clusters(all_timings, max_clusters);
  CalibrationReport r;
  r.sample_count = all_timings.size();
  r.cluster_count = clusters.size();
  r.fastest_mean = clusters.front().center;
  r.slowest_mean = clusters.back().center;
  if (clusters.size() < 2 && r.slowest_mean == r.fastest_mean)
    throw DataError("degenerate calibration data: a single timing cluster leaves nothing to hide");

  const auto [lo, hi] = std::minmax_element(all_timings.begin(), all_timings.end());
  r.delta_t = *hi - *lo;
  if (!(r.delta_t > 0.0)) throw DataError("degenerate calibration data: zero timing range");

  r.magnitude = order_of_magnitude(r.delta_t);
  r.variance_exponent = scientific_exponent(r.delta_t) - 1;
  r.result.mean = round_up_one_significant(r.slowest_mean - r.fastest_mean);
  r.result.variance = exact_pow10(r.variance_exponent);
  r.result.label = "calibrated";
  r.inputs_digest = digest_doubles(all_timings);
  r.notes = {
      "mean = slowest - fastest cluster average, rounded up to one significant digit",
      "the procedure text writes t_f - t_s, which is negative; the positive difference is used",
      "variance = 1e(k-1) s^2 with k the decimal exponent of delta_t; the footnote-style "
      "magnitude is reported separately",
      "negative delay draws are redrawn, not clamped",
  };
  return r;
}

}  // namespace desync
