#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace desync {

struct TimeRange {
  double min = 0.0;  // seconds
  double max = 0.0;
  friend bool operator==(const TimeRange&, const TimeRange&) = default;
};

struct LayerSpec {
  std::size_t fan_in = 1;
  std::size_t neuron_count = 1;
  std::string activation;
};

struct NetworkCostModel {
  double mult_time = 0.0;  // seconds per multiplication
  double add_time = 0.0;   // seconds per addition
  std::vector<LayerSpec> layers;

  void validate() const;  // ConfigError on non-positive costs or empty layers
};

/// Cortex-M4 multiply/add costs with a VGG-19 style dense head: one layer of
/// 1000 output neurons fed by the 4096-wide last hidden layer.
NetworkCostModel reference_cost_model();

/// Measured activation extremes on the target, unprotected and protected.
TimeRange reference_unprotected_activation_range();
TimeRange reference_protected_activation_range();

/// fan_in * (mult + add) + activation time, element-wise over the range.
TimeRange neuron_time_range(const NetworkCostModel& model, std::size_t layer_index,
                            const TimeRange& activation_time_range);

struct OverheadPercent {
  double min = 0.0;
  double max = 0.0;
};

/// Same-end pairing: (protected.min - baseline.min) / baseline.min, likewise for max.
/// Throws DataError for a zero baseline minimum or inverted ranges.
OverheadPercent overhead_percent(const TimeRange& baseline, const TimeRange& protected_range);

/// Extreme pairing: fastest protected against slowest baseline, and slowest
/// protected against fastest baseline. This is the wider bracket.
OverheadPercent overhead_percent_cross(const TimeRange& baseline, const TimeRange& protected_range);

/// Activation ranges keyed by activation name; "*" is the fallback entry.
using RangeTable = std::map<std::string, TimeRange, std::less<>>;

struct LayerOverhead {
  std::size_t fan_in = 0;
  std::size_t neuron_count = 0;
  std::string activation;
  TimeRange neuron_baseline;
  TimeRange neuron_protected;
  TimeRange layer_baseline;  // neurons evaluated one after another
  TimeRange layer_protected;
  OverheadPercent overhead;
  OverheadPercent overhead_cross;
};

struct OverheadReport {
  std::vector<LayerOverhead> layers;
  TimeRange network_baseline;
  TimeRange network_protected;
  OverheadPercent network_overhead;
  std::vector<std::string> notes;
};

OverheadReport overhead_report(const NetworkCostModel& model, const RangeTable& unprotected_ranges,
                               const RangeTable& protected_ranges);

}  // namespace desync
