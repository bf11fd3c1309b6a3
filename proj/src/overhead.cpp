#include "desync/overhead.hpp"

#include <cmath>

#include "desync/error.hpp"

namespace desync {

void NetworkCostModel::validate() const {
  if (!(mult_time > 0.0) || !std::isfinite(mult_time)) throw ConfigError("mult_time must be positive");
  if (!(add_time > 0.0) || !std::isfinite(add_time)) throw ConfigError("add_time must be positive");
  if (layers.empty()) throw ConfigError("network has no layers");
  for (const auto& l : layers)
    if (l.fan_in == 0 || l.neuron_count == 0) throw ConfigError("fan_in and neuron_count must be >= 1");
}

NetworkCostModel reference_cost_model() { return {1.165e-5, 1.124e-5, {{4096, 1000, "relu"}}}; }

TimeRange reference_unprotected_activation_range() { return {0.21e-4, 5.99e-4}; }

TimeRange reference_protected_activation_range() { return {3.11e-3, 10.01e-3}; }

TimeRange neuron_time_range(const NetworkCostModel& model, std::size_t layer_index,
                            const TimeRange& activation_time_range) {
  if (layer_index >= model.layers.size())
    throw DataError("layer index " + std::to_string(layer_index) + " out of range");
  const double mac = static_cast<double>(model.layers[layer_index].fan_in) * (model.mult_time + model.add_time);
  return {mac + activation_time_range.min, mac + activation_time_range.max};
}

namespace {

void check_ranges(const TimeRange& baseline, const TimeRange& protected_range) {
  if (baseline.min > baseline.max || protected_range.min > protected_range.max)
    throw DataError("time ranges must satisfy min <= max");
  if (!(baseline.min > 0.0)) throw DataError("degenerate cost model: zero baseline time");
}

}  // namespace

OverheadPercent overhead_percent(const TimeRange& baseline, const TimeRange& protected_range) {
  check_ranges(baseline, protected_range);
  return {100.0 * (protected_range.min - baseline.min) / baseline.min,
          100.0 * (protected_range.max - baseline.max) / baseline.max};
}

OverheadPercent overhead_percent_cross(const TimeRange& baseline, const TimeRange& protected_range) {
  check_ranges(baseline, protected_range);
  return {100.0 * (protected_range.min - baseline.max) / baseline.max,
          100.0 * (protected_range.max - baseline.min) / baseline.min};
}

namespace {

const TimeRange& lookup(const RangeTable& table, const std::string& activation, const char* which) {
  if (auto it = table.find(activation); it != table.end()) return it->second;
  if (auto it = table.find("*"); it != table.end()) return it->second;
  throw ConfigError(std::string("no ") + which + " activation range for '" + activation + "'");
}

TimeRange scaled(const TimeRange& r, std::size_t k) {
  return {r.min * static_cast<double>(k), r.max * static_cast<double>(k)};
}

}  // namespace

OverheadReport overhead_report(const NetworkCostModel& model, const RangeTable& unprotected_ranges,
                               const RangeTable& protected_ranges) {
  model.validate();
  OverheadReport report;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto& spec = model.layers[i];
    LayerOverhead l;
    l.fan_in = spec.fan_in;
    l.neuron_count = spec.neuron_count;
    l.activation = spec.activation;
    l.neuron_baseline = neuron_time_range(model, i, lookup(unprotected_ranges, spec.activation, "unprotected"));
    l.neuron_protected = neuron_time_range(model, i, lookup(protected_ranges, spec.activation, "protected"));
    l.layer_baseline = scaled(l.neuron_baseline, spec.neuron_count);
    l.layer_protected = scaled(l.neuron_protected, spec.neuron_count);
    l.overhead = overhead_percent(l.neuron_baseline, l.neuron_protected);
    l.overhead_cross = overhead_percent_cross(l.neuron_baseline, l.neuron_protected);
    report.network_baseline.min += l.layer_baseline.min;
    report.network_baseline.max += l.layer_baseline.max;
    report.network_protected.min += l.layer_protected.min;
    report.network_protected.max += l.layer_protected.max;
    report.layers.push_back(std::move(l));
  }
  report.network_overhead = overhead_percent(report.network_baseline, report.network_protected);
  report.notes = {
      "memory operations are not modelled; real overhead would be lower",
      "layer totals assume neurons are evaluated sequentially",
  };
  return report;
}

}  // namespace desync
