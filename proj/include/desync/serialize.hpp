#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "desync/countermeasure.hpp"
#include "desync/leakage.hpp"
#include "desync/overhead.hpp"
#include "desync/timing_model.hpp"

namespace desync {

using json = nlohmann::json;

inline constexpr int kProfileSchemaVersion = 1;
inline constexpr int kTraceSchemaVersion = 1;

// Profile calibration file: {"schema_version", "profiles": [ {kind, id, domain,
// provenance, clusters: [{label, region: [[lo,hi],...], mean_s, spread_s}]} ]}.
json profile_to_json(const TimingProfile& p);
TimingProfile profile_from_json(const json& j);
json profiles_to_json(const ProfileSet& set);
ProfileSet profiles_from_json(const json& j);

DelayDistribution delay_from_json(const json& j);
json delay_to_json(const DelayDistribution& d);

json to_json(const CalibrationReport& r);
json to_json(const TvlaResult& r);
json to_json(const DistinguisherVerdict& v);
json to_json(const AccuracyTable& t);
json to_json(const TimeRange& r);
json to_json(const OverheadReport& r);

NetworkCostModel network_from_json(const json& j);
json network_to_json(const NetworkCostModel& m);

/// Trace CSV (header `input,duration_s`, shortest round-trip numbers).
std::string trace_csv(const TimingTrace& t);
json trace_metadata(const TimingTrace& t);

/// Sidecar path for a trace CSV: "x.csv" -> "x.meta.json".
std::filesystem::path sidecar_path(const std::filesystem::path& csv);

/// Writes CSV and sidecar atomically.
void save_trace(const TimingTrace& t, const std::filesystem::path& csv);
/// Reads a CSV and, when present, its sidecar. Without a sidecar the kind is
/// taken from the file stem and the trace is treated as unprotected.
TimingTrace load_trace(const std::filesystem::path& csv);

/// Temp-file-plus-rename write. Throws IoError with the path in the message.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);
json read_json_file(const std::filesystem::path& path);

/// Canonical document text: sorted keys, two-space indent, trailing newline.
std::string dump(const json& j);

}  // namespace desync
