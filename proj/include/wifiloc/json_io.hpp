#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "wifiloc/ap_localize.hpp"
#include "wifiloc/calibrate.hpp"
#include "wifiloc/evalreport.hpp"
#include "wifiloc/robot_localize.hpp"
#include "wifiloc/simulate.hpp"

namespace wifiloc {

using Json = nlohmann::ordered_json;

/// Parse JSON text; syntax errors become ParseError with the line number.
Json parse_json(std::string_view text);

void to_json(Json& j, const LocalPoint3& p);
void from_json(const Json& j, LocalPoint3& p);

void to_json(Json& j, const PropagationParams& p);
void from_json(const Json& j, PropagationParams& p);

void to_json(Json& j, const CalibrationReport& r);

void to_json(Json& j, const ErrorStats& s);
void from_json(const Json& j, ErrorStats& s);

void to_json(Json& j, const ApEstimate& e);
void from_json(const Json& j, ApEstimate& e);

void to_json(Json& j, const ApErrorReport& r);

void to_json(Json& j, const LocalizationResult& r);

void to_json(Json& j, const StorageRow& r);

/// Unknown keys are rejected so typos do not silently fall back to defaults.
ScenarioSpec scenario_from_json(const Json& j);
Json scenario_to_json(const ScenarioSpec& s);

void to_json(Json& j, const TruthLedger& t);
void from_json(const Json& j, TruthLedger& t);

/// AP-localization report: estimates, failures and, with truth, the error table.
Json ap_report_json(const ApBatchResult& batch, const ApErrorReport* errors);
/// Inverse of the estimates part of ap_report_json.
std::vector<ApEstimate> estimates_from_report(const Json& j);

// ---- JSON Lines ----

/// One {"ap_id", "rssi", "t"} object per line; blank lines are skipped.
RssiScan read_scan_jsonl(std::string_view text, double window = 4.0);
std::string write_scan_jsonl(const RssiScan& scan);

/// One {"truth": {x,y,z}, "level", "scan": {ap_id: dBm}, "tag"} per line.
std::vector<TestRecord> read_testset_jsonl(std::string_view text);
std::string write_testset_jsonl(const std::vector<TestRecord>& records);

}  // namespace wifiloc
