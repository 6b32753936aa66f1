#include "wifiloc/json_io.hpp"

#include <algorithm>
#include <set>

#include "wifiloc/error.hpp"

namespace wifiloc {

namespace {

long line_of(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<long>(std::count(text.begin(), text.begin() + byte, '\n'));
}

template <typename T>
T field(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw IntegrityError(std::string("missing key '") + key + "'");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw IntegrityError(std::string("bad value for '") + key + "'");
  }
}

template <typename T>
void optional_field(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = field<T>(j, key);
}

}  // namespace

Json parse_json(std::string_view text) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(line_of(text, e.byte == 0 ? 0 : e.byte - 1), e.what());
  }
}

void to_json(Json& j, const LocalPoint3& p) { j = Json{{"x", p.x}, {"y", p.y}, {"z", p.z}}; }

void from_json(const Json& j, LocalPoint3& p) {
  p.x = field<double>(j, "x");
  p.y = field<double>(j, "y");
  p.z = field<double>(j, "z");
}

void to_json(Json& j, const PropagationParams& p) {
  j = Json{{"rssi0", p.rssi0}, {"n", p.n}, {"wall_loss", p.wall_loss}, {"sigma", p.sigma}};
}

void from_json(const Json& j, PropagationParams& p) {
  p.rssi0 = field<double>(j, "rssi0");
  p.n = field<double>(j, "n");
  p.wall_loss = field<double>(j, "wall_loss");
  p.sigma = 0.0;
  optional_field(j, "sigma", p.sigma);
  p.validate();
}

void to_json(Json& j, const CalibrationReport& r) {
  j = Json{{"params", r.params},           {"los_pairs", r.los_pairs},
           {"nlos_pairs", r.nlos_pairs},   {"excluded_near", r.excluded_near},
           {"los_rms", r.los_rms},         {"nlos_rms", r.nlos_rms}};
}

void to_json(Json& j, const ErrorStats& s) {
  j = Json{{"count", s.count}, {"misses", s.misses}, {"mean", s.mean},
           {"std", s.std_dev}, {"rmse", s.rmse},     {"p95", s.p95}};
}

void from_json(const Json& j, ErrorStats& s) {
  s.count = field<int>(j, "count");
  s.misses = field<int>(j, "misses");
  s.mean = field<double>(j, "mean");
  s.std_dev = field<double>(j, "std");
  s.rmse = field<double>(j, "rmse");
  s.p95 = field<double>(j, "p95");
}

void to_json(Json& j, const ApEstimate& e) {
  Json trace = Json::array();
  for (const auto& t : e.trace) {
    trace.push_back(Json{{"position", t.position}, {"mean_wall_count", t.mean_wall_count}});
  }
  j = Json{{"ap_id", e.ap_id},
           {"position", e.position},
           {"iteration", e.iteration},
           {"residual_rms", e.residual_rms},
           {"measurements", e.measurements},
           {"trace", std::move(trace)}};
}

void from_json(const Json& j, ApEstimate& e) {
  e.ap_id = field<std::string>(j, "ap_id");
  e.position = field<LocalPoint3>(j, "position");
  e.iteration = field<int>(j, "iteration");
  e.residual_rms = field<double>(j, "residual_rms");
  e.measurements = field<int>(j, "measurements");
  e.trace.clear();
  for (const auto& t : field<Json>(j, "trace")) {
    e.trace.push_back({field<LocalPoint3>(t, "position"), field<double>(t, "mean_wall_count")});
  }
  if (e.trace.empty()) throw IntegrityError("estimate " + e.ap_id + " has an empty trace");
}

void to_json(Json& j, const ApErrorReport& r) {
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    rows.push_back(Json{{"ap_id", row.ap_id},
                        {"initial_error", row.initial_error},
                        {"refined_error", row.refined_error},
                        {"iteration", row.iteration}});
  }
  j = Json{{"rows", std::move(rows)},
           {"initial", r.initial},
           {"refined", r.refined},
           {"improvement_pct", r.improvement_pct},
           {"unmatched", r.unmatched}};
  if (!r.note.empty()) j["note"] = r.note;
}

void to_json(Json& j, const LocalizationResult& r) {
  Json used = Json::array();
  for (const auto& u : r.used_aps) {
    used.push_back(Json{{"ap_id", u.ap_id}, {"range", u.range}, {"wall_count", u.wall_count}});
  }
  j = Json{{"position", r.position},   {"level", r.level},
           {"iterations", r.iterations}, {"converged", r.converged},
           {"residual_rms", r.residual_rms}, {"step_norms", r.step_norms},
           {"used_aps", std::move(used)}};
}

void to_json(Json& j, const StorageRow& r) {
  j = Json{{"name", r.name},
           {"total_bytes", r.total_bytes},
           {"fingerprint_count", r.fingerprint_count},
           {"fingerprint_bytes", r.fingerprint_bytes},
           {"ap_count", r.ap_count},
           {"ap_bytes", r.ap_bytes},
           {"bytes_per_fingerprint", r.bytes_per_fingerprint},
           {"bytes_per_ap", r.bytes_per_ap},
           {"ratio_to_first", r.ratio_to_first}};
}

ScenarioSpec scenario_from_json(const Json& j) {
  if (!j.is_object()) throw IntegrityError("scenario must be a JSON object");
  static const std::set<std::string> known = {
      "rooms_x",        "rooms_y",        "floors",          "room_size",
      "ap_count",       "surveyed_count", "fingerprint_count", "test_count",
      "params",         "seed",           "holdout_region",  "origin",
      "floor_height",   "ap_height",      "antenna_height",  "ap_wall_margin",
      "fp_wall_margin", "sensitivity_floor"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw IntegrityError("unknown scenario key '" + key + "'");
  }
  ScenarioSpec s;
  optional_field(j, "rooms_x", s.rooms_x);
  optional_field(j, "rooms_y", s.rooms_y);
  optional_field(j, "floors", s.floors);
  optional_field(j, "room_size", s.room_size);
  optional_field(j, "ap_count", s.ap_count);
  optional_field(j, "surveyed_count", s.surveyed_count);
  optional_field(j, "fingerprint_count", s.fingerprint_count);
  optional_field(j, "test_count", s.test_count);
  optional_field(j, "params", s.params);
  optional_field(j, "seed", s.seed);
  optional_field(j, "floor_height", s.floor_height);
  optional_field(j, "ap_height", s.ap_height);
  optional_field(j, "antenna_height", s.antenna_height);
  optional_field(j, "ap_wall_margin", s.ap_wall_margin);
  optional_field(j, "fp_wall_margin", s.fp_wall_margin);
  optional_field(j, "sensitivity_floor", s.sensitivity_floor);
  if (j.contains("origin")) {
    const Json& o = j["origin"];
    s.origin = {field<double>(o, "lat"), field<double>(o, "lon")};
  }
  if (j.contains("holdout_region") && !j["holdout_region"].is_null()) {
    const Json& r = j["holdout_region"];
    HoldoutRegion h;
    h.x_min = field<double>(r, "x_min");
    h.x_max = field<double>(r, "x_max");
    h.y_min = field<double>(r, "y_min");
    h.y_max = field<double>(r, "y_max");
    if (r.contains("level") && !r["level"].is_null()) h.level = field<int>(r, "level");
    s.holdout_region = h;
  }
  s.validate();
  return s;
}

Json scenario_to_json(const ScenarioSpec& s) {
  Json j{{"rooms_x", s.rooms_x},
         {"rooms_y", s.rooms_y},
         {"floors", s.floors},
         {"room_size", s.room_size},
         {"ap_count", s.ap_count},
         {"surveyed_count", s.surveyed_count},
         {"fingerprint_count", s.fingerprint_count},
         {"test_count", s.test_count},
         {"params", s.params},
         {"seed", s.seed},
         {"origin", Json{{"lat", s.origin.lat}, {"lon", s.origin.lon}}},
         {"floor_height", s.floor_height},
         {"ap_height", s.ap_height},
         {"antenna_height", s.antenna_height},
         {"ap_wall_margin", s.ap_wall_margin},
         {"fp_wall_margin", s.fp_wall_margin},
         {"sensitivity_floor", s.sensitivity_floor}};
  if (s.holdout_region) {
    const auto& h = *s.holdout_region;
    Json r{{"x_min", h.x_min}, {"x_max", h.x_max}, {"y_min", h.y_min}, {"y_max", h.y_max}};
    if (h.level) r["level"] = *h.level;
    j["holdout_region"] = std::move(r);
  }
  return j;
}

void to_json(Json& j, const TruthLedger& t) {
  Json aps = Json::array();
  for (const auto& a : t.aps) {
    aps.push_back(Json{{"ap_id", a.ap_id},
                       {"position", a.position},
                       {"level", a.level},
                       {"surveyed", a.surveyed}});
  }
  Json pairs = Json::array();
  for (const auto& p : t.pairs) {
    pairs.push_back(Json{{"ap_id", p.ap_id},
                         {"node_id", p.node_id},
                         {"distance", p.distance},
                         {"wall_count", p.wall_count},
                         {"rssi_clean", p.rssi_clean},
                         {"rssi", p.rssi},
                         {"kept", p.kept}});
  }
  j = Json{{"params", t.params}, {"aps", std::move(aps)}, {"pairs", std::move(pairs)}};
}

void from_json(const Json& j, TruthLedger& t) {
  t.params = field<PropagationParams>(j, "params");
  t.aps.clear();
  for (const auto& a : field<Json>(j, "aps")) {
    t.aps.push_back({field<std::string>(a, "ap_id"), field<LocalPoint3>(a, "position"),
                     field<int>(a, "level"), field<bool>(a, "surveyed")});
  }
  t.pairs.clear();
  for (const auto& p : field<Json>(j, "pairs")) {
    t.pairs.push_back({field<std::string>(p, "ap_id"), field<std::int64_t>(p, "node_id"),
                       field<double>(p, "distance"), field<int>(p, "wall_count"),
                       field<double>(p, "rssi_clean"), field<double>(p, "rssi"),
                       field<bool>(p, "kept")});
  }
}

Json ap_report_json(const ApBatchResult& batch, const ApErrorReport* errors) {
  Json failures = Json::array();
  for (const auto& f : batch.failures) {
    failures.push_back(Json{{"ap_id", f.ap_id}, {"code", f.code}, {"message", f.message}});
  }
  Json j{{"estimates", batch.estimates}, {"failures", std::move(failures)}};
  if (errors) j["errors"] = *errors;
  return j;
}

std::vector<ApEstimate> estimates_from_report(const Json& j) {
  std::vector<ApEstimate> out;
  for (const auto& e : field<Json>(j, "estimates")) out.push_back(e.get<ApEstimate>());
  return out;
}

namespace {

template <typename Fn>
void for_each_jsonl(std::string_view text, Fn&& fn) {
  long line = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view ln = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    ++line;
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    if (!ln.empty() && ln.back() == '\r') ln.remove_suffix(1);
    if (ln.find_first_not_of(" \t") == std::string_view::npos) continue;
    Json j;
    try {
      j = Json::parse(ln.begin(), ln.end());
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(line, e.what());
    }
    try {
      fn(j);
    } catch (const Error& e) {
      throw ParseError(line, e.what());
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line, e.what());
    }
  }
}

}  // namespace

RssiScan read_scan_jsonl(std::string_view text, double window) {
  RssiScan scan;
  scan.window = window;
  for_each_jsonl(text, [&](const Json& j) {
    scan.readings.push_back(
        {field<std::string>(j, "ap_id"), field<double>(j, "rssi"), field<double>(j, "t")});
  });
  return scan;
}

std::string write_scan_jsonl(const RssiScan& scan) {
  std::string out;
  for (const auto& r : scan.readings) {
    out += Json{{"ap_id", r.ap_id}, {"rssi", r.rssi}, {"t", r.t}}.dump();
    out += '\n';
  }
  return out;
}

std::vector<TestRecord> read_testset_jsonl(std::string_view text) {
  std::vector<TestRecord> out;
  for_each_jsonl(text, [&](const Json& j) {
    TestRecord r;
    r.truth = field<LocalPoint3>(j, "truth");
    r.level = field<int>(j, "level");
    r.scan = field<ScanMap>(j, "scan");
    optional_field(j, "tag", r.tag);
    out.push_back(std::move(r));
  });
  return out;
}

std::string write_testset_jsonl(const std::vector<TestRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    Json scan = Json::object();
    for (const auto& [id, dbm] : r.scan) scan[id] = dbm;
    out += Json{{"truth", r.truth}, {"level", r.level}, {"scan", std::move(scan)}, {"tag", r.tag}}
               .dump();
    out += '\n';
  }
  return out;
}

}  // namespace wifiloc
