// wifiloc: simulate -> calibrate -> locate-aps -> localize/eval -> report.

#include <cmath>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "wifiloc/error.hpp"
#include "wifiloc/fingerprint.hpp"
#include "wifiloc/json_io.hpp"
#include "wifiloc/numfmt.hpp"
#include "wifiloc/parallel.hpp"

using namespace wifiloc;

namespace {

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::kData, "io_error", what) {}
};

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::kUsage: return 1;
    case ErrorKind::kData: return 2;
    case ErrorKind::kNumerical: return 3;
  }
  return 2;
}

void report_error(const std::string& code, const std::string& message, int exit, Json extra = {}) {
  Json e{{"code", code}, {"message", message}, {"exit_code", exit}};
  if (extra.is_object()) {
    for (auto& [k, v] : extra.items()) e[k] = v;
  }
  std::cerr << Json{{"error", e}}.dump() << "\n";
}

std::string read_file(const std::string& path) {
  if (path == "-") {
    return std::string(std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << content)) throw IoError("cannot write " + path);
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

OsmAgMap load_map(const std::string& path) { return parse_map(read_file(path)); }

PropagationParams resolve_params(const std::string& path, const OsmAgMap& map) {
  if (!path.empty()) return parse_json(read_file(path)).get<PropagationParams>();
  if (auto p = load_params(map)) return *p;
  throw IntegrityError("no --params given and the map carries no model parameters");
}

unsigned resolve_jobs(int jobs) {
  if (jobs > 0) return static_cast<unsigned>(jobs);
  return std::max(1u, std::thread::hardware_concurrency());
}

// ---- simulate ----

struct SimulateArgs {
  std::string spec;
  std::string out;
  std::string truth;
  std::string testset;
  std::optional<std::uint64_t> seed;
};

int run_simulate(const SimulateArgs& a) {
  ScenarioSpec spec = scenario_from_json(parse_json(read_file(a.spec)));
  if (a.seed) spec.seed = *a.seed;
  Scenario sc = generate(spec);
  std::vector<TestRecord> tests = sc.testset;
  if (spec.holdout_region) {
    HoldoutSplit split = holdout_split(sc.map, *spec.holdout_region);
    sc.map = std::move(split.training);
    tests.insert(tests.end(), split.test.begin(), split.test.end());
  }
  write_file(a.out, serialize_map(sc.map));
  if (!a.truth.empty()) write_file(a.truth, dump(Json(sc.truth)));
  if (!a.testset.empty()) write_file(a.testset, write_testset_jsonl(tests));
  return 0;
}

// ---- calibrate ----

struct CalibrateArgs {
  std::string map;
  std::vector<std::string> surveyed;
  std::optional<int> train_level;
  std::string out;
  std::string report;
  int min_los = 10;
  int min_nlos = 10;
};

int run_calibrate(const CalibrateArgs& a) {
  OsmAgMap map = load_map(a.map);
  CalibrationInput in;
  if (a.surveyed.empty()) {
    for (const auto& ap : map.aps) {
      if (ap.source == ApSource::kSurveyed) in.aps.push_back(ap);
    }
  } else {
    for (const auto& id : a.surveyed) {
      const ApRecord* ap = map.find_ap(id);
      if (!ap) throw IntegrityError("surveyed AP " + id + " is not in the map");
      in.aps.push_back(*ap);
    }
  }
  if (in.aps.empty()) throw InsufficientPairsError("surveyed_aps", "no surveyed APs to calibrate on");
  for (const auto& fp : map.fingerprints) {
    if (!a.train_level || fp.level == *a.train_level) in.fingerprints.push_back(fp);
  }
  in.walls = all_wall_segments(map);
  in.geometry.floor_height = map.floor_height;
  CalibrationOptions opts;
  opts.min_los_pairs = a.min_los;
  opts.min_nlos_pairs = a.min_nlos;
  const CalibrationReport rep = calibrate_report(in, opts);
  write_file(a.out, dump(Json(rep.params)));
  if (!a.report.empty()) write_file(a.report, dump(Json(rep)));
  return 0;
}

// ---- locate-aps ----

struct LocateArgs {
  std::string map;
  std::string params;
  int iters = 10;
  double early_exit = 0.0;
  std::string out;
  std::string report;
  std::string truth;
  std::string hist;
  std::string hist_svg;
  double bin_width = 1.0;
  std::string initial_weighting = "inverse-square";
  std::string weighting = "log-ratio";
  double hypothesis_step = 1.0;
  int jobs = 0;
};

RangeWeighting weighting_from_name(const std::string& name) {
  if (name == "uniform") return RangeWeighting::kUniform;
  if (name == "inverse-square") return RangeWeighting::kInverseSquare;
  return RangeWeighting::kLogRatio;
}

int run_locate(const LocateArgs& a) {
  OsmAgMap map = load_map(a.map);
  const PropagationParams params = resolve_params(a.params, map);
  std::vector<ApRecord> truth;
  if (!a.truth.empty()) {
    const TruthLedger ledger = parse_json(read_file(a.truth)).get<TruthLedger>();
    for (const auto& t : ledger.aps) {
      ApRecord r;
      r.ap_id = t.ap_id;
      r.position = t.position;
      r.level = t.level;
      r.source = ApSource::kSurveyed;
      truth.push_back(std::move(r));
    }
  } else {
    for (const auto& ap : map.aps) {
      if (ap.source == ApSource::kSurveyed) truth.push_back(ap);
    }
  }

  ApLocalizeOptions opts;
  if (a.iters < 0) throw DomainError("--iters must be >= 0");
  opts.iters = a.iters;
  opts.early_exit = a.early_exit;
  opts.refine.initial_weighting = weighting_from_name(a.initial_weighting);
  opts.refine.weighting = weighting_from_name(a.weighting);
  opts.refine.hypothesis_step = a.hypothesis_step;
  opts.geometry.floor_height = map.floor_height;
  opts.jobs = resolve_jobs(a.jobs);
  const ApBatchResult batch = localize_all_aps(map, params, opts);
  if (batch.estimates.empty()) throw EmptyError("no_estimates", "no AP could be localized");
  store_params(map, params);
  if (!a.out.empty()) write_file(a.out, serialize_map(map));

  std::optional<ApErrorReport> errors;
  if (!truth.empty()) {
    try {
      errors = ap_error_report(batch.estimates, truth);
    } catch (const EmptyError&) {
      if (!a.truth.empty()) throw;
    }
  }
  if (!a.report.empty()) write_file(a.report, dump(ap_report_json(batch, errors ? &*errors : nullptr)));
  if ((!a.hist.empty() || !a.hist_svg.empty()) && !errors) {
    throw EmptyError("empty_report", "histogram needs truth positions");
  }
  if (errors) {
    const Histogram h = make_histogram(*errors, a.bin_width);
    if (!a.hist.empty()) write_file(a.hist, histogram_csv(h));
    if (!a.hist_svg.empty()) write_file(a.hist_svg, histogram_svg(h));
  }
  return 0;
}

// ---- localize / fingerprint-knn ----

struct ScanArgs {
  std::string map;
  std::string params;
  std::string scan;
  std::string out;
  double window = 4.0;
  int min_samples = 1;
  double epsilon = 0.1;
  int max_iters = 10;
  bool no_walls = false;
  int k = 4;
};

ScanMap load_scan(const ScanArgs& a) {
  return average_scan(read_scan_jsonl(read_file(a.scan), a.window), a.min_samples);
}

int run_localize(const ScanArgs& a) {
  const OsmAgMap map = load_map(a.map);
  const PropagationParams params = resolve_params(a.params, map);
  RobotLocalizeOptions opts;
  opts.epsilon = a.epsilon;
  opts.max_iters = a.max_iters;
  opts.refine.compensate = !a.no_walls;
  const LocalizationResult r = localize_robot(load_scan(a), map, params, opts);
  write_file(a.out, dump(Json(r)));
  return 0;
}

int run_knn(const ScanArgs& a) {
  const OsmAgMap map = load_map(a.map);
  KnnOptions opts;
  opts.k = a.k;
  const LocalizationResult r = knn_localize(build_index(map), load_scan(a), opts);
  write_file(a.out, dump(Json(r)));
  return 0;
}

// ---- eval ----

struct EvalArgs {
  std::string map;
  std::string params;
  std::string testset;
  std::string method = "model";
  std::string out;
  std::string csv;
  int k = 4;
  double epsilon = 0.1;
  int jobs = 0;
};

int run_eval(const EvalArgs& a) {
  const OsmAgMap map = load_map(a.map);
  const std::vector<TestRecord> tests = read_testset_jsonl(read_file(a.testset));
  if (tests.empty()) throw EmptyError("empty_testset", "test set has no records");
  EvaluationResult res;
  const unsigned jobs = resolve_jobs(a.jobs);
  if (a.method == "model") {
    RobotLocalizeOptions opts;
    opts.epsilon = a.epsilon;
    const RobotLocalizer loc(map, resolve_params(a.params, map), opts);
    res = evaluate(tests, [&loc](const ScanMap& s) { return loc.localize(s); }, jobs);
  } else {
    const FingerprintIndex index = build_index(map);
    KnnOptions opts;
    opts.k = a.k;
    res = evaluate(tests, [&](const ScanMap& s) { return knn_localize(index, s, opts); }, jobs);
  }
  Json errs = Json::array();
  for (double e : res.errors) errs.push_back(std::isnan(e) ? Json(nullptr) : Json(e));
  write_file(a.out, dump(Json{{"method", a.method}, {"stats", res.stats}, {"errors", errs}}));
  if (!a.csv.empty()) {
    std::vector<CsvRow> rows{{"index", "tag", "level", "error"}};
    for (std::size_t i = 0; i < tests.size(); ++i) {
      rows.push_back({std::to_string(i), tests[i].tag, std::to_string(tests[i].level),
                      std::isnan(res.errors[i]) ? "" : format_number(res.errors[i])});
    }
    write_file(a.csv, write_csv(rows));
  }
  return 0;
}

// ---- audit / render ----

struct AuditArgs {
  std::vector<std::string> maps;
  std::string out;
};

int run_audit(const AuditArgs& a) {
  std::vector<OsmAgMap> maps;
  maps.reserve(a.maps.size());
  for (const auto& p : a.maps) maps.push_back(load_map(p));
  std::vector<NamedMap> named;
  for (std::size_t i = 0; i < maps.size(); ++i) named.push_back({a.maps[i], &maps[i]});
  write_file(a.out, dump(Json{{"maps", storage_audit(named)}}));
  return 0;
}

struct RenderArgs {
  std::string map;
  std::string overlay;
  std::string truth;
  std::string testset;
  std::string out;
  std::optional<int> level;
  bool no_fingerprints = false;
};

int run_render(const RenderArgs& a) {
  const OsmAgMap map = load_map(a.map);
  SvgOverlay ov;
  ov.level = a.level;
  ov.show_fingerprints = !a.no_fingerprints;
  if (!a.overlay.empty()) {
    for (const auto& e : estimates_from_report(parse_json(read_file(a.overlay)))) {
      ov.estimates.push_back({e.position, e.ap_id});
    }
  }
  if (!a.truth.empty()) {
    for (const auto& t : parse_json(read_file(a.truth)).get<TruthLedger>().aps) {
      ov.truth.push_back({t.position, t.ap_id});
    }
  } else {
    for (const auto& ap : map.aps) {
      if (ap.source == ApSource::kSurveyed) ov.truth.push_back({ap.position, ap.ap_id});
    }
  }
  if (!a.testset.empty()) {
    for (const auto& t : read_testset_jsonl(read_file(a.testset))) {
      ov.testpoints.push_back({t.truth, t.tag});
    }
  }
  write_file(a.out, render_svg(map, ov));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"WiFi AP and robot localization on osmAG maps"};
  app.require_subcommand(1);
  std::function<int()> action;

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Generate a synthetic scenario");
  s->add_option("--spec", sim.spec, "Scenario JSON")->required();
  s->add_option("--out", sim.out, "Output osmAG map")->required();
  s->add_option("--truth", sim.truth, "Truth ledger JSON");
  s->add_option("--testset", sim.testset, "Test set JSON Lines");
  s->add_option("--seed", sim.seed, "Override the scenario seed");
  s->callback([&] { action = [&] { return run_simulate(sim); }; });

  CalibrateArgs cal;
  auto* c = app.add_subcommand("calibrate", "Fit propagation parameters on surveyed APs");
  c->add_option("--map", cal.map, "Input osmAG map")->required();
  c->add_option("--surveyed-aps", cal.surveyed, "AP ids to train on (default: surveyed records)");
  c->add_option("--train-level", cal.train_level, "Use fingerprints of this level only");
  c->add_option("--out", cal.out, "Parameters JSON")->required();
  c->add_option("--report", cal.report, "Calibration report JSON");
  c->add_option("--min-los", cal.min_los, "Minimum LOS pairs")->capture_default_str();
  c->add_option("--min-nlos", cal.min_nlos, "Minimum NLOS pairs")->capture_default_str();
  c->callback([&] { action = [&] { return run_calibrate(cal); }; });

  LocateArgs loc;
  auto* l = app.add_subcommand("locate-aps", "Estimate AP positions from fingerprints");
  l->add_option("--map", loc.map, "Input osmAG map")->required();
  l->add_option("--params", loc.params, "Parameters JSON (default: from the map)");
  l->add_option("--iters", loc.iters, "Refinement rounds")->capture_default_str();
  l->add_option("--early-exit", loc.early_exit, "Stop when a round moves less (m); 0 = off");
  l->add_option("--out", loc.out, "Augmented osmAG map");
  l->add_option("--report", loc.report, "AP report JSON");
  l->add_option("--truth", loc.truth, "Truth ledger for error statistics");
  l->add_option("--hist", loc.hist, "Error histogram CSV");
  l->add_option("--hist-svg", loc.hist_svg, "Error histogram SVG");
  l->add_option("--bin-width", loc.bin_width, "Histogram bin width (m)")->capture_default_str();
  l->add_option("--initial-weighting", loc.initial_weighting,
                 "Weights of the first solve: uniform, inverse-square or log-ratio")
      ->check(CLI::IsMember({"uniform", "inverse-square", "log-ratio"}))
      ->capture_default_str();
  l->add_option("--weighting", loc.weighting,
                 "Weights of refinement rounds: uniform, inverse-square or log-ratio")
      ->check(CLI::IsMember({"uniform", "inverse-square", "log-ratio"}))
      ->capture_default_str();
  l->add_option("--hypothesis-step", loc.hypothesis_step,
                 "Wall-count hypothesis spacing (m); 0 = previous estimate only")
      ->capture_default_str();
  l->add_option("--jobs", loc.jobs, "Worker threads; 0 = all cores")->capture_default_str();
  l->callback([&] { action = [&] { return run_locate(loc); }; });

  ScanArgs lz;
  auto* z = app.add_subcommand("localize", "Localize one scan against AP positions");
  z->add_option("--map", lz.map, "AP-augmented osmAG map")->required();
  z->add_option("--params", lz.params, "Parameters JSON (default: from the map)");
  z->add_option("--scan", lz.scan, "Scan JSON Lines, - for stdin")->required();
  z->add_option("--out", lz.out, "Result JSON (default: stdout)");
  z->add_option("--epsilon", lz.epsilon, "Convergence step (m)")->capture_default_str();
  z->add_option("--max-iters", lz.max_iters, "Refinement budget")->capture_default_str();
  z->add_option("--window", lz.window, "Averaging window (s)")->capture_default_str();
  z->add_option("--min-samples", lz.min_samples, "Readings per AP")->capture_default_str();
  z->add_flag("--no-wall-compensation", lz.no_walls, "Plain iterated trilateration");
  z->callback([&] { action = [&] { return run_localize(lz); }; });

  ScanArgs kn;
  auto* k = app.add_subcommand("fingerprint-knn", "KNN fingerprint baseline for one scan");
  k->add_option("--map", kn.map, "osmAG map with fingerprints")->required();
  k->add_option("--scan", kn.scan, "Scan JSON Lines, - for stdin")->required();
  k->add_option("--out", kn.out, "Result JSON (default: stdout)");
  k->add_option("--k", kn.k, "Neighbours")->capture_default_str();
  k->add_option("--window", kn.window, "Averaging window (s)")->capture_default_str();
  k->add_option("--min-samples", kn.min_samples, "Readings per AP")->capture_default_str();
  k->callback([&] { action = [&] { return run_knn(kn); }; });

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Error statistics over a test set");
  e->add_option("--map", ev.map, "osmAG map")->required();
  e->add_option("--params", ev.params, "Parameters JSON (model method)");
  e->add_option("--testset", ev.testset, "Test set JSON Lines")->required();
  e->add_option("--method", ev.method, "model or knn")
      ->check(CLI::IsMember({"model", "knn"}))
      ->capture_default_str();
  e->add_option("--out", ev.out, "Metrics JSON (default: stdout)");
  e->add_option("--csv", ev.csv, "Per-record errors CSV");
  e->add_option("--k", ev.k, "KNN neighbours")->capture_default_str();
  e->add_option("--epsilon", ev.epsilon, "Model convergence step (m)")->capture_default_str();
  e->add_option("--jobs", ev.jobs, "Worker threads; 0 = all cores")->capture_default_str();
  e->callback([&] { action = [&] { return run_eval(ev); }; });

  AuditArgs au;
  auto* u = app.add_subcommand("audit", "Serialized size breakdown of maps");
  u->add_option("--maps", au.maps, "osmAG maps")->required();
  u->add_option("--out", au.out, "Audit JSON (default: stdout)");
  u->callback([&] { action = [&] { return run_audit(au); }; });

  RenderArgs rd;
  auto* r = app.add_subcommand("render", "SVG of a map with overlays");
  r->add_option("--map", rd.map, "osmAG map")->required();
  r->add_option("--overlay", rd.overlay, "AP report JSON (estimates)");
  r->add_option("--truth", rd.truth, "Truth ledger JSON");
  r->add_option("--testset", rd.testset, "Test set JSON Lines");
  r->add_option("--level", rd.level, "Draw one level only");
  r->add_flag("--no-fingerprints", rd.no_fingerprints, "Hide fingerprints");
  r->add_option("--out", rd.out, "SVG file (default: stdout)");
  r->callback([&] { action = [&] { return run_render(rd); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& h) {
    return app.exit(h);
  } catch (const CLI::CallForAllHelp& h) {
    return app.exit(h);
  } catch (const CLI::ParseError& pe) {
    report_error("usage", pe.what(), 1);
    return 1;
  }

  try {
    return action();
  } catch (const InsufficientAnchorsError& err) {
    const int code = exit_code(err.kind());
    report_error(err.code(), err.what(), code, Json{{"unknown_ap_ids", err.unknown_ap_ids()}});
    return code;
  } catch (const InsufficientPairsError& err) {
    const int code = exit_code(err.kind());
    report_error(err.code(), err.what(), code, Json{{"pair_class", err.pair_class()}});
    return code;
  } catch (const ParseError& err) {
    report_error(err.code(), err.what(), 2, Json{{"line", err.line()}});
    return 2;
  } catch (const Error& err) {
    const int code = exit_code(err.kind());
    report_error(err.code(), err.what(), code);
    return code;
  } catch (const nlohmann::json::exception& err) {
    report_error("json_error", err.what(), 2);
    return 2;
  }
}
