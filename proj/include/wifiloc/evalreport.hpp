#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wifiloc/ap_localize.hpp"
#include "wifiloc/metrics.hpp"
#include "wifiloc/osmag.hpp"

namespace wifiloc {

struct ApErrorRow {
  std::string ap_id;
  double initial_error = 0.0;  ///< trilateration estimate vs truth
  double refined_error = 0.0;  ///< final estimate vs truth
  int iteration = 0;
};

struct ApErrorReport {
  std::vector<ApErrorRow> rows;  ///< ascending ap_id
  ErrorStats initial;
  ErrorStats refined;
  double improvement_pct = 0.0;
  /// Set when improvement is not defined (zero initial error).
  std::string note;
  std::vector<std::string> unmatched;  ///< estimates with no truth record
};

/// (initial - refined) / initial in percent; 0 when initial is 0.
double improvement_percent(double initial_mean, double refined_mean);

/// Throws EmptyError("empty_report") when no estimate matches a truth id.
ApErrorReport ap_error_report(std::span<const ApEstimate> estimates,
                              std::span<const ApRecord> truth);

// ---- CSV (RFC 4180: CRLF records, quoted fields with doubled quotes) ----

using CsvRow = std::vector<std::string>;

std::string write_csv(std::span<const CsvRow> rows);
/// Throws ParseError on an unterminated quoted field.
std::vector<CsvRow> parse_csv(std::string_view text);

struct Histogram {
  double bin_width = 1.0;
  std::vector<int> initial;  ///< counts per bin [k*w, (k+1)*w)
  std::vector<int> refined;
};

Histogram make_histogram(const ApErrorReport& report, double bin_width = 1.0);
std::string histogram_csv(const Histogram& h);
Histogram read_histogram_csv(std::string_view text);
std::string histogram_svg(const Histogram& h);

/// Per-AP rows: ap_id, initial_error, refined_error, iteration.
std::string ap_errors_csv(const ApErrorReport& report);

/// One row per method: name, count, misses, mean, std, rmse, p95.
std::string metrics_csv(std::span<const std::pair<std::string, ErrorStats>> rows);

// ---- storage ----

struct NamedMap {
  std::string name;
  const OsmAgMap* map = nullptr;
};

struct StorageRow {
  std::string name;
  std::size_t total_bytes = 0;
  std::size_t fingerprint_count = 0;
  std::size_t fingerprint_bytes = 0;
  std::size_t ap_count = 0;
  std::size_t ap_bytes = 0;
  double bytes_per_fingerprint = 0.0;
  double bytes_per_ap = 0.0;
  double ratio_to_first = 1.0;  ///< total_bytes / first variant's total_bytes
};

std::vector<StorageRow> storage_audit(std::span<const NamedMap> maps);

// ---- SVG ----

struct Marker {
  LocalPoint3 position;
  std::string label;
};

struct SvgOverlay {
  std::vector<Marker> truth;      ///< green
  std::vector<Marker> estimates;  ///< red
  std::vector<Marker> testpoints; ///< grey
  bool show_fingerprints = true;  ///< blue
  std::optional<int> level;       ///< draw one floor only
};

/// Throws DomainError when the map has nothing to draw.
std::string render_svg(const OsmAgMap& map, const SvgOverlay& overlay = {});

}  // namespace wifiloc
