#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wifiloc/geometry.hpp"

namespace wifiloc {

using TagMap = std::map<std::string, std::string>;

// WiFi tag schema.
namespace tags {
inline constexpr std::string_view kFingerprint = "wifi:fingerprint";
inline constexpr std::string_view kRssiPrefix = "wifi:rssi:";
inline constexpr std::string_view kTimestamp = "wifi:timestamp";
inline constexpr std::string_view kAp = "wifi:ap";
inline constexpr std::string_view kBssid = "wifi:bssid";
inline constexpr std::string_view kApSource = "wifi:ap:source";
inline constexpr std::string_view kHeight = "height";
inline constexpr std::string_view kLevel = "level";
inline constexpr std::string_view kOsmAgType = "osmAG:type";
inline constexpr std::string_view kOsmAgAreaType = "osmAG:areaType";
}  // namespace tags

struct OsmNode {
  std::int64_t id = 0;
  GeoPoint geo;
  TagMap tags;
  /// XML attributes other than id/lat/lon (version, action, ...).
  TagMap attrs;

  friend bool operator==(const OsmNode&, const OsmNode&) = default;
};

struct OsmWay {
  std::int64_t id = 0;
  std::vector<std::int64_t> node_refs;
  TagMap tags;
  TagMap attrs;

  bool closed() const { return node_refs.size() >= 2 && node_refs.front() == node_refs.back(); }
  friend bool operator==(const OsmWay&, const OsmWay&) = default;
};

struct Fingerprint {
  std::int64_t node_id = 0;
  GeoPoint geo;
  LocalPoint3 position;
  int level = 0;
  /// AP identifier -> time-averaged dBm.
  std::map<std::string, double> rssi;
  std::optional<double> timestamp;
  /// Tags outside the WiFi schema, kept verbatim.
  TagMap extra_tags;

  friend bool operator==(const Fingerprint&, const Fingerprint&) = default;
};

enum class ApSource { kEstimated, kSurveyed };

std::string_view to_string(ApSource s);
std::optional<ApSource> ap_source_from_string(std::string_view s);

struct ApRecord {
  std::string ap_id;
  LocalPoint3 position;
  int level = 0;
  ApSource source = ApSource::kEstimated;
  TagMap tags;
  /// Backing node; 0 means "allocate on upsert".
  std::int64_t node_id = 0;
  GeoPoint geo;

  friend bool operator==(const ApRecord&, const ApRecord&) = default;
};

struct ParseOptions {
  double floor_height = kDefaultFloorHeight;
};

/// An osmAG map. Geometry nodes live in `nodes`; nodes carrying the WiFi
/// schema are lifted into `fingerprints` and `aps` and regenerated on output.
struct OsmAgMap {
  GeoPoint origin;
  double floor_height = kDefaultFloorHeight;
  std::map<std::int64_t, OsmNode> nodes;
  std::map<std::int64_t, OsmWay> ways;
  std::vector<Fingerprint> fingerprints;
  std::vector<ApRecord> aps;

  const ApRecord* find_ap(std::string_view ap_id) const;
  /// Largest element id in use (nodes, ways, WiFi nodes), or 0.
  std::int64_t max_id() const;

  /// Local position of a geometry node.
  LocalPoint3 local(const OsmNode& n, int level = 0) const;

  /// Round a local point through the serialized lat/lon precision so that it
  /// is exactly what a reparse would produce. z is untouched.
  std::pair<GeoPoint, LocalPoint3> snap(const LocalPoint3& p) const;

  /// Add a fingerprint at (snapped) `position`. Returns the stored record.
  const Fingerprint& add_fingerprint(const LocalPoint3& position, int level,
                                     std::map<std::string, double> rssi,
                                     std::optional<double> timestamp = std::nullopt);

  /// Every level referenced by an area way, fingerprint or AP, ascending.
  std::vector<int> levels() const;

  /// Throws IntegrityError / SchemaError on the first violated invariant.
  void validate() const;

  friend bool operator==(const OsmAgMap&, const OsmAgMap&) = default;
};

/// Round degrees to the 9 decimal places written by serialize_map.
double quantize_degrees(double deg);

OsmAgMap parse_map(std::string_view xml_text, const ParseOptions& opts = {});
std::string serialize_map(const OsmAgMap& map);

/// Serialized size in bytes of one WiFi node, as written by serialize_map.
std::size_t serialized_size(const Fingerprint& fp);
std::size_t serialized_size(const ApRecord& ap);

/// Insert or replace the record for `ap.ap_id`, keeping the backing node id
/// of a replaced record. The position is snapped to serialized precision.
void upsert_ap(OsmAgMap& map, ApRecord ap);

bool is_area_way(const OsmWay& way);
bool is_passage_way(const OsmWay& way);
/// Level tag of a way (0 when absent or malformed).
int way_level(const OsmWay& way);

/// Deduplicated polygon edges of the area ways on `level`; edges matching a
/// passage way within `merge_eps` are left out.
std::vector<WallSegment> wall_segments(const OsmAgMap& map, int level, double merge_eps = 0.05);
/// wall_segments() concatenated over every level of the map.
std::vector<WallSegment> all_wall_segments(const OsmAgMap& map, double merge_eps = 0.05);

}  // namespace wifiloc
