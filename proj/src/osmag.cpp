#include "wifiloc/osmag.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "wifiloc/error.hpp"
#include "wifiloc/numfmt.hpp"

namespace wifiloc {

namespace pt = boost::property_tree;

namespace {

std::string escape_xml(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string format_degrees(double deg) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.9f", deg);
  return buf;
}

bool has_tag(const TagMap& t, std::string_view k, std::string_view v) {
  auto it = t.find(std::string(k));
  return it != t.end() && it->second == v;
}

void write_tags(std::string& out, const TagMap& t) {
  for (const auto& [k, v] : t) {
    out += "    <tag k='";
    out += escape_xml(k);
    out += "' v='";
    out += escape_xml(v);
    out += "'/>\n";
  }
}

void write_node(std::string& out, std::int64_t id, const GeoPoint& geo, const TagMap& attrs,
                const TagMap& t) {
  out += "  <node id='" + std::to_string(id) + "' lat='" + format_degrees(geo.lat) + "' lon='" +
         format_degrees(geo.lon) + "'";
  for (const auto& [k, v] : attrs) out += " " + k + "='" + escape_xml(v) + "'";
  if (t.empty()) {
    out += "/>\n";
    return;
  }
  out += ">\n";
  write_tags(out, t);
  out += "  </node>\n";
}

TagMap fingerprint_tags(const Fingerprint& fp) {
  TagMap t = fp.extra_tags;
  t[std::string(tags::kFingerprint)] = "yes";
  t[std::string(tags::kLevel)] = std::to_string(fp.level);
  t[std::string(tags::kHeight)] = format_number(fp.position.z);
  for (const auto& [ap, dbm] : fp.rssi) t[std::string(tags::kRssiPrefix) + ap] = format_number(dbm);
  if (fp.timestamp) t[std::string(tags::kTimestamp)] = format_number(*fp.timestamp);
  return t;
}

TagMap ap_tags(const ApRecord& ap) {
  TagMap t = ap.tags;
  t[std::string(tags::kAp)] = "yes";
  t[std::string(tags::kBssid)] = ap.ap_id;
  t[std::string(tags::kApSource)] = std::string(to_string(ap.source));
  t[std::string(tags::kLevel)] = std::to_string(ap.level);
  t[std::string(tags::kHeight)] = format_number(ap.position.z);
  return t;
}

std::int64_t require_id(const pt::ptree& attrs, const char* what) {
  auto v = attrs.get_optional<std::string>("id");
  if (!v) throw IntegrityError(std::string(what) + " without id attribute");
  auto id = parse_int(*v);
  if (!id) throw IntegrityError(std::string(what) + " has malformed id '" + *v + "'");
  return *id;
}

TagMap read_tags(const pt::ptree& elem) {
  TagMap t;
  for (const auto& [name, child] : elem) {
    if (name != "tag") continue;
    const auto& a = child.get_child("<xmlattr>", pt::ptree{});
    t[a.get<std::string>("k", "")] = a.get<std::string>("v", "");
  }
  return t;
}

TagMap read_extra_attrs(const pt::ptree& elem, std::initializer_list<std::string_view> known) {
  TagMap out;
  for (const auto& [k, v] : elem.get_child("<xmlattr>", pt::ptree{})) {
    if (std::find(known.begin(), known.end(), k) != known.end()) continue;
    out[k] = v.data();
  }
  return out;
}

int tag_int(const TagMap& t, std::string_view key, std::int64_t node_id, int fallback) {
  auto it = t.find(std::string(key));
  if (it == t.end()) return fallback;
  auto v = parse_int(it->second);
  if (!v) throw SchemaError(node_id, "malformed " + std::string(key) + " '" + it->second + "'");
  return static_cast<int>(*v);
}

std::optional<double> tag_double(const TagMap& t, std::string_view key, std::int64_t node_id) {
  auto it = t.find(std::string(key));
  if (it == t.end()) return std::nullopt;
  auto v = parse_double(it->second);
  if (!v || !std::isfinite(*v)) {
    throw SchemaError(node_id, "malformed " + std::string(key) + " '" + it->second + "'");
  }
  return v;
}

void check_rssi(std::int64_t node_id, const std::map<std::string, double>& rssi) {
  if (rssi.empty()) throw SchemaError(node_id, "fingerprint has no RSSI readings");
  for (const auto& [ap, v] : rssi) {
    if (!(v >= -100.0 && v <= 0.0)) {
      throw SchemaError(node_id, "RSSI for " + ap + " outside [-100, 0] dBm");
    }
  }
}

Fingerprint to_fingerprint(const OsmNode& n, const GeoPoint& origin, double floor_height) {
  Fingerprint fp;
  fp.node_id = n.id;
  fp.geo = n.geo;
  fp.level = tag_int(n.tags, tags::kLevel, n.id, 0);
  fp.position = project(origin, n.geo, fp.level, floor_height);
  if (auto h = tag_double(n.tags, tags::kHeight, n.id)) fp.position.z = *h;
  fp.timestamp = tag_double(n.tags, tags::kTimestamp, n.id);
  for (const auto& [k, v] : n.tags) {
    if (k.starts_with(tags::kRssiPrefix)) {
      const std::string ap = k.substr(tags::kRssiPrefix.size());
      auto dbm = parse_double(v);
      if (ap.empty() || !dbm || !std::isfinite(*dbm)) {
        throw SchemaError(n.id, "malformed RSSI tag " + k + "='" + v + "'");
      }
      fp.rssi[ap] = *dbm;
    } else if (k != tags::kFingerprint && k != tags::kLevel && k != tags::kHeight &&
               k != tags::kTimestamp) {
      fp.extra_tags[k] = v;
    }
  }
  check_rssi(n.id, fp.rssi);
  return fp;
}

ApRecord to_ap(const OsmNode& n, const GeoPoint& origin, double floor_height) {
  ApRecord ap;
  ap.node_id = n.id;
  ap.geo = n.geo;
  auto bssid = n.tags.find(std::string(tags::kBssid));
  if (bssid == n.tags.end() || bssid->second.empty()) {
    throw SchemaError(n.id, "AP node without " + std::string(tags::kBssid));
  }
  ap.ap_id = bssid->second;
  ap.level = tag_int(n.tags, tags::kLevel, n.id, 0);
  ap.position = project(origin, n.geo, ap.level, floor_height);
  if (auto h = tag_double(n.tags, tags::kHeight, n.id)) ap.position.z = *h;
  if (auto src = n.tags.find(std::string(tags::kApSource)); src != n.tags.end()) {
    auto s = ap_source_from_string(src->second);
    if (!s) throw SchemaError(n.id, "unknown AP source '" + src->second + "'");
    ap.source = *s;
  }
  for (const auto& [k, v] : n.tags) {
    if (k != tags::kAp && k != tags::kBssid && k != tags::kApSource && k != tags::kLevel &&
        k != tags::kHeight) {
      ap.tags[k] = v;
    }
  }
  return ap;
}

struct Edge {
  double ax, ay, bx, by;
};

bool edges_coincide(const Edge& e, const Edge& f, double eps) {
  auto close = [eps](double x0, double y0, double x1, double y1) {
    return std::hypot(x0 - x1, y0 - y1) <= eps;
  };
  return (close(e.ax, e.ay, f.ax, f.ay) && close(e.bx, e.by, f.bx, f.by)) ||
         (close(e.ax, e.ay, f.bx, f.by) && close(e.bx, e.by, f.ax, f.ay));
}

std::vector<Edge> way_edges(const OsmAgMap& map, const OsmWay& way) {
  std::vector<Edge> out;
  for (std::size_t i = 0; i + 1 < way.node_refs.size(); ++i) {
    auto a = map.nodes.find(way.node_refs[i]);
    auto b = map.nodes.find(way.node_refs[i + 1]);
    if (a == map.nodes.end() || b == map.nodes.end()) continue;
    const LocalPoint3 pa = map.local(a->second);
    const LocalPoint3 pb = map.local(b->second);
    if (pa.x == pb.x && pa.y == pb.y) continue;
    Edge e{pa.x, pa.y, pb.x, pb.y};
    if (std::tie(e.bx, e.by) < std::tie(e.ax, e.ay)) e = {pb.x, pb.y, pa.x, pa.y};
    out.push_back(e);
  }
  return out;
}

}  // namespace

std::string_view to_string(ApSource s) {
  return s == ApSource::kSurveyed ? "surveyed" : "estimated";
}

std::optional<ApSource> ap_source_from_string(std::string_view s) {
  if (s == "surveyed") return ApSource::kSurveyed;
  if (s == "estimated") return ApSource::kEstimated;
  return std::nullopt;
}

double quantize_degrees(double deg) { return std::round(deg * 1e9) / 1e9; }

const ApRecord* OsmAgMap::find_ap(std::string_view ap_id) const {
  for (const auto& ap : aps) {
    if (ap.ap_id == ap_id) return &ap;
  }
  return nullptr;
}

std::int64_t OsmAgMap::max_id() const {
  std::int64_t m = 0;
  if (!nodes.empty()) m = std::max(m, nodes.rbegin()->first);
  if (!ways.empty()) m = std::max(m, ways.rbegin()->first);
  for (const auto& fp : fingerprints) m = std::max(m, fp.node_id);
  for (const auto& ap : aps) m = std::max(m, ap.node_id);
  return m;
}

LocalPoint3 OsmAgMap::local(const OsmNode& n, int level) const {
  return project(origin, n.geo, level, floor_height);
}

std::pair<GeoPoint, LocalPoint3> OsmAgMap::snap(const LocalPoint3& p) const {
  GeoPoint g = unproject(origin, p);
  g.lat = quantize_degrees(g.lat);
  g.lon = quantize_degrees(g.lon);
  LocalPoint3 q = project(origin, g, 0, floor_height);
  q.z = p.z;
  return {g, q};
}

const Fingerprint& OsmAgMap::add_fingerprint(const LocalPoint3& position, int level,
                                             std::map<std::string, double> rssi,
                                             std::optional<double> timestamp) {
  Fingerprint fp;
  fp.node_id = max_id() + 1;
  std::tie(fp.geo, fp.position) = snap(position);
  fp.level = level;
  fp.rssi = std::move(rssi);
  fp.timestamp = timestamp;
  check_rssi(fp.node_id, fp.rssi);
  fingerprints.push_back(std::move(fp));
  return fingerprints.back();
}

std::vector<int> OsmAgMap::levels() const {
  std::set<int> out;
  for (const auto& [id, w] : ways) {
    if (is_area_way(w)) out.insert(way_level(w));
  }
  for (const auto& fp : fingerprints) out.insert(fp.level);
  for (const auto& ap : aps) out.insert(ap.level);
  return {out.begin(), out.end()};
}

void OsmAgMap::validate() const {
  std::set<std::int64_t> ids;
  auto check_geo = [](std::int64_t id, const GeoPoint& g) {
    if (!(std::abs(g.lat) <= 90.0) || !(std::abs(g.lon) <= 180.0)) {
      throw IntegrityError("node " + std::to_string(id) + " has out-of-range coordinates");
    }
  };
  for (const auto& [id, n] : nodes) {
    if (id != n.id) throw IntegrityError("node key " + std::to_string(id) + " != node id");
    check_geo(id, n.geo);
    ids.insert(id);
  }
  for (const auto& fp : fingerprints) {
    if (!ids.insert(fp.node_id).second) {
      throw IntegrityError("duplicate node id " + std::to_string(fp.node_id));
    }
    check_geo(fp.node_id, fp.geo);
    check_rssi(fp.node_id, fp.rssi);
  }
  std::set<std::string> ap_ids;
  for (const auto& ap : aps) {
    if (!ids.insert(ap.node_id).second) {
      throw IntegrityError("duplicate node id " + std::to_string(ap.node_id));
    }
    check_geo(ap.node_id, ap.geo);
    if (!ap_ids.insert(ap.ap_id).second) throw IntegrityError("duplicate AP id " + ap.ap_id);
    if (!ap.position.finite()) throw IntegrityError("AP " + ap.ap_id + " has a non-finite position");
  }
  for (const auto& [id, w] : ways) {
    for (auto ref : w.node_refs) {
      if (!nodes.contains(ref)) {
        throw IntegrityError("way " + std::to_string(id) + " references missing node " +
                             std::to_string(ref));
      }
    }
    if (is_area_way(w) && (!w.closed() || w.node_refs.size() < 4)) {
      throw IntegrityError("area way " + std::to_string(id) +
                           " is not a closed polygon with at least 4 refs");
    }
  }
}

OsmAgMap parse_map(std::string_view xml_text, const ParseOptions& opts) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(xml_text)};
    pt::read_xml(in, tree, pt::xml_parser::no_comments);
  } catch (const pt::xml_parser_error& e) {
    throw ParseError(static_cast<long>(e.line()), e.message());
  }
  auto root = tree.get_child_optional("osm");
  if (!root) throw ParseError(1, "missing <osm> root element");

  OsmAgMap map;
  map.floor_height = opts.floor_height;
  std::optional<GeoPoint> bounds_origin;
  std::vector<OsmNode> raw_nodes;
  std::set<std::int64_t> seen;

  for (const auto& [name, elem] : *root) {
    if (name == "bounds") {
      const auto& a = elem.get_child("<xmlattr>", pt::ptree{});
      auto lat = parse_double(a.get<std::string>("minlat", ""));
      auto lon = parse_double(a.get<std::string>("minlon", ""));
      if (lat && lon) bounds_origin = GeoPoint{quantize_degrees(*lat), quantize_degrees(*lon)};
    } else if (name == "node") {
      const auto& a = elem.get_child("<xmlattr>", pt::ptree{});
      OsmNode n;
      n.id = require_id(a, "node");
      auto lat = parse_double(a.get<std::string>("lat", ""));
      auto lon = parse_double(a.get<std::string>("lon", ""));
      if (!lat || !lon) throw IntegrityError("node " + std::to_string(n.id) + " lacks lat/lon");
      n.geo = {quantize_degrees(*lat), quantize_degrees(*lon)};
      n.tags = read_tags(elem);
      n.attrs = read_extra_attrs(elem, {"id", "lat", "lon"});
      if (!seen.insert(n.id).second) {
        throw IntegrityError("duplicate node id " + std::to_string(n.id));
      }
      raw_nodes.push_back(std::move(n));
    } else if (name == "way") {
      const auto& a = elem.get_child("<xmlattr>", pt::ptree{});
      OsmWay w;
      w.id = require_id(a, "way");
      for (const auto& [cname, child] : elem) {
        if (cname != "nd") continue;
        auto ref = parse_int(child.get<std::string>("<xmlattr>.ref", ""));
        if (!ref) throw IntegrityError("way " + std::to_string(w.id) + " has a malformed nd ref");
        w.node_refs.push_back(*ref);
      }
      w.tags = read_tags(elem);
      w.attrs = read_extra_attrs(elem, {"id"});
      if (!map.ways.emplace(w.id, w).second) {
        throw IntegrityError("duplicate way id " + std::to_string(w.id));
      }
    }
  }

  if (bounds_origin) {
    map.origin = *bounds_origin;
  } else if (!raw_nodes.empty()) {
    map.origin = raw_nodes.front().geo;
    for (const auto& n : raw_nodes) {
      map.origin.lat = std::min(map.origin.lat, n.geo.lat);
      map.origin.lon = std::min(map.origin.lon, n.geo.lon);
    }
  }

  std::sort(raw_nodes.begin(), raw_nodes.end(),
            [](const OsmNode& a, const OsmNode& b) { return a.id < b.id; });
  for (auto& n : raw_nodes) {
    if (has_tag(n.tags, tags::kFingerprint, "yes")) {
      map.fingerprints.push_back(to_fingerprint(n, map.origin, map.floor_height));
    } else if (has_tag(n.tags, tags::kAp, "yes")) {
      map.aps.push_back(to_ap(n, map.origin, map.floor_height));
    } else {
      map.nodes.emplace(n.id, std::move(n));
    }
  }
  map.validate();
  return map;
}

std::string serialize_map(const OsmAgMap& map) {
  map.validate();
  GeoPoint hi = map.origin;
  auto grow = [&hi](const GeoPoint& g) {
    hi.lat = std::max(hi.lat, g.lat);
    hi.lon = std::max(hi.lon, g.lon);
  };
  for (const auto& [id, n] : map.nodes) grow(n.geo);
  for (const auto& fp : map.fingerprints) grow(fp.geo);
  for (const auto& ap : map.aps) grow(ap.geo);

  std::string out = "<?xml version='1.0' encoding='UTF-8'?>\n<osm version='0.6' generator='wifiloc'>\n";
  out += "  <bounds minlat='" + format_degrees(map.origin.lat) + "' minlon='" +
         format_degrees(map.origin.lon) + "' maxlat='" + format_degrees(hi.lat) + "' maxlon='" +
         format_degrees(hi.lon) + "'/>\n";

  // Geometry and WiFi nodes interleaved by id.
  std::map<std::int64_t, std::string> wifi_nodes;
  for (const auto& fp : map.fingerprints) {
    std::string s;
    write_node(s, fp.node_id, fp.geo, {}, fingerprint_tags(fp));
    wifi_nodes.emplace(fp.node_id, std::move(s));
  }
  for (const auto& ap : map.aps) {
    std::string s;
    write_node(s, ap.node_id, ap.geo, {}, ap_tags(ap));
    wifi_nodes.emplace(ap.node_id, std::move(s));
  }
  auto geo_it = map.nodes.begin();
  auto wifi_it = wifi_nodes.begin();
  while (geo_it != map.nodes.end() || wifi_it != wifi_nodes.end()) {
    if (wifi_it == wifi_nodes.end() ||
        (geo_it != map.nodes.end() && geo_it->first < wifi_it->first)) {
      write_node(out, geo_it->second.id, geo_it->second.geo, geo_it->second.attrs,
                 geo_it->second.tags);
      ++geo_it;
    } else {
      out += wifi_it->second;
      ++wifi_it;
    }
  }

  for (const auto& [id, w] : map.ways) {
    out += "  <way id='" + std::to_string(id) + "'";
    for (const auto& [k, v] : w.attrs) out += " " + k + "='" + escape_xml(v) + "'";
    out += ">\n";
    for (auto ref : w.node_refs) out += "    <nd ref='" + std::to_string(ref) + "'/>\n";
    write_tags(out, w.tags);
    out += "  </way>\n";
  }
  out += "</osm>\n";
  return out;
}

std::size_t serialized_size(const Fingerprint& fp) {
  std::string s;
  write_node(s, fp.node_id, fp.geo, {}, fingerprint_tags(fp));
  return s.size();
}

std::size_t serialized_size(const ApRecord& ap) {
  std::string s;
  write_node(s, ap.node_id, ap.geo, {}, ap_tags(ap));
  return s.size();
}

void upsert_ap(OsmAgMap& map, ApRecord ap) {
  if (!ap.position.finite()) throw DomainError("AP " + ap.ap_id + " position is not finite");
  const double z = ap.position.z;
  std::tie(ap.geo, ap.position) = map.snap(ap.position);
  ap.position.z = z;
  for (auto& existing : map.aps) {
    if (existing.ap_id == ap.ap_id) {
      ap.node_id = existing.node_id;
      existing = std::move(ap);
      return;
    }
  }
  ap.node_id = map.max_id() + 1;
  map.aps.push_back(std::move(ap));
}

bool is_area_way(const OsmWay& way) {
  if (is_passage_way(way)) return false;
  if (has_tag(way.tags, tags::kOsmAgType, "area")) return true;
  if (way.tags.contains(std::string(tags::kOsmAgAreaType))) return true;
  auto indoor = way.tags.find("indoor");
  return indoor != way.tags.end() &&
         (indoor->second == "room" || indoor->second == "area" || indoor->second == "corridor");
}

bool is_passage_way(const OsmWay& way) { return has_tag(way.tags, tags::kOsmAgType, "passage"); }

int way_level(const OsmWay& way) {
  auto it = way.tags.find(std::string(tags::kLevel));
  if (it == way.tags.end()) return 0;
  return static_cast<int>(parse_int(it->second).value_or(0));
}

std::vector<WallSegment> wall_segments(const OsmAgMap& map, int level, double merge_eps) {
  std::vector<Edge> edges;
  std::vector<Edge> passages;
  for (const auto& [id, w] : map.ways) {
    if (way_level(w) != level) continue;
    if (is_area_way(w)) {
      auto e = way_edges(map, w);
      edges.insert(edges.end(), e.begin(), e.end());
    } else if (is_passage_way(w)) {
      auto e = way_edges(map, w);
      passages.insert(passages.end(), e.begin(), e.end());
    }
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.ax, a.ay, a.bx, a.by) < std::tie(b.ax, b.ay, b.bx, b.by);
  });

  std::vector<Edge> kept;
  for (const Edge& e : edges) {
    bool dup = false;
    // Sorted by first endpoint x: only recent edges can coincide.
    for (auto it = kept.rbegin(); it != kept.rend(); ++it) {
      if (it->ax < e.ax - 2.0 * merge_eps) break;
      if (edges_coincide(*it, e, merge_eps)) {
        dup = true;
        break;
      }
    }
    if (!dup) kept.push_back(e);
  }

  const double z0 = level * map.floor_height;
  std::vector<WallSegment> out;
  for (const Edge& e : kept) {
    const bool passage = std::any_of(passages.begin(), passages.end(),
                                     [&](const Edge& p) { return edges_coincide(p, e, merge_eps); });
    if (passage) continue;
    out.push_back(WallSegment{{e.ax, e.ay, z0}, {e.bx, e.by, z0}, level, z0, z0 + map.floor_height});
  }
  return out;
}

std::vector<WallSegment> all_wall_segments(const OsmAgMap& map, double merge_eps) {
  std::set<int> levels;
  for (const auto& [id, w] : map.ways) {
    if (is_area_way(w) || is_passage_way(w)) levels.insert(way_level(w));
  }
  std::vector<WallSegment> out;
  for (int level : levels) {
    auto w = wall_segments(map, level, merge_eps);
    out.insert(out.end(), w.begin(), w.end());
  }
  return out;
}

}  // namespace wifiloc
