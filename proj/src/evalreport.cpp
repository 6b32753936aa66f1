#include "wifiloc/evalreport.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include "wifiloc/error.hpp"
#include "wifiloc/numfmt.hpp"

namespace wifiloc {

double improvement_percent(double initial_mean, double refined_mean) {
  if (!(initial_mean > 0.0)) return 0.0;
  return 100.0 * (initial_mean - refined_mean) / initial_mean;
}

ApErrorReport ap_error_report(std::span<const ApEstimate> estimates,
                              std::span<const ApRecord> truth) {
  std::map<std::string, const ApRecord*> by_id;
  for (const auto& t : truth) by_id[t.ap_id] = &t;

  ApErrorReport rep;
  for (const auto& e : estimates) {
    auto it = by_id.find(e.ap_id);
    if (it == by_id.end() || e.trace.empty()) {
      rep.unmatched.push_back(e.ap_id);
      continue;
    }
    const LocalPoint3& truth_pos = it->second->position;
    rep.rows.push_back({e.ap_id, euclidean(e.initial_position(), truth_pos),
                        euclidean(e.position, truth_pos), e.iteration});
  }
  if (rep.rows.empty()) throw EmptyError("empty_report", "no estimate matches a truth AP");
  std::sort(rep.rows.begin(), rep.rows.end(),
            [](const ApErrorRow& a, const ApErrorRow& b) { return a.ap_id < b.ap_id; });
  std::sort(rep.unmatched.begin(), rep.unmatched.end());

  std::vector<double> init;
  std::vector<double> refined;
  for (const auto& r : rep.rows) {
    init.push_back(r.initial_error);
    refined.push_back(r.refined_error);
  }
  rep.initial = summarize_errors(init);
  rep.refined = summarize_errors(refined);
  if (rep.initial.mean > 0.0) {
    rep.improvement_pct = improvement_percent(rep.initial.mean, rep.refined.mean);
  } else {
    rep.note = "initial mean error is 0; improvement reported against a 0 baseline";
  }
  return rep;
}

// ---- CSV ----

namespace {

bool needs_quotes(std::string_view f) {
  return f.find_first_of(",\"\r\n") != std::string_view::npos;
}

}  // namespace

std::string write_csv(std::span<const CsvRow> rows) {
  std::string out;
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      const std::string& f = row[i];
      if (!needs_quotes(f)) {
        out += f;
        continue;
      }
      out += '"';
      for (char c : f) {
        if (c == '"') out += '"';
        out += c;
      }
      out += '"';
    }
    out += "\r\n";
  }
  return out;
}

std::vector<CsvRow> parse_csv(std::string_view text) {
  std::vector<CsvRow> rows;
  CsvRow row;
  std::string field;
  bool quoted = false;
  bool in_row = false;
  long line = 1;
  long quote_line = 0;
  std::size_t i = 0;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
  };
  auto end_row = [&] {
    end_field();
    rows.push_back(std::move(row));
    row.clear();
    in_row = false;
  };
  while (i < text.size()) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          i += 2;
          continue;
        }
        quoted = false;
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      ++i;
      continue;
    }
    if (c == '"' && field.empty()) {
      quoted = true;
      quote_line = line;
      in_row = true;
    } else if (c == ',') {
      end_field();
      in_row = true;
    } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      end_row();
      ++line;
      ++i;
    } else if (c == '\n') {
      end_row();
      ++line;
    } else {
      field += c;
      in_row = true;
    }
    ++i;
  }
  if (quoted) throw ParseError(quote_line, "unterminated quoted field");
  if (in_row || !field.empty()) end_row();
  return rows;
}

Histogram make_histogram(const ApErrorReport& report, double bin_width) {
  if (!(bin_width > 0.0)) throw DomainError("histogram bin width must be positive");
  double hi = 0.0;
  for (const auto& r : report.rows) hi = std::max({hi, r.initial_error, r.refined_error});
  const auto bins = static_cast<std::size_t>(std::floor(hi / bin_width)) + 1;
  Histogram h;
  h.bin_width = bin_width;
  h.initial.assign(bins, 0);
  h.refined.assign(bins, 0);
  for (const auto& r : report.rows) {
    ++h.initial[static_cast<std::size_t>(std::floor(r.initial_error / bin_width))];
    ++h.refined[static_cast<std::size_t>(std::floor(r.refined_error / bin_width))];
  }
  return h;
}

std::string histogram_csv(const Histogram& h) {
  std::vector<CsvRow> rows{{"bin_lo", "bin_hi", "initial", "refined"}};
  for (std::size_t k = 0; k < h.initial.size(); ++k) {
    rows.push_back({format_number(k * h.bin_width), format_number((k + 1) * h.bin_width),
                    std::to_string(h.initial[k]), std::to_string(h.refined[k])});
  }
  return write_csv(rows);
}

Histogram read_histogram_csv(std::string_view text) {
  const auto rows = parse_csv(text);
  if (rows.empty() || rows[0] != CsvRow{"bin_lo", "bin_hi", "initial", "refined"}) {
    throw ParseError(1, "histogram header expected");
  }
  Histogram h;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const long line = static_cast<long>(i) + 1;
    if (r.size() != 4) throw ParseError(line, "histogram row needs 4 fields");
    const auto lo = parse_double(r[0]);
    const auto hi = parse_double(r[1]);
    const auto a = parse_int(r[2]);
    const auto b = parse_int(r[3]);
    if (!lo || !hi || !a || !b) throw ParseError(line, "bad histogram number");
    if (i == 1) h.bin_width = *hi - *lo;
    h.initial.push_back(static_cast<int>(*a));
    h.refined.push_back(static_cast<int>(*b));
  }
  return h;
}

namespace {

std::string fmt2(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string xml_escape(std::string_view s) {
  std::string out;
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

constexpr std::string_view kSvgHeader =
    "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" ";

}  // namespace

std::string histogram_svg(const Histogram& h) {
  const double bar = 12.0;
  const double gap = 8.0;
  const double plot_h = 200.0;
  const double left = 40.0;
  const double top = 30.0;
  int peak = 1;
  for (int c : h.initial) peak = std::max(peak, c);
  for (int c : h.refined) peak = std::max(peak, c);
  const double width = left + h.initial.size() * (2 * bar + gap) + 20.0;
  const double height = top + plot_h + 40.0;

  std::string s(kSvgHeader);
  s += "width=\"" + fmt2(width) + "\" height=\"" + fmt2(height) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + fmt2(left) + "\" y=\"18\" font-size=\"12\">AP error (m): initial grey, refined red</text>\n";
  const double base = top + plot_h;
  s += "<line x1=\"" + fmt2(left) + "\" y1=\"" + fmt2(base) + "\" x2=\"" + fmt2(width - 10) +
       "\" y2=\"" + fmt2(base) + "\" stroke=\"black\"/>\n";
  for (std::size_t k = 0; k < h.initial.size(); ++k) {
    const double x = left + k * (2 * bar + gap);
    const double hi = plot_h * h.initial[k] / peak;
    const double hr = plot_h * h.refined[k] / peak;
    s += "<rect x=\"" + fmt2(x) + "\" y=\"" + fmt2(base - hi) + "\" width=\"" + fmt2(bar) +
         "\" height=\"" + fmt2(hi) + "\" fill=\"#999999\"/>\n";
    s += "<rect x=\"" + fmt2(x + bar) + "\" y=\"" + fmt2(base - hr) + "\" width=\"" + fmt2(bar) +
         "\" height=\"" + fmt2(hr) + "\" fill=\"#d62728\"/>\n";
    s += "<text x=\"" + fmt2(x) + "\" y=\"" + fmt2(base + 14) + "\" font-size=\"9\">" +
         format_number(k * h.bin_width) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

std::string ap_errors_csv(const ApErrorReport& report) {
  std::vector<CsvRow> rows{{"ap_id", "initial_error", "refined_error", "iteration"}};
  for (const auto& r : report.rows) {
    rows.push_back({r.ap_id, format_number(r.initial_error), format_number(r.refined_error),
                    std::to_string(r.iteration)});
  }
  return write_csv(rows);
}

std::string metrics_csv(std::span<const std::pair<std::string, ErrorStats>> rows) {
  std::vector<CsvRow> out{{"method", "count", "misses", "mean", "std", "rmse", "p95"}};
  for (const auto& [name, s] : rows) {
    out.push_back({name, std::to_string(s.count), std::to_string(s.misses), format_number(s.mean),
                   format_number(s.std_dev), format_number(s.rmse), format_number(s.p95)});
  }
  return write_csv(out);
}

// ---- storage ----

std::vector<StorageRow> storage_audit(std::span<const NamedMap> maps) {
  std::vector<StorageRow> out;
  for (const auto& nm : maps) {
    StorageRow r;
    r.name = nm.name;
    r.total_bytes = serialize_map(*nm.map).size();
    r.fingerprint_count = nm.map->fingerprints.size();
    r.ap_count = nm.map->aps.size();
    for (const auto& fp : nm.map->fingerprints) r.fingerprint_bytes += serialized_size(fp);
    for (const auto& ap : nm.map->aps) r.ap_bytes += serialized_size(ap);
    if (r.fingerprint_count) {
      r.bytes_per_fingerprint = static_cast<double>(r.fingerprint_bytes) / r.fingerprint_count;
    }
    if (r.ap_count) r.bytes_per_ap = static_cast<double>(r.ap_bytes) / r.ap_count;
    out.push_back(std::move(r));
  }
  if (!out.empty() && out.front().total_bytes > 0) {
    for (auto& r : out) {
      r.ratio_to_first = static_cast<double>(r.total_bytes) / out.front().total_bytes;
    }
  }
  return out;
}

// ---- map rendering ----

std::string render_svg(const OsmAgMap& map, const SvgOverlay& overlay) {
  const auto on_level = [&](int lvl) { return !overlay.level || *overlay.level == lvl; };

  struct Poly {
    std::vector<LocalPoint3> pts;
    bool closed = false;
    bool passage = false;
  };
  std::vector<Poly> polys;
  for (const auto& [id, way] : map.ways) {
    const int lvl = way_level(way);
    if (!on_level(lvl)) continue;
    Poly p;
    p.closed = way.closed();
    p.passage = is_passage_way(way);
    for (auto ref : way.node_refs) {
      auto it = map.nodes.find(ref);
      if (it != map.nodes.end()) p.pts.push_back(map.local(it->second, lvl));
    }
    if (!p.pts.empty()) polys.push_back(std::move(p));
  }
  std::vector<LocalPoint3> fps;
  if (overlay.show_fingerprints) {
    for (const auto& fp : map.fingerprints) {
      if (on_level(fp.level)) fps.push_back(fp.position);
    }
  }
  if (polys.empty() && fps.empty() && overlay.truth.empty() && overlay.estimates.empty() &&
      overlay.testpoints.empty()) {
    throw DomainError("nothing to render");
  }

  double x0 = std::numeric_limits<double>::infinity();
  double y0 = x0;
  double x1 = -x0;
  double y1 = -x0;
  auto grow = [&](const LocalPoint3& p) {
    x0 = std::min(x0, p.x);
    y0 = std::min(y0, p.y);
    x1 = std::max(x1, p.x);
    y1 = std::max(y1, p.y);
  };
  for (const auto& p : polys) std::for_each(p.pts.begin(), p.pts.end(), grow);
  for (const auto& p : fps) grow(p);
  for (const auto* set : {&overlay.truth, &overlay.estimates, &overlay.testpoints}) {
    for (const auto& m : *set) grow(m.position);
  }

  const double scale = 10.0;  // px per meter
  const double pad = 20.0;
  const double legend_h = 70.0;
  const double w = (x1 - x0) * scale + 2 * pad;
  const double h = (y1 - y0) * scale + 2 * pad + legend_h;
  auto px = [&](double x) { return fmt2(pad + (x - x0) * scale); };
  auto py = [&](double y) { return fmt2(legend_h + pad + (y1 - y) * scale); };

  std::string s(kSvgHeader);
  s += "width=\"" + fmt2(w) + "\" height=\"" + fmt2(h) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<g id=\"ways\" fill=\"none\" stroke=\"black\" stroke-width=\"1\">\n";
  for (const auto& p : polys) {
    s += p.closed ? "<polygon" : "<polyline";
    if (p.passage) s += " stroke=\"#2ca02c\" stroke-dasharray=\"4 2\"";
    s += " points=\"";
    const std::size_t n = p.closed && p.pts.size() > 1 ? p.pts.size() - 1 : p.pts.size();
    for (std::size_t i = 0; i < n; ++i) {
      if (i) s += ' ';
      s += px(p.pts[i].x) + "," + py(p.pts[i].y);
    }
    s += "\"/>\n";
  }
  s += "</g>\n";

  auto dots = [&](std::string_view id, std::string_view color, double r,
                  const std::vector<Marker>& ms) {
    s += "<g id=\"" + std::string(id) + "\" fill=\"" + std::string(color) + "\">\n";
    for (const auto& m : ms) {
      s += "<circle cx=\"" + px(m.position.x) + "\" cy=\"" + py(m.position.y) + "\" r=\"" +
           fmt2(r) + "\">";
      if (!m.label.empty()) s += "<title>" + xml_escape(m.label) + "</title>";
      s += "</circle>\n";
    }
    s += "</g>\n";
  };
  std::vector<Marker> fp_markers;
  for (const auto& p : fps) fp_markers.push_back({p, {}});
  dots("fingerprints", "#1f77b4", 1.5, fp_markers);
  dots("testpoints", "#7f7f7f", 2.0, overlay.testpoints);
  dots("truth", "#2ca02c", 4.0, overlay.truth);
  dots("estimates", "#d62728", 4.0, overlay.estimates);

  s += "<g id=\"legend\" font-size=\"11\">\n";
  const std::pair<std::string_view, std::string_view> legend[] = {
      {"#2ca02c", "truth"}, {"#d62728", "estimate"}, {"#1f77b4", "fingerprint"},
      {"#7f7f7f", "test point"}};
  double ly = 14.0;
  for (const auto& [color, text] : legend) {
    s += "<circle cx=\"12\" cy=\"" + fmt2(ly - 4) + "\" r=\"4\" fill=\"" + std::string(color) +
         "\"/><text x=\"22\" y=\"" + fmt2(ly) + "\">" + std::string(text) + "</text>\n";
    ly += 15.0;
  }
  s += "</g>\n</svg>\n";
  return s;
}

}  // namespace wifiloc
