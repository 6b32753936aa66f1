#include "wifiloc/fingerprint.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "wifiloc/error.hpp"

namespace wifiloc {

FingerprintIndex build_index(const OsmAgMap& map) {
  if (map.fingerprints.empty()) throw EmptyError("empty_index", "map has no fingerprints");
  FingerprintIndex index;
  std::set<std::string> universe;
  index.entries.reserve(map.fingerprints.size());
  for (const auto& fp : map.fingerprints) {
    index.entries.push_back({fp.position, fp.level, ScanMap(fp.rssi.begin(), fp.rssi.end())});
    for (const auto& [ap, dbm] : fp.rssi) universe.insert(ap);
  }
  index.ap_universe.assign(universe.begin(), universe.end());
  return index;
}

double signal_distance(const ScanMap& a, const ScanMap& b, double missing_dbm) {
  // Merge walk over the two sorted maps.
  double sum = 0.0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() || ib != b.end()) {
    double va = missing_dbm;
    double vb = missing_dbm;
    if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
      va = (ia++)->second;
    } else if (ia == a.end() || ib->first < ia->first) {
      vb = (ib++)->second;
    } else {
      va = (ia++)->second;
      vb = (ib++)->second;
    }
    sum += (va - vb) * (va - vb);
  }
  return std::sqrt(sum);
}

LocalizationResult knn_localize(const FingerprintIndex& index, const ScanMap& scan,
                                const KnnOptions& opts) {
  if (opts.k < 1) throw DomainError("k must be at least 1");
  if (index.entries.empty()) throw EmptyError("empty_index", "fingerprint index is empty");

  std::vector<double> dist(index.entries.size());
  for (std::size_t i = 0; i < index.entries.size(); ++i) {
    dist[i] = signal_distance(scan, index.entries[i].rssi, opts.missing_dbm);
  }
  std::vector<std::size_t> order(index.entries.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t k = std::min<std::size_t>(opts.k, order.size());
  std::partial_sort(order.begin(), order.begin() + k, order.end(),
                    [&dist](std::size_t a, std::size_t b) {
                      return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
                    });

  LocalizationResult out;
  std::map<int, int> votes;
  for (std::size_t j = 0; j < k; ++j) {
    const auto& e = index.entries[order[j]];
    out.position = out.position + e.position;
    ++votes[e.level];
  }
  out.position = out.position * (1.0 / static_cast<double>(k));

  out.level = index.entries[order[0]].level;
  int top = votes[out.level];
  for (const auto& [level, count] : votes) {
    if (count > top) {
      top = count;
      out.level = level;
    }
  }
  out.converged = true;
  out.residual_rms = dist[order[0]];
  return out;
}

}  // namespace wifiloc
