#include <gtest/gtest.h>

#include <cmath>

#include "wifiloc/error.hpp"
#include "wifiloc/evalreport.hpp"
#include "wifiloc/metrics.hpp"
#include "wifiloc/simulate.hpp"

using namespace wifiloc;

namespace {

ApEstimate estimate(const std::string& id, LocalPoint3 initial, LocalPoint3 final) {
  ApEstimate e;
  e.ap_id = id;
  e.trace = {{initial, 0.0}, {final, 0.5}};
  e.position = final;
  e.iteration = 1;
  return e;
}

}  // namespace

TEST(Metrics, PopulationStatistics) {
  const std::vector<double> e{1, 2, 3, 4};
  const ErrorStats s = summarize_errors(e, 2);
  EXPECT_EQ(s.count, 4);
  EXPECT_EQ(s.misses, 2);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_DOUBLE_EQ(s.std_dev, std::sqrt(1.25));
  EXPECT_DOUBLE_EQ(s.rmse, std::sqrt(7.5));
  EXPECT_NEAR(s.p95, 3.85, 1e-12);
}

TEST(Metrics, RmseIdentity) {
  Rng rng(4);
  std::vector<double> e;
  for (int i = 0; i < 500; ++i) e.push_back(rng.uniform(0, 10));
  const ErrorStats s = summarize_errors(e);
  EXPECT_NEAR(s.rmse * s.rmse, s.mean * s.mean + s.std_dev * s.std_dev, 1e-9);
}

TEST(Metrics, Percentile) {
  const std::vector<double> v{10, 0, 5};
  EXPECT_DOUBLE_EQ(percentile(v, 0), 0);
  EXPECT_DOUBLE_EQ(percentile(v, 50), 5);
  EXPECT_DOUBLE_EQ(percentile(v, 75), 7.5);
  EXPECT_DOUBLE_EQ(percentile(v, 100), 10);
  EXPECT_DOUBLE_EQ(percentile({}, 50), 0);
}

TEST(EvalReport, ImprovementPercentFixtures) {
  EXPECT_NEAR(improvement_percent(5.86, 3.79), 35.3, 0.05);
  EXPECT_NEAR(improvement_percent(3.42, 3.12), 8.77, 0.005);
  EXPECT_NEAR(improvement_percent(20.21, 3.83), 81.05, 0.005);
  EXPECT_DOUBLE_EQ(improvement_percent(0.0, 0.0), 0.0);
}

TEST(EvalReport, ApErrorReport) {
  const std::vector<ApEstimate> est{estimate("b", {3, 4, 0}, {0, 1, 0}),
                                    estimate("a", {0, 0, 2}, {0, 0, 1}),
                                    estimate("zz", {0, 0, 0}, {0, 0, 0})};
  const std::vector<ApRecord> truth{{"a", {0, 0, 0}}, {"b", {0, 0, 0}}};
  const ApErrorReport r = ap_error_report(est, truth);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_EQ(r.rows[0].ap_id, "a");
  EXPECT_DOUBLE_EQ(r.rows[1].initial_error, 5.0);
  EXPECT_DOUBLE_EQ(r.initial.mean, 3.5);
  EXPECT_DOUBLE_EQ(r.refined.mean, 1.0);
  EXPECT_NEAR(r.improvement_pct, 100.0 * 2.5 / 3.5, 1e-12);
  EXPECT_EQ(r.unmatched, std::vector<std::string>{"zz"});
  EXPECT_THROW(ap_error_report(std::vector<ApEstimate>{est[2]}, truth), EmptyError);
}

TEST(EvalReport, CsvRoundTrip) {
  const std::vector<CsvRow> rows{{"id", "note"}, {"a,b", "say \"hi\""}, {"multi\nline", ""}};
  const std::string text = write_csv(rows);
  EXPECT_NE(text.find("\"a,b\""), std::string::npos);
  EXPECT_NE(text.find("\r\n"), std::string::npos);
  EXPECT_EQ(parse_csv(text), rows);
  EXPECT_THROW(parse_csv("a,\"open\r\n"), ParseError);
}

TEST(EvalReport, HistogramCountsEveryRow) {
  std::vector<ApEstimate> est;
  std::vector<ApRecord> truth;
  for (int i = 0; i < 10; ++i) {
    const std::string id = "ap" + std::to_string(i);
    est.push_back(estimate(id, {0.7 * i, 0, 0}, {0.3 * i, 0, 0}));
    truth.push_back({id, {0, 0, 0}});
  }
  const ApErrorReport r = ap_error_report(est, truth);
  const Histogram h = make_histogram(r, 1.0);
  int a = 0, b = 0;
  for (int c : h.initial) a += c;
  for (int c : h.refined) b += c;
  EXPECT_EQ(a, 10);
  EXPECT_EQ(b, 10);
  const Histogram back = read_histogram_csv(histogram_csv(h));
  EXPECT_EQ(back.initial, h.initial);
  EXPECT_EQ(back.refined, h.refined);
  EXPECT_DOUBLE_EQ(back.bin_width, 1.0);
  EXPECT_NE(histogram_svg(h).find("<svg"), std::string::npos);
  EXPECT_THROW(make_histogram(r, 0.0), DomainError);
}

TEST(EvalReport, StorageAudit) {
  ScenarioSpec spec;
  const OsmAgMap full = generate(spec).map;
  OsmAgMap bare = full;
  bare.fingerprints.clear();
  const std::vector<NamedMap> maps{{"full", &full}, {"bare", &bare}};
  const auto rows = storage_audit(maps);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].total_bytes, serialize_map(full).size());
  EXPECT_EQ(rows[0].fingerprint_count, 400u);
  std::size_t fp = 0;
  for (const auto& f : full.fingerprints) fp += serialized_size(f);
  EXPECT_EQ(rows[0].fingerprint_bytes, fp);
  EXPECT_DOUBLE_EQ(rows[0].ratio_to_first, 1.0);
  EXPECT_LT(rows[1].ratio_to_first, 1.0);
}

TEST(EvalReport, RenderIsDeterministic) {
  ScenarioSpec spec;
  const OsmAgMap map = generate(spec).map;
  SvgOverlay overlay;
  overlay.truth = {{{5, 5, 0}, "t"}};
  overlay.estimates = {{{6, 5, 0}, "e"}};
  const std::string a = render_svg(map, overlay);
  EXPECT_EQ(a, render_svg(map, overlay));
  EXPECT_NE(a.find("<svg"), std::string::npos);
  overlay.level = 1;
  EXPECT_NE(render_svg(map, overlay), a);
  EXPECT_THROW(render_svg(OsmAgMap{}), DomainError);
}
