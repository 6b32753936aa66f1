#include <gtest/gtest.h>

#include "wifiloc/ap_localize.hpp"
#include "wifiloc/error.hpp"
#include "wifiloc/simulate.hpp"

using namespace wifiloc;

namespace {

Scenario noise_free(std::uint64_t seed) {
  ScenarioSpec spec;
  spec.params.sigma = 0.0;
  spec.seed = seed;
  return generate(spec);
}

}  // namespace

TEST(ApLocalize, RecoversNoiseFreeAps) {
  for (std::uint64_t seed : {2u, 3u}) {
    const Scenario sc = noise_free(seed);
    OsmAgMap map = sc.map;
    const ApBatchResult batch = localize_all_aps(map, sc.truth.params);
    EXPECT_TRUE(batch.failures.empty());
    ASSERT_EQ(batch.estimates.size(), sc.truth.aps.size());
    for (const auto& est : batch.estimates) {
      const TruthAp* t = sc.truth.find_ap(est.ap_id);
      ASSERT_NE(t, nullptr);
      EXPECT_LT(euclidean(est.position, t->position), 0.05) << est.ap_id;
      EXPECT_EQ(est.trace.size(), 11u);
    }
  }
}

TEST(ApLocalize, SurveyedRecordsAreKept) {
  const Scenario sc = noise_free(4);
  OsmAgMap map = sc.map;
  std::vector<ApRecord> surveyed;
  for (const auto& ap : map.aps) surveyed.push_back(ap);
  ApLocalizeOptions opts;
  opts.iters = 1;
  localize_all_aps(map, sc.truth.params, opts);
  EXPECT_EQ(map.aps.size(), sc.truth.aps.size());
  for (const auto& s : surveyed) EXPECT_EQ(*map.find_ap(s.ap_id), s);
  for (const auto& ap : map.aps) {
    const TruthAp* t = sc.truth.find_ap(ap.ap_id);
    EXPECT_EQ(ap.source, t->surveyed ? ApSource::kSurveyed : ApSource::kEstimated);
  }
}

TEST(ApLocalize, ZeroIterationsIsPlainTrilateration) {
  const Scenario sc = noise_free(5);
  ApLocalizeOptions opts;
  opts.iters = 0;
  const auto walls = all_wall_segments(sc.map);
  const ApEstimate e =
      localize_ap(sc.truth.aps[0].ap_id, sc.map.fingerprints, sc.truth.params, walls, opts);
  EXPECT_EQ(e.iteration, 0);
  EXPECT_EQ(e.trace.size(), 1u);
  EXPECT_EQ(e.position, e.initial_position());
}

TEST(ApLocalize, DeterministicAcrossThreadCounts) {
  ScenarioSpec spec;
  spec.seed = 6;
  const Scenario sc = generate(spec);
  OsmAgMap a = sc.map;
  OsmAgMap b = sc.map;
  ApLocalizeOptions one;
  one.jobs = 1;
  ApLocalizeOptions many;
  many.jobs = 4;
  localize_all_aps(a, sc.truth.params, one);
  localize_all_aps(b, sc.truth.params, many);
  EXPECT_EQ(serialize_map(a), serialize_map(b));
}

TEST(ApLocalize, Errors) {
  const Scenario sc = noise_free(1);
  const auto walls = all_wall_segments(sc.map);
  ApLocalizeOptions bad;
  bad.iters = -1;
  EXPECT_THROW(localize_ap(sc.truth.aps[0].ap_id, sc.map.fingerprints, sc.truth.params, walls,
                           bad),
               DomainError);
  const std::vector<Fingerprint> few(sc.map.fingerprints.begin(),
                                     sc.map.fingerprints.begin() + 1);
  EXPECT_THROW(localize_ap(sc.truth.aps[0].ap_id, few, sc.truth.params, walls),
               UnderdeterminedError);
}
