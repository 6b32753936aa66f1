#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "wifiloc/calibrate.hpp"
#include "wifiloc/error.hpp"
#include "wifiloc/simulate.hpp"

using namespace wifiloc;

namespace {

CalibrationInput input_from(const Scenario& sc) {
  CalibrationInput in;
  for (const auto& ap : sc.map.aps) {
    if (ap.source == ApSource::kSurveyed) in.aps.push_back(ap);
  }
  in.fingerprints = sc.map.fingerprints;
  in.walls = all_wall_segments(sc.map);
  in.geometry.floor_height = sc.map.floor_height;
  return in;
}

ClassifiedPair pair_at(double d, double rssi, int walls) {
  ClassifiedPair p;
  p.distance = d;
  p.measurement.rssi = rssi;
  p.wall_count = walls;
  p.los = walls == 0;
  return p;
}

}  // namespace

TEST(Calibrate, RecoversNoiseFreeParameters) {
  ScenarioSpec spec;
  spec.params.sigma = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    spec.seed = seed;
    const CalibrationReport r = calibrate_report(input_from(generate(spec)));
    EXPECT_NEAR(r.params.rssi0, -28.79, 1e-6);
    EXPECT_NEAR(r.params.n, 2.5, 1e-6);
    EXPECT_NEAR(r.params.wall_loss, 10.77, 1e-6);
    EXPECT_NEAR(r.params.sigma, 0.0, 1e-6);
    EXPECT_GT(r.los_pairs, 0);
    EXPECT_GT(r.nlos_pairs, 0);
  }
}

TEST(Calibrate, ClassificationMatchesTruthLedger) {
  ScenarioSpec spec;
  const Scenario sc = generate(spec);
  const auto pairs = classify_pairs(input_from(sc));
  ASSERT_FALSE(pairs.empty());
  for (const auto& p : pairs) {
    const TruthAp* ap = sc.truth.find_ap(p.measurement.ap_id);
    ASSERT_NE(ap, nullptr);
    EXPECT_TRUE(ap->surveyed);
    EXPECT_NEAR(euclidean(ap->position, p.measurement.robot_pos), p.distance, 1e-6);
    EXPECT_EQ(p.los, p.wall_count == 0);
  }
}

TEST(Calibrate, FitLosOrdinaryLeastSquares) {
  // rssi = -30 - 20 log10(d) at d = 1, 10, 100 plus +-1 dB: slope exact, intercept exact.
  const std::vector<ClassifiedPair> pairs{pair_at(1, -29, 0), pair_at(1, -31, 0),
                                          pair_at(10, -49, 0), pair_at(10, -51, 0),
                                          pair_at(100, -69, 0), pair_at(100, -71, 0)};
  const LosFit f = fit_los(pairs);
  EXPECT_NEAR(f.rssi0, -30.0, 1e-12);
  EXPECT_NEAR(f.n, 2.0, 1e-12);
}

TEST(Calibrate, FitWallLossClosedForm) {
  // excess: 12 at one wall, 18 at two walls -> (12 + 36) / (1 + 4).
  const std::vector<ClassifiedPair> pairs{pair_at(1, -30 - 12, 1), pair_at(1, -30 - 18, 2)};
  EXPECT_NEAR(fit_wall_loss(pairs, -30, 2.0), 48.0 / 5.0, 1e-12);
}

TEST(Calibrate, Errors) {
  const std::vector<ClassifiedPair> same{pair_at(5, -40, 0), pair_at(5, -41, 0)};
  EXPECT_THROW(fit_los(same), RankError);

  ScenarioSpec spec;
  CalibrationInput in = input_from(generate(spec));
  CalibrationOptions strict;
  strict.min_los_pairs = 1000000;
  EXPECT_THROW(calibrate(in, strict), InsufficientPairsError);
  in.aps.clear();
  EXPECT_THROW(calibrate(in), InsufficientPairsError);
}

TEST(Calibrate, NearPairsExcluded) {
  ScenarioSpec spec;
  CalibrationOptions opts;
  opts.min_distance = 4.0;
  opts.min_los_pairs = 3;
  const CalibrationReport r = calibrate_report(input_from(generate(spec)), opts);
  EXPECT_GT(r.excluded_near, 0);
}
