#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace clocksync;

namespace {

RecoveryResult checked_recover(const Topology& t, const MeasurementSet& meas) {
  RecoveryResult r = recover(t, meas);
  EXPECT_TRUE(reproduces_measurements(r, meas));
  for (const auto& [s, e] : r.fault_positions.entries()) {
    EXPECT_TRUE(e.has_value());
    EXPECT_FALSE(e->is_zero());
  }
  return r;
}

}  // namespace

TEST(Recover, ZeroFaults) {
  const Topology t(5);
  const GroundTruth truth({Rational(1, 3), -2, 7, Rational(-5, 4)});
  const MeasurementSet meas = simulate_measurements(t, truth, {}, Rational(1));
  const RecoveryResult r = checked_recover(t, meas);
  EXPECT_EQ(r.k_used, 0u);
  EXPECT_EQ(r.offsets, Vector(truth.offsets().begin(), truth.offsets().end()));
  EXPECT_TRUE(r.fault_positions.empty());
  EXPECT_EQ(r.systems_solved, 1u);
  EXPECT_TRUE(verify_recovery(r, truth, {}).correct);
}

TEST(Recover, SingleFaultOnFourNodes) {
  const Topology t(4);
  const GroundTruth truth({Rational(3, 7), -4, Rational(11, 2)});
  for (const auto& s : t.all_sessions()) {
    for (long n = -5; n <= 5; ++n) {
      if (n == 0) continue;
      const FaultAssignment faults{{s, Rational(n)}};
      const RecoveryResult r = checked_recover(t, simulate_measurements(t, truth, faults, Rational(1)));
      EXPECT_EQ(r.k_used, 1u);
      EXPECT_TRUE(r.ambiguity.empty());
      EXPECT_TRUE(verify_recovery(r, truth, faults).correct) << s.to_string() << " n=" << n;
    }
  }
}

TEST(Recover, RationalMagnitudeAtTwoZero) {
  const Topology t(4);
  const GroundTruth truth({1, 2, 3});
  const FaultAssignment faults{{Session(2, 0), Rational(5, 9)}};
  std::vector<Rational> meas;
  for (const auto& s : t.all_sessions()) meas.push_back(truth.delta(s) + faults.magnitude(s).value_or(Rational()));
  const RecoveryResult r = checked_recover(t, MeasurementSet(t, meas));
  EXPECT_EQ(r.fault_positions.positions(), std::vector<Session>{Session(2, 0)});
  EXPECT_EQ(r.magnitude(Session(2, 0)), Rational(5, 9));
}

TEST(Recover, EqualPairOfFaultsIsMisread) {
  const Topology t(4);
  const GroundTruth truth({Rational(1, 2), -3, 2});
  const Rational e(2);
  const FaultAssignment faults{{Session(1, 0), e}, {Session(2, 0), e}};
  const RecoveryResult r = checked_recover(t, simulate_measurements(t, truth, faults, Rational(1)));
  EXPECT_EQ(r.k_used, 1u);
  EXPECT_EQ(r.fault_positions.positions(), std::vector<Session>{Session(3, 0)});
  EXPECT_EQ(r.magnitude(Session(3, 0)), -e);
  for (int v = 1; v < 4; ++v) EXPECT_EQ(r.offsets[static_cast<std::size_t>(v - 1)], truth.offset(v) + e);
  const RecoveryVerdict verdict = verify_recovery(r, truth, faults);
  EXPECT_FALSE(verdict.correct);
  EXPECT_FALSE(verdict.mismatches.empty());
}

TEST(Recover, ThreeNodesCannotLocateASingleFault) {
  const Topology t(3);
  const GroundTruth truth({2, 5});
  const FaultAssignment faults{{Session(2, 1), Rational(3)}};
  const RecoveryResult r = checked_recover(t, simulate_measurements(t, truth, faults, Rational(1)));
  EXPECT_EQ(r.k_used, 1u);
  // All three single placements explain the data; the first in row order wins.
  EXPECT_EQ(r.fault_positions.positions(), std::vector<Session>{Session(1, 0)});
  EXPECT_EQ(r.ambiguity.size(), 2u);
  EXPECT_FALSE(verify_recovery(r, truth, faults).correct);
}

TEST(Recover, NoScanStopsAtFirstHit) {
  const Topology t(3);
  const MeasurementSet meas = simulate_measurements(t, GroundTruth({0, 0}), FaultAssignment{{Session(2, 1), Rational(1)}}, Rational(1));
  RecoveryOptions opts;
  opts.scan_ambiguity = false;
  const RecoveryResult r = recover(t, meas, opts);
  EXPECT_TRUE(r.ambiguity.empty());
  EXPECT_EQ(r.systems_solved, 2u);
}

TEST(Recover, RefusesLargeNetworksWithoutForce) {
  const Topology t(13);
  EXPECT_THROW(recover(t, MeasurementSet(t, Vector(t.sessions()))), InputError);
}

TEST(Recover, RandomWithinLowerBound) {
  // Lower bounds: N=4,5 -> 1, N=6 -> 2.
  const std::vector<std::pair<int, std::size_t>> cases{{4, 1}, {5, 1}, {6, 2}};
  for (const auto& [n, big_k] : cases) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(100 + n));
    const Topology t(n);
    for (int trial = 0; trial < 100; ++trial) {
      const GroundTruth truth = random_truth(t, rng);
      const std::size_t k = uniform_below(rng, big_k + 1);
      const FaultAssignment faults = random_faults(t, k, Rational(1), rng);
      const RecoveryResult r = checked_recover(t, simulate_measurements(t, truth, faults, Rational(1)));
      const RecoveryVerdict v = verify_recovery(r, truth, faults);
      EXPECT_TRUE(v.correct) << "N=" << n << " faults " << faults.to_string();
      EXPECT_TRUE(r.ambiguity.empty());
    }
  }
}

TEST(Recover, TerminatesWithinInjectedCount) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 60; ++trial) {
    const Topology t(static_cast<int>(uniform_in(rng, 3, 5)));
    const FaultAssignment faults = random_faults(t, uniform_below(rng, 4), Rational(1), rng);
    const RecoveryResult r = checked_recover(t, simulate_measurements(t, random_truth(t, rng), faults, Rational(1)));
    EXPECT_LE(r.k_used, faults.size());
  }
}

TEST(Recover, RelabelingEquivariance) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const Topology t(static_cast<int>(uniform_in(rng, 4, 6)));
    const GroundTruth truth = random_truth(t, rng);
    const FaultAssignment faults = random_faults(t, 1, Rational(1), rng);
    Permutation p = oracle::random_permutation(t.nodes() - 1, rng);
    for (auto& v : p) ++v;
    p.insert(p.begin(), 0);
    const MeasurementSet meas = simulate_measurements(t, truth, faults, Rational(1));
    const RecoveryResult a = checked_recover(t, meas);
    const RecoveryResult b = checked_recover(t, relabel(meas, p));
    EXPECT_EQ(b.fault_positions, relabel(a.fault_positions, p));
    const GroundTruth moved = relabel(GroundTruth(a.offsets), p);
    EXPECT_EQ(b.offsets, Vector(moved.offsets().begin(), moved.offsets().end()));
  }
}
