#pragma once

// Seeded randomized property checks shared by the unit tests and the
// acceptance runner. Each returns the number of violating cases.

#include "oracles.hpp"

#include <clocksync/io.hpp>

#include <cstdint>
#include <iostream>
#include <string>

namespace props {

using namespace clocksync;

inline FaultAssignment with_magnitudes(const FaultAssignment& positions, std::mt19937_64& rng) {
  FaultAssignment out;
  for (const auto& s : positions.positions()) {
    const long n = uniform_in(rng, -5, 4);
    out.add(s, Rational(n >= 0 ? n + 1 : n));
  }
  return out;
}

// Estimated placement of size k sharing `overlap` positions with `actual`.
inline FaultAssignment estimated_with_overlap(const Topology& t, const FaultAssignment& actual, std::size_t k,
                                              std::size_t overlap, std::mt19937_64& rng) {
  FaultAssignment est;
  auto act = actual.positions();
  for (std::size_t i = act.size(); i > 1; --i) std::swap(act[i - 1], act[uniform_below(rng, i)]);
  for (std::size_t i = 0; i < overlap && i < act.size(); ++i) est.add(act[i]);
  while (est.size() < k) {
    const Session s = t.session_at(uniform_below(rng, t.sessions()));
    if (!est.contains(s) && !actual.contains(s)) est.add(s);
  }
  return est;
}

// rank(A'|b') == rank(A') for random configurations with N <= 6.
inline std::size_t consistency_failures(std::uint64_t seed, int count) {
  std::mt19937_64 rng(seed);
  std::size_t bad = 0;
  for (int trial = 0; trial < count; ++trial) {
    const Topology t(static_cast<int>(uniform_in(rng, 3, 6)));
    const std::size_t big_k = uniform_below(rng, std::min<std::size_t>(t.sessions(), 6) + 1);
    const FaultAssignment actual = random_positions(t, big_k, rng);
    const FaultAssignment estimated = random_positions(t, uniform_below(rng, big_k + 1), rng);
    const LinearSystem s = build_revectorized_system(t, estimated, actual, random_truth(t, rng));
    if (rank(s.a) != rank(augment(s.a, s.b))) ++bad;
  }
  return bad;
}

// Structure of the solution space of A'x' = b' when the rank condition holds
// with l > 0: the entire space is {d = truth, ehat_c = e_c free for c in the
// correctly positioned set, other ehat = 0, other e = 0}.
inline bool solution_space_holds(const Topology& t, const FaultAssignment& actual, const FaultAssignment& estimated,
                         const GroundTruth& truth, std::mt19937_64& rng) {
  const LinearSystem s = build_revectorized_system(t, estimated, actual, truth);
  const std::size_t l = correctly_positioned_count(estimated, actual);
  const SolveOutcome o = classify_solve(s.a, s.b);
  if (o.kind != SolveKind::Infinite || o.nullity != l) return false;
  const ColumnLayout& lay = s.layout;

  // Paired columns (ehat_c, e_c) for c in the common set.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<std::size_t> zero_cols;
  for (std::size_t i = 0; i < lay.estimated.size(); ++i) {
    auto it = std::find(lay.actual.begin(), lay.actual.end(), lay.estimated[i]);
    if (it == lay.actual.end())
      zero_cols.push_back(lay.estimated_col(i));
    else
      pairs.emplace_back(lay.estimated_col(i), lay.actual_col(static_cast<std::size_t>(it - lay.actual.begin())));
  }
  for (std::size_t i = 0; i < lay.actual.size(); ++i)
    if (!estimated.contains(lay.actual[i])) zero_cols.push_back(lay.actual_col(i));

  auto in_s = [&](const Vector& x, bool homogeneous) {
    for (int v = 1; v < t.nodes(); ++v)
      if (x[lay.offset_col(v)] != (homogeneous ? Rational() : truth.offset(v))) return false;
    for (auto c : zero_cols)
      if (!x[c].is_zero()) return false;
    for (auto [a, b] : pairs)
      if (x[a] != x[b]) return false;
    return true;
  };
  // Solver's description lies inside S ...
  if (!in_s(o.particular, false)) return false;
  for (const auto& v : o.null_basis)
    if (!in_s(v, true)) return false;
  // ... and every point of S's parametric description solves the system.
  for (int draw = 0; draw < 3; ++draw) {
    Vector x(lay.total());
    for (int v = 1; v < t.nodes(); ++v) x[lay.offset_col(v)] = truth.offset(v);
    for (auto [a, b] : pairs) x[a] = x[b] = Rational(uniform_in(rng, -50, 50), uniform_in(rng, 1, 9));
    if (multiply(s.a, x) != s.b) return false;
  }
  return true;
}

// Draws configurations until `count` of them qualify (l > 0, condition holds).
inline std::size_t solution_space_failures(std::uint64_t seed, int count) {
  std::mt19937_64 rng(seed);
  std::size_t bad = 0;
  int done = 0;
  while (done < count) {
    const Topology t(static_cast<int>(uniform_in(rng, 4, 7)));
    const std::size_t big_k = 1 + uniform_below(rng, static_cast<std::size_t>(t.nodes() - 2));
    const FaultAssignment actual = random_positions(t, big_k, rng);
    const std::size_t k = 1 + uniform_below(rng, big_k);
    const std::size_t overlap = 1 + uniform_below(rng, k);
    const FaultAssignment estimated = estimated_with_overlap(t, actual, k, overlap, rng);
    if (correctly_positioned_count(estimated, actual) == 0) continue;
    if (!check_sufficient_condition(t, actual, estimated).holds) continue;
    ++done;
    if (!solution_space_holds(t, actual, estimated, random_truth(t, rng), rng)) ++bad;
  }
  return bad;
}

// Rouché–Capelli classification against minor-expansion ranks, <= 5x5.
inline std::size_t rouche_capelli_failures(std::uint64_t seed, int count) {
  std::mt19937_64 rng(seed);
  std::size_t bad = 0;
  for (int trial = 0; trial < count; ++trial) {
    const Matrix a = oracle::random_small_matrix(rng, 5);
    Vector b(a.rows());
    if (trial % 2 == 0) {
      Vector x(a.cols());
      for (auto& v : x) v = oracle::random_entry(rng);
      b = multiply(a, x);
    } else {
      for (auto& v : b) v = oracle::random_entry(rng);
    }
    // Augmented matrix may be 5x6; the oracle still works, just slower.
    const std::size_t ra = oracle::minor_rank(a);
    const std::size_t rab = oracle::minor_rank(augment(a, b));
    const SolveKind expected = rab != ra ? SolveKind::NoSolution : (ra == a.cols() ? SolveKind::Unique : SolveKind::Infinite);
    const SolveOutcome o = classify_solve(a, b);
    bool ok = o.kind == expected && o.rank_a == ra && o.rank_augmented == rab && rank(a) == ra;
    if (ok && o.kind == SolveKind::Unique) ok = multiply(a, o.solution) == b;
    if (ok && o.kind == SolveKind::Infinite) {
      ok = o.nullity == a.cols() - ra && o.null_basis.size() == o.nullity && multiply(a, o.particular) == b;
      for (const auto& v : o.null_basis) ok = ok && multiply(a, v) == Vector(a.rows());
    }
    if (!ok) ++bad;
  }
  return bad;
}

// Reduced-mode reasoning relies on the verdict being constant on orbits:
// compare each sampled (actual, estimated) with its image under the
// permutation that sends `actual` to its orbit representative.
inline std::size_t orbit_verdict_failures(std::uint64_t seed, int count) {
  std::mt19937_64 rng(seed);
  std::size_t bad = 0;
  for (int trial = 0; trial < count; ++trial) {
    const Topology t(static_cast<int>(uniform_in(rng, 4, 6)));
    const RankConditionEngine engine(t);
    const std::size_t big_k = uniform_below(rng, static_cast<std::size_t>(t.nodes() - 1));
    const FaultAssignment actual = random_positions(t, big_k, rng);
    const FaultAssignment estimated = random_positions(t, uniform_below(rng, big_k + 1), rng);
    const CanonicalForm cf = canonical_form(t.nodes(), actual.positions());
    const FaultAssignment rep_actual(std::span<const Session>(cf.edges));
    const FaultAssignment rep_estimated = relabel(estimated, cf.perm);
    const bool direct = check_sufficient_condition(t, actual, estimated).holds;
    const bool via_rep = check_sufficient_condition(t, rep_actual, rep_estimated).holds;
    RankConditionEngine::RowMask mask{};
    for (const auto& s : actual.positions()) RankConditionEngine::set(mask, t.row_of(s));
    for (const auto& s : estimated.positions()) RankConditionEngine::set(mask, t.row_of(s));
    const std::size_t l = correctly_positioned_count(estimated, actual);
    const bool fast = engine.rank_a_prime(mask) == static_cast<std::size_t>(t.nodes() - 1) + big_k + estimated.size() - l;
    if (direct != via_rep || direct != fast) ++bad;
  }
  return bad;
}

// simulate -> serialize -> parse -> recover -> verify.
inline std::size_t round_trip_failures(int n, std::size_t big_k, std::uint64_t seed, int trials) {
  std::mt19937_64 rng(seed);
  const Topology t(n);
  std::size_t bad = 0;
  for (int trial = 0; trial < trials; ++trial) {
    const GroundTruth truth = random_truth(t, rng);
    const Rational period(uniform_in(rng, 1, 40), uniform_in(rng, 1, 8));
    const FaultAssignment faults = random_faults(t, big_k, period, rng);
    const MeasurementSet meas = simulate_measurements(t, truth, faults, period);
    const std::string text = io::measurement_file_json(meas).dump();
    const io::MeasurementFile file = io::parse_measurement_file(io::Json::parse(text));
    const io::TruthFile side = io::parse_truth_file(io::Json::parse(io::truth_file_json(truth, faults, period, seed).dump()));
    const RecoveryResult r = recover(file.topology, file.measurements);
    if (!reproduces_measurements(r, meas) || !verify_recovery(r, side.truth, side.faults).correct) ++bad;
  }
  return bad;
}

inline TraceScenario random_scenario(std::mt19937_64& rng) {
  TraceScenario sc;
  sc.period = Rational(uniform_in(rng, 1, 100), uniform_in(rng, 1, 16));
  sc.offset = Rational(uniform_in(rng, -100000, 100000), uniform_in(rng, 1, 64));
  sc.impulse_phase = Rational(uniform_in(rng, -1000, 1000), uniform_in(rng, 1, 32));
  sc.initiator_clock = Rational(uniform_in(rng, -100000, 100000), uniform_in(rng, 1, 64));
  sc.send_time = Rational(uniform_in(rng, 0, 100000), uniform_in(rng, 1, 64));
  // Delays span zero to a few periods.
  auto delay = [&] { return sc.period * Rational(uniform_in(rng, 0, 400), 100); };
  sc.request_delay = delay();
  sc.turnaround = delay();
  sc.reply_delay = delay();
  return sc;
}

// True offset among candidates; every other candidate off by nonzero k*T.
inline std::size_t trace_failures(std::uint64_t seed, int count) {
  std::mt19937_64 rng(seed);
  std::size_t bad = 0;
  for (int trial = 0; trial < count; ++trial) {
    const TraceScenario sc = random_scenario(rng);
    const AmbiguitySet amb = candidate_offsets(generate_trace(sc));
    bool found = false;
    bool ok = amb.offsets.size() == static_cast<std::size_t>(amb.period_sums.empty() ? 0 : amb.period_sums.back() + 1);
    for (const auto& c : amb.offsets) {
      if (c == sc.offset) {
        found = true;
        continue;
      }
      const Rational n = (c - sc.offset) / sc.period;
      ok = ok && n.is_integer() && !n.is_zero();
    }
    if (!found || !ok) ++bad;
  }
  return bad;
}

}  // namespace props
