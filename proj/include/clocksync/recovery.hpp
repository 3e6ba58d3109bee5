#pragma once

// Fault-tolerant network clock synchronization: search for the smallest
// number of faulty sessions that makes all measurements exactly consistent.

#include <clocksync/combinations.hpp>
#include <clocksync/errors.hpp>
#include <clocksync/linalg.hpp>
#include <clocksync/sync_model.hpp>

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace clocksync {

/// Placement and solution accepted at the minimal fault count.
struct RecoveryCandidate {
  FaultAssignment faults;   ///< positions with estimated magnitudes
  Vector offsets;           ///< estimated offsets of nodes 1..N-1
};

struct RecoveryResult {
  std::size_t k_used = 0;
  FaultAssignment fault_positions;   ///< carries the estimated magnitudes
  Vector offsets;
  std::vector<RecoveryCandidate> ambiguity;  ///< other acceptable placements at k_used
  std::size_t systems_solved = 0;

  [[nodiscard]] Rational magnitude(const Session& s) const { return fault_positions.magnitude(s).value(); }
};

struct RecoveryOptions {
  /// Keep scanning the minimal k after the first hit to fill `ambiguity`.
  bool scan_ambiguity = true;
  /// Permit N above the default cap of 12.
  bool force = false;
};

inline constexpr int kMaxNodesWithoutForce = 12;

namespace detail {

inline std::optional<RecoveryCandidate> try_placement(const Topology& topo, const MeasurementSet& meas,
                                                      const std::vector<Session>& placement) {
  LinearSystem sys = build_estimation_system(topo, FaultAssignment(std::span<const Session>(placement)), meas);
  SolveOutcome out = classify_solve(sys.a, sys.b);
  if (out.kind != SolveKind::Unique) return std::nullopt;
  RecoveryCandidate cand;
  const auto offsets = static_cast<std::size_t>(sys.layout.offset_cols);
  for (std::size_t k = 0; k < placement.size(); ++k) {
    const Rational& e = out.solution[sys.layout.estimated_col(k)];
    // A zero estimate means fewer faults already explain the data.
    if (e.is_zero()) return std::nullopt;
    cand.faults.add(placement[k], e);
  }
  cand.offsets.assign(out.solution.begin(), out.solution.begin() + static_cast<std::ptrdiff_t>(offsets));
  return cand;
}

}  // namespace detail

inline RecoveryResult recover(const Topology& topo, const MeasurementSet& meas, const RecoveryOptions& opts = {}) {
  if (topo.nodes() > kMaxNodesWithoutForce && !opts.force)
    throw InputError("recovery for N > 12 requires force (enumeration cost)");
  if (meas.topology() != topo) throw InputError("measurement set was built for a different node count");

  const std::size_t m = topo.sessions();
  const std::vector<Session> sessions = topo.all_sessions();
  RecoveryResult result;
  bool found = false;

  for (std::size_t k = 0; k <= m; ++k) {
    std::vector<std::size_t> rows = first_combination(k);
    do {
      std::vector<Session> placement;
      placement.reserve(k);
      for (std::size_t r : rows) placement.push_back(sessions[r]);
      ++result.systems_solved;
      auto cand = detail::try_placement(topo, meas, placement);
      if (!cand) continue;
      if (!found) {
        found = true;
        result.k_used = k;
        result.fault_positions = std::move(cand->faults);
        result.offsets = std::move(cand->offsets);
        if (!opts.scan_ambiguity) return result;
      } else {
        result.ambiguity.push_back(std::move(*cand));
      }
    } while (next_combination(rows, m));
    if (found) return result;
  }
  throw UnrecoverableError("no fault placement yields a unique consistent solution");
}

/// True iff the estimates in `result` reproduce every measurement exactly.
inline bool reproduces_measurements(const RecoveryResult& result, const MeasurementSet& meas) {
  const Topology& topo = meas.topology();
  for (std::size_t r = 0; r < topo.sessions(); ++r) {
    const Session s = topo.session_at(r);
    auto off = [&](int node) { return node == 0 ? Rational() : result.offsets.at(static_cast<std::size_t>(node - 1)); };
    Rational predicted = off(s.i) - off(s.j);
    if (auto e = result.fault_positions.magnitude(s)) predicted += *e;
    if (predicted != meas.by_row()[r]) return false;
  }
  return true;
}

struct RecoveryVerdict {
  bool correct = false;
  std::vector<std::string> mismatches;
};

/// Compares a recovery against the injected ground truth and faults.
inline RecoveryVerdict verify_recovery(const RecoveryResult& result, const GroundTruth& truth,
                                       const FaultAssignment& actual) {
  RecoveryVerdict v;
  for (int node = 1; node < truth.nodes(); ++node) {
    const auto idx = static_cast<std::size_t>(node - 1);
    if (idx >= result.offsets.size() || result.offsets[idx] != truth.offset(node))
      v.mismatches.push_back("offset of node " + std::to_string(node) + " is " +
                             (idx < result.offsets.size() ? result.offsets[idx].to_string() : std::string("missing")) +
                             ", expected " + truth.offset(node).to_string());
  }
  if (result.fault_positions.positions() != actual.positions()) {
    v.mismatches.push_back("fault positions " + result.fault_positions.positions_only().to_string() + " differ from " +
                           actual.positions_only().to_string());
  } else {
    for (const auto& [s, e] : actual.entries()) {
      if (e && result.fault_positions.magnitude(s) != e)
        v.mismatches.push_back("fault magnitude on " + s.to_string() + " is " +
                               result.fault_positions.magnitude(s)->to_string() + ", expected " + e->to_string());
    }
  }
  v.correct = v.mismatches.empty();
  return v;
}

}  // namespace clocksync
