#pragma once

// Resilience bounds of the recovery algorithm.
//
// The sufficient condition: for every actual placement of K faults and every
// estimated placement of k <= K faults, the re-vectorized matrix A' has rank
// N-1+k+K-l, l being the number of correctly positioned estimates. The lower
// bound is the largest K for which the condition holds at every K' <= K.

#include <clocksync/combinations.hpp>
#include <clocksync/edge_orbits.hpp>
#include <clocksync/errors.hpp>
#include <clocksync/linalg.hpp>
#include <clocksync/sync_model.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace clocksync {

struct RankConditionCheck {
  int n = 0;
  std::size_t actual_count = 0;      ///< K
  std::size_t estimated_count = 0;   ///< k
  FaultAssignment actual;
  FaultAssignment estimated;
  std::size_t correctly_positioned = 0;  ///< l
  std::size_t rank_a_prime = 0;
  std::size_t expected_rank = 0;         ///< N-1+k+K-l
  bool holds = false;
};

/// Builds A' (zero truth; rank does not depend on it) and compares its
/// exact rank with N-1+k+K-l.
inline RankConditionCheck check_sufficient_condition(const Topology& topo, const FaultAssignment& actual,
                                                     const FaultAssignment& estimated) {
  if (estimated.size() > actual.size())
    throw InputError("estimated fault count k=" + std::to_string(estimated.size()) + " exceeds actual count K=" +
                     std::to_string(actual.size()));
  const LinearSystem sys = build_revectorized_system(topo, estimated, actual, GroundTruth::zeros(topo));
  RankConditionCheck c;
  c.n = topo.nodes();
  c.actual_count = actual.size();
  c.estimated_count = estimated.size();
  c.actual = actual.positions_only();
  c.estimated = estimated.positions_only();
  c.correctly_positioned = correctly_positioned_count(estimated, actual);
  c.rank_a_prime = rank(sys.a);
  c.expected_rank = static_cast<std::size_t>(topo.nodes() - 1) + c.estimated_count + c.actual_count -
                    c.correctly_positioned;
  c.holds = c.rank_a_prime == c.expected_rank;
  return c;
}

/// Fast rank of A' for the bulk enumeration.
///
/// Every fault column of A' is a signed unit vector, so eliminating on those
/// columns first clears their rows: rank(A') equals the number of distinct
/// fault rows plus the rank of the offset block restricted to the remaining
/// rows. The remaining block is reduced fraction-free with an early exit at
/// full rank N-1.
class RankConditionEngine {
 public:
  static constexpr std::size_t kMaxRows = 256;
  using RowMask = std::array<std::uint64_t, kMaxRows / 64>;

  explicit RankConditionEngine(const Topology& topo) : topo_(topo), sessions_(topo.all_sessions()) {
    if (topo.sessions() > kMaxRows) throw InputError("fast rank engine supports at most 256 sessions");
  }

  [[nodiscard]] const Topology& topology() const { return topo_; }

  static void set(RowMask& m, std::size_t r) { m[r / 64] |= 1ULL << (r % 64); }
  static bool test(const RowMask& m, std::size_t r) { return (m[r / 64] >> (r % 64)) & 1ULL; }
  static std::size_t popcount(const RowMask& m) {
    std::size_t c = 0;
    for (auto w : m) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }

  /// rank(A') given the union of estimated and actual fault rows.
  [[nodiscard]] std::size_t rank_a_prime(const RowMask& fault_rows) const {
    return popcount(fault_rows) + residual_rank(fault_rows);
  }

  /// Rank of the offset block over rows not in `removed`.
  [[nodiscard]] std::size_t residual_rank(const RowMask& removed) const {
    const auto width = static_cast<std::size_t>(topo_.nodes() - 1);
    // basis[c] holds the reduced row whose first nonzero is column c.
    std::array<std::array<std::int64_t, 32>, 32> basis{};
    std::array<bool, 32> has{};
    std::size_t r = 0;
    for (std::size_t row = 0; row < sessions_.size() && r < width; ++row) {
      if (test(removed, row)) continue;
      std::array<std::int64_t, 32> v{};
      const Session& s = sessions_[row];
      v[static_cast<std::size_t>(s.i - 1)] = 1;
      if (s.j != 0) v[static_cast<std::size_t>(s.j - 1)] = -1;
      for (std::size_t c = 0; c < width; ++c) {
        if (v[c] == 0) continue;
        if (!has[c]) {
          basis[c] = v;
          has[c] = true;
          ++r;
          break;
        }
        const std::int64_t a = basis[c][c];
        const std::int64_t b = v[c];
        std::int64_t g = 0;
        for (std::size_t j = c; j < width; ++j) {
          std::int64_t x = 0;
          std::int64_t y = 0;
          if (__builtin_mul_overflow(v[j], a, &x) || __builtin_mul_overflow(basis[c][j], b, &y) ||
              __builtin_sub_overflow(x, y, &v[j]))
            return exact_residual_rank(removed);
          g = std::gcd(g, v[j]);
        }
        if (g > 1)
          for (std::size_t j = c; j < width; ++j) v[j] /= g;
      }
    }
    return r;
  }

 private:
  [[nodiscard]] std::size_t exact_residual_rank(const RowMask& removed) const {
    const auto width = static_cast<std::size_t>(topo_.nodes() - 1);
    std::vector<std::size_t> kept;
    for (std::size_t row = 0; row < sessions_.size(); ++row)
      if (!test(removed, row)) kept.push_back(row);
    if (kept.empty()) return 0;
    Matrix m(kept.size(), width);
    for (std::size_t k = 0; k < kept.size(); ++k) {
      const Session& s = sessions_[kept[k]];
      m(k, static_cast<std::size_t>(s.i - 1)) = Rational(1);
      if (s.j != 0) m(k, static_cast<std::size_t>(s.j - 1)) = Rational(-1);
    }
    return rank(m);
  }

  Topology topo_;
  std::vector<Session> sessions_;
};

enum class BoundMode { Reduced, Exhaustive };

struct BoundOptions {
  BoundMode mode = BoundMode::Reduced;
  /// Largest K to examine; defaults to N-2.
  std::optional<std::size_t> max_k;
  /// Wall-clock budget in seconds; zero or negative means unlimited.
  double budget_seconds = 0;
  unsigned jobs = 1;
  bool force = false;
};

/// Outcome for one K.
struct KVerdict {
  std::size_t k_faults = 0;
  bool verified = false;
  std::optional<RankConditionCheck> witness;  ///< first failing configuration
  std::size_t classes_examined = 0;
  std::uint64_t rank_checks = 0;
};

struct ResilienceReport {
  int n = 0;
  BoundMode mode = BoundMode::Reduced;
  std::size_t lower_bound = 0;
  std::vector<KVerdict> per_k;
  std::size_t isomorphism_classes_examined = 0;
  std::uint64_t rank_checks_performed = 0;
  bool complete = true;          ///< false when the budget ran out
  bool capped = false;           ///< stopped at max_k with every K verified
  double elapsed_seconds = 0;
};

namespace detail {

inline std::uint64_t first_failure_in_block(const RankConditionEngine& engine, const RankConditionEngine::RowMask& actual,
                                            std::size_t k, unsigned jobs, std::atomic<std::uint64_t>& checks) {
  constexpr std::uint64_t kNone = std::numeric_limits<std::uint64_t>::max();
  const std::size_t m = engine.topology().sessions();
  const auto width = static_cast<std::size_t>(engine.topology().nodes() - 1);
  const std::uint64_t total = binomial(m, k);

  auto scan = [&](std::uint64_t begin, std::uint64_t end, const std::atomic<std::uint64_t>* stop) -> std::uint64_t {
    std::vector<std::size_t> c = unrank_combination(begin, m, k);
    std::uint64_t local = 0;
    for (std::uint64_t idx = begin; idx < end; ++idx) {
      if (stop && (idx & 1023) == 0 && stop->load(std::memory_order_relaxed) < idx) break;
      RankConditionEngine::RowMask mask = actual;
      for (std::size_t r : c) RankConditionEngine::set(mask, r);
      ++local;
      if (engine.residual_rank(mask) != width) {
        checks += local;
        return idx;
      }
      if (idx + 1 < end) next_combination(c, m);
    }
    checks += local;
    return kNone;
  };

  constexpr std::uint64_t kChunk = 1 << 14;
  if (jobs <= 1 || total < 2 * kChunk) return scan(0, total, nullptr);

  std::atomic<std::uint64_t> best{kNone};
  std::atomic<std::uint64_t> next_chunk{0};
  auto worker = [&] {
    for (;;) {
      const std::uint64_t begin = next_chunk.fetch_add(kChunk);
      if (begin >= total || begin > best.load()) return;
      const std::uint64_t hit = scan(begin, std::min(total, begin + kChunk), &best);
      std::uint64_t cur = best.load();
      while (hit < cur && !best.compare_exchange_weak(cur, hit)) {
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return best.load();
}

}  // namespace detail

inline ResilienceReport lower_bound(const Topology& topo, const BoundOptions& opts = {}) {
  if (topo.nodes() > 12 && !opts.force) throw InputError("bound computation for N > 12 requires force");
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };
  auto out_of_time = [&] { return opts.budget_seconds > 0 && elapsed() > opts.budget_seconds; };

  const RankConditionEngine engine(topo);
  const std::size_t m = topo.sessions();
  const std::vector<Session> sessions = topo.all_sessions();
  const std::size_t limit = std::min<std::size_t>(static_cast<std::size_t>(topo.nodes() - 2), opts.max_k.value_or(m));

  ResilienceReport report;
  report.n = topo.nodes();
  report.mode = opts.mode;

  auto finish = [&](std::size_t bound) {
    report.lower_bound = bound;
    report.elapsed_seconds = elapsed();
    return report;
  };

  for (std::size_t big_k = 0; big_k <= limit; ++big_k) {
    KVerdict verdict;
    verdict.k_faults = big_k;

    std::vector<FaultAssignment> actuals;
    if (opts.mode == BoundMode::Reduced) {
      actuals = enumerate_actual_classes(topo, big_k);
    } else {
      std::vector<std::size_t> c = first_combination(big_k);
      do {
        FaultAssignment a;
        for (std::size_t r : c) a.add(sessions[r]);
        actuals.push_back(std::move(a));
      } while (next_combination(c, m));
    }

    std::atomic<std::uint64_t> checks{0};
    for (const auto& actual : actuals) {
      ++verdict.classes_examined;
      RankConditionEngine::RowMask actual_rows{};
      for (const auto& s : actual.positions()) RankConditionEngine::set(actual_rows, topo.row_of(s));
      for (std::size_t k = 0; k <= big_k; ++k) {
        const std::uint64_t hit = detail::first_failure_in_block(engine, actual_rows, k, opts.jobs, checks);
        if (hit != std::numeric_limits<std::uint64_t>::max()) {
          FaultAssignment estimated;
          for (std::size_t r : unrank_combination(hit, m, k)) estimated.add(sessions[r]);
          // Re-derive the witness from the explicitly built A'.
          RankConditionCheck witness = check_sufficient_condition(topo, actual, estimated);
          if (witness.holds) throw std::logic_error("fast rank engine disagrees with exact rank of A'");
          verdict.witness = std::move(witness);
          verdict.rank_checks = checks.load();
          report.isomorphism_classes_examined += verdict.classes_examined;
          report.rank_checks_performed += verdict.rank_checks;
          report.per_k.push_back(std::move(verdict));
          return finish(big_k == 0 ? 0 : big_k - 1);
        }
        if (out_of_time()) {
          report.complete = false;
          report.rank_checks_performed += checks.load();
          report.isomorphism_classes_examined += verdict.classes_examined;
          return finish(big_k == 0 ? 0 : big_k - 1);
        }
      }
    }
    verdict.verified = true;
    verdict.rank_checks = checks.load();
    report.isomorphism_classes_examined += verdict.classes_examined;
    report.rank_checks_performed += verdict.rank_checks;
    report.per_k.push_back(std::move(verdict));
  }
  report.capped = limit < static_cast<std::size_t>(topo.nodes() - 2);
  return finish(limit);
}

/// lower_bound / (N(N-1)/2).
inline Rational tolerance_fraction(const ResilienceReport& report) {
  const long sessions = static_cast<long>(report.n) * (report.n - 1) / 2;
  return Rational(static_cast<long>(report.lower_bound), sessions);
}

/// Tolerance in percent, rounded half up to an integer.
inline long tolerance_percent_rounded(const Rational& fraction) {
  const Rational scaled = fraction * Rational(100) + Rational(1, 2);
  return scaled.floor().get_si();
}

struct UpperBoundCounterexample {
  FaultAssignment positions;
  SolveOutcome evidence;
  std::size_t rank_a = 0;
  std::size_t columns = 0;
};

/// Every session touching node 1 is faulty (plus the first extra sessions in
/// row order up to K). Estimating exactly the actual placement leaves the
/// offset column of node 1 dependent on the fault columns, so the system is
/// consistent but not uniquely solvable.
inline UpperBoundCounterexample upper_bound_counterexample(const Topology& topo, std::size_t count) {
  const auto needed = static_cast<std::size_t>(topo.nodes() - 1);
  if (count < needed)
    throw InputError("counterexample needs K >= N-1 = " + std::to_string(needed) + ", got " + std::to_string(count));
  if (count > topo.sessions()) throw InputError("K exceeds the number of sessions");

  FaultAssignment actual;
  for (int v = 0; v < topo.nodes(); ++v)
    if (v != 1) actual.add(Session(v, 1), Rational(1));
  for (const auto& s : topo.all_sessions()) {
    if (actual.size() == count) break;
    if (!actual.contains(s)) actual.add(s, Rational(1));
  }

  // Zero offsets with unit faults; any nonzero magnitudes give the same rank picture.
  std::vector<Rational> meas(topo.sessions());
  for (const auto& [s, e] : actual.entries()) meas[topo.row_of(s)] = *e;
  const MeasurementSet ms(topo, std::move(meas));
  const LinearSystem sys = build_estimation_system(topo, actual.positions_only(), ms);

  UpperBoundCounterexample out;
  out.positions = actual.positions_only();
  out.evidence = classify_solve(sys.a, sys.b);
  out.rank_a = out.evidence.rank_a;
  out.columns = sys.a.cols();
  return out;
}

inline std::string_view to_string(BoundMode m) { return m == BoundMode::Reduced ? "reduced" : "exhaustive"; }

}  // namespace clocksync
