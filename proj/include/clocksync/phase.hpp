#pragma once

// Dirac-comb assisted NTP sessions and the nT fault model.
//
// A session between an initiator A and a responder B exchanges a request and
// a reply. With both nodes sensing the same periodic impulse train (period
// T), the round trip satisfies RTT = theta_q + theta_p + (i + j) T where i
// and j count the impulse periods elapsed while the request and the reply
// were in flight. Any split of i + j gives a candidate offset; choosing the
// wrong one is off by a nonzero multiple of T.

#include <clocksync/errors.hpp>
#include <clocksync/rational.hpp>
#include <clocksync/sync_model.hpp>

#include <cstdint>
#include <limits>
#include <random>
#include <set>
#include <utility>
#include <vector>

namespace clocksync {

/// Timestamps t1..t4 (A sends, B receives, B replies, A receives) in each
/// node's own clock, and the elapsed clock time since the last impulse at
/// each of them.
struct SessionTrace {
  Rational t1, t2, t3, t4;
  Rational phi1, phi2, phi3, phi4;
  Rational period;

  void validate() const {
    if (period.sign() <= 0) throw InputError("period must be positive");
    for (const Rational* phi : {&phi1, &phi2, &phi3, &phi4})
      if (phi->sign() < 0 || *phi >= period) throw InputError("phase " + phi->to_string() + " outside [0, T)");
    if (t4 < t1 || t3 < t2) throw InputError("trace timestamps violate causality");
  }

  [[nodiscard]] Rational round_trip() const { return (t4 - t1) - (t3 - t2); }
};

struct PhaseDifferences {
  Rational theta_q;  ///< request
  Rational theta_p;  ///< reply
};

inline PhaseDifferences rounded_phase_differences(const SessionTrace& trace) {
  trace.validate();
  auto wrap = [&](Rational d) { return d.sign() < 0 ? d + trace.period : d; };
  return {wrap(trace.phi2 - trace.phi1), wrap(trace.phi4 - trace.phi3)};
}

struct AmbiguitySet {
  Rational rtt;
  Rational theta_q;
  Rational theta_p;
  std::vector<long> period_sums;   ///< admissible i + j
  std::vector<Rational> offsets;   ///< candidate (B clock - A clock), ascending, distinct
};

/// Enumerates the candidate offsets of a session. `slack` admits period sums
/// whose residual |RTT - theta_q - theta_p - sT| is within the window; with
/// zero slack the equation must hold exactly.
inline AmbiguitySet candidate_offsets(const SessionTrace& trace, const Rational& slack = Rational()) {
  if (slack.sign() < 0) throw InputError("slack must be non-negative");
  const auto [tq, tp] = rounded_phase_differences(trace);
  AmbiguitySet out{trace.round_trip(), tq, tp, {}, {}};
  if (out.rtt.sign() < 0) throw InputError("negative round-trip time " + out.rtt.to_string());

  const Rational base = out.rtt - tq - tp;
  const Rational& period = trace.period;
  // s ranges over integers with |base - sT| <= slack and s >= 0.
  mpz_class lo = -((-(base - slack) / period).floor());
  mpz_class hi = ((base + slack) / period).floor();
  if (lo < 0) lo = 0;
  std::set<Rational> candidates;
  for (mpz_class s = lo; s <= hi; ++s) {
    out.period_sums.push_back(s.get_si());
    const Rational forward = (trace.t2 - trace.t1) - tq;
    for (long i = 0; i <= s.get_si(); ++i) candidates.insert(forward - Rational(i) * period);
  }
  if (out.period_sums.empty())
    throw InputError("inconsistent trace: no non-negative period count satisfies the round-trip equation");
  out.offsets.assign(candidates.begin(), candidates.end());
  return out;
}

/// Parameters of the forward model. Times are Newtonian; the clocks run at
/// the same rate, the responder ahead of the initiator by `offset`.
struct TraceScenario {
  Rational offset;          ///< responder clock - initiator clock
  Rational period;
  Rational impulse_phase;   ///< Newtonian time of one impulse
  Rational initiator_clock; ///< initiator clock reading at Newtonian time 0
  Rational send_time;
  Rational request_delay;
  Rational turnaround;
  Rational reply_delay;
};

inline SessionTrace generate_trace(const TraceScenario& sc) {
  if (sc.period.sign() <= 0) throw InputError("period must be positive");
  if (sc.request_delay.sign() < 0 || sc.turnaround.sign() < 0 || sc.reply_delay.sign() < 0)
    throw InputError("delays must be non-negative");
  auto phase = [&](const Rational& t) {
    const Rational x = (t - sc.impulse_phase) / sc.period;
    return (x - Rational(x.floor(), mpz_class(1))) * sc.period;
  };
  const Rational s1 = sc.send_time;
  const Rational s2 = s1 + sc.request_delay;
  const Rational s3 = s2 + sc.turnaround;
  const Rational s4 = s3 + sc.reply_delay;
  const Rational a = sc.initiator_clock;
  const Rational b = sc.initiator_clock + sc.offset;
  return {s1 + a, s2 + b, s3 + b, s4 + a, phase(s1), phase(s2), phase(s3), phase(s4), sc.period};
}

/// Number of impulse periods elapsed in flight for the request under the
/// forward model (the i of the correct split).
inline long elapsed_periods(const Rational& delay, const Rational& period) { return (delay / period).floor().get_si(); }

struct SessionClass {
  bool faulty = false;
  long periods = 0;  ///< n in measured = reference + nT (+ small displacement)
};

/// Rounds (measured - reference) / T to the nearest integer. A residual of
/// exactly T/2 is ambiguous and rejected.
inline SessionClass classify_session(const Rational& measured, const Rational& reference, const Rational& period) {
  if (period.sign() <= 0) throw InputError("period must be positive");
  const Rational x = (measured - reference) / period;
  const mpz_class n = (x + Rational(1, 2)).floor();
  const Rational residual = abs(measured - reference - Rational(n, 1) * period);
  if (residual * Rational(2) == period)
    throw InputError("displacement " + (measured - reference).to_string() + " is exactly half a period");
  return {n != 0, n.get_si()};
}

/// Measurements implied by the fault model: every session reports the true
/// offset plus its fault, if any.
inline MeasurementSet simulate_measurements(const Topology& topo, const GroundTruth& truth,
                                            const FaultAssignment& faults, const Rational& period) {
  if (period.sign() <= 0) throw InputError("period must be positive");
  if (truth.nodes() != topo.nodes()) throw InputError("ground truth was built for a different node count");
  faults.validate(topo);
  std::vector<Rational> values(topo.sessions());
  for (std::size_t r = 0; r < topo.sessions(); ++r) values[r] = truth.delta(topo.session_at(r));
  for (const auto& [s, e] : faults.entries()) {
    if (!e) throw InputError("fault on " + s.to_string() + " has no magnitude");
    const Rational n = *e / period;
    if (!n.is_integer() || n.is_zero())
      throw InputError("fault magnitude " + e->to_string() + " on " + s.to_string() +
                       " is not a nonzero integer multiple of T=" + period.to_string());
    values[topo.row_of(s)] += *e;
  }
  return {topo, std::move(values)};
}

// Seeded generators. Only raw mt19937_64 output is used (its sequence is fixed
// by the standard), so simulations are identical across platforms.

inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  if (bound == 0) throw InputError("empty range");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % bound;
}

inline long uniform_in(std::mt19937_64& rng, long lo, long hi) {
  return lo + static_cast<long>(uniform_below(rng, static_cast<std::uint64_t>(hi - lo + 1)));
}

/// Offsets p/q with |p| <= 1000 and 1 <= q <= 16.
inline GroundTruth random_truth(const Topology& topo, std::mt19937_64& rng) {
  std::vector<Rational> offsets;
  for (int v = 1; v < topo.nodes(); ++v) {
    const long num = uniform_in(rng, -1000, 1000);
    const long den = uniform_in(rng, 1, 16);
    offsets.emplace_back(num, den);
  }
  return GroundTruth(std::move(offsets));
}

/// `count` distinct positions without magnitudes.
inline FaultAssignment random_positions(const Topology& topo, std::size_t count, std::mt19937_64& rng) {
  if (count > topo.sessions()) throw InputError("more faults than sessions");
  std::vector<std::size_t> rows(topo.sessions());
  for (std::size_t r = 0; r < rows.size(); ++r) rows[r] = r;
  for (std::size_t i = 0; i < count; ++i) std::swap(rows[i], rows[i + uniform_below(rng, rows.size() - i)]);
  FaultAssignment out;
  for (std::size_t i = 0; i < count; ++i) out.add(topo.session_at(rows[i]));
  return out;
}

/// `count` faults at random positions, magnitudes nT with n uniform on
/// [-bound, bound] excluding zero.
inline FaultAssignment random_faults(const Topology& topo, std::size_t count, const Rational& period,
                                     std::mt19937_64& rng, long bound = 5) {
  if (bound < 1) throw InputError("magnitude bound must be at least 1");
  FaultAssignment positions = random_positions(topo, count, rng);
  FaultAssignment out;
  for (const auto& s : positions.positions()) {
    long n = uniform_in(rng, -bound, bound - 1);
    if (n >= 0) ++n;
    out.add(s, Rational(n) * period);
  }
  return out;
}

}  // namespace clocksync
