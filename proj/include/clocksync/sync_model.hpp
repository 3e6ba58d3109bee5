#pragma once

// Network vocabulary: nodes, sessions, canonical row order, fault
// placements, measurements, and the two linear systems built from them.
//
// Row order of every system: reference sessions (1,0), (2,0), ..., (N-1,0),
// then the remaining sessions (i,j), i > j >= 1, sorted by j and then by i.
// That is exactly the ordering of Session below, so a sorted std::set of
// sessions enumerates rows in order.

#include <clocksync/errors.hpp>
#include <clocksync/linalg.hpp>
#include <clocksync/matrix.hpp>
#include <clocksync/rational.hpp>

#include <algorithm>
#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace clocksync {

/// Unordered node pair stored as (i, j) with i > j.
struct Session {
  int i = 1;
  int j = 0;

  Session() = default;
  Session(int a, int b) : i(std::max(a, b)), j(std::min(a, b)) {
    if (a == b) throw InputError("session endpoints must differ: (" + std::to_string(a) + "," + std::to_string(b) + ")");
  }

  friend bool operator==(const Session&, const Session&) = default;
  friend std::strong_ordering operator<=>(const Session& a, const Session& b) {
    if (auto c = a.j <=> b.j; c != 0) return c;
    return a.i <=> b.i;
  }

  [[nodiscard]] std::string to_string() const { return "(" + std::to_string(i) + "," + std::to_string(j) + ")"; }
};

class Topology {
 public:
  explicit Topology(int n) : n_(n) {
    if (n < 3) throw InputError("node count must be at least 3, got " + std::to_string(n));
  }

  [[nodiscard]] int nodes() const { return n_; }
  [[nodiscard]] std::size_t sessions() const { return static_cast<std::size_t>(n_) * (n_ - 1) / 2; }

  [[nodiscard]] bool valid(const Session& s) const { return s.j >= 0 && s.i < n_ && s.i > s.j; }
  void require_valid(const Session& s) const {
    if (!valid(s)) throw InputError("session " + s.to_string() + " is not valid for N=" + std::to_string(n_));
  }

  /// Canonical row of a session.
  [[nodiscard]] std::size_t row_of(const Session& s) const {
    require_valid(s);
    if (s.j == 0) return static_cast<std::size_t>(s.i - 1);
    // Rows consumed by reference sessions and by all blocks j' < j.
    const auto n = static_cast<std::size_t>(n_);
    const auto j = static_cast<std::size_t>(s.j);
    std::size_t base = n - 1;
    for (std::size_t jj = 1; jj < j; ++jj) base += n - 1 - jj;
    return base + static_cast<std::size_t>(s.i) - j - 1;
  }

  [[nodiscard]] Session session_at(std::size_t row) const {
    if (row >= sessions()) throw InputError("row " + std::to_string(row) + " out of range");
    const auto n = static_cast<std::size_t>(n_);
    if (row < n - 1) return Session(static_cast<int>(row + 1), 0);
    std::size_t rest = row - (n - 1);
    std::size_t j = 1;
    while (rest >= n - 1 - j) {
      rest -= n - 1 - j;
      ++j;
    }
    return Session(static_cast<int>(j + 1 + rest), static_cast<int>(j));
  }

  /// All sessions in row order.
  [[nodiscard]] std::vector<Session> all_sessions() const {
    std::vector<Session> out;
    out.reserve(sessions());
    for (std::size_t r = 0; r < sessions(); ++r) out.push_back(session_at(r));
    return out;
  }

  friend bool operator==(const Topology&, const Topology&) = default;

 private:
  int n_;
};

/// A set of sessions, optionally with the fault magnitude on each one.
class FaultAssignment {
 public:
  FaultAssignment() = default;

  /// Positions only.
  FaultAssignment(std::initializer_list<Session> positions) {
    for (const auto& s : positions) add(s);
  }
  explicit FaultAssignment(std::span<const Session> positions) {
    for (const auto& s : positions) add(s);
  }

  /// Positions with magnitudes.
  FaultAssignment(std::initializer_list<std::pair<Session, Rational>> faults) {
    for (const auto& [s, e] : faults) add(s, e);
  }

  void add(const Session& s) {
    if (!entries_.emplace(s, std::nullopt).second) throw InputError("duplicate fault position " + s.to_string());
  }
  void add(const Session& s, const Rational& magnitude) {
    if (magnitude.is_zero()) throw InputError("fault magnitude on " + s.to_string() + " must be nonzero");
    if (!entries_.emplace(s, magnitude).second) throw InputError("duplicate fault position " + s.to_string());
  }

  [[nodiscard]] std::size_t size() const { return entries_.size(); }
  [[nodiscard]] bool empty() const { return entries_.empty(); }
  [[nodiscard]] bool contains(const Session& s) const { return entries_.contains(s); }

  /// Positions in canonical row order.
  [[nodiscard]] std::vector<Session> positions() const {
    std::vector<Session> out;
    out.reserve(entries_.size());
    for (const auto& [s, _] : entries_) out.push_back(s);
    return out;
  }

  [[nodiscard]] bool has_magnitudes() const {
    return !entries_.empty() && std::all_of(entries_.begin(), entries_.end(), [](const auto& e) { return e.second.has_value(); });
  }

  [[nodiscard]] std::optional<Rational> magnitude(const Session& s) const {
    auto it = entries_.find(s);
    return it == entries_.end() ? std::nullopt : it->second;
  }

  [[nodiscard]] const std::map<Session, std::optional<Rational>>& entries() const { return entries_; }

  /// Same positions, magnitudes dropped.
  [[nodiscard]] FaultAssignment positions_only() const {
    FaultAssignment out;
    for (const auto& [s, _] : entries_) out.add(s);
    return out;
  }

  void validate(const Topology& topo) const {
    for (const auto& [s, _] : entries_) topo.require_valid(s);
  }

  friend bool operator==(const FaultAssignment&, const FaultAssignment&) = default;

  [[nodiscard]] std::string to_string() const {
    std::string out = "{";
    bool first = true;
    for (const auto& [s, e] : entries_) {
      out += (first ? "" : ",") + s.to_string();
      if (e) out += ":" + e->to_string();
      first = false;
    }
    return out + "}";
  }

 private:
  std::map<Session, std::optional<Rational>> entries_;
};

/// Measured offset for every session, stored in row order.
class MeasurementSet {
 public:
  MeasurementSet(const Topology& topo, std::vector<Rational> by_row) : topo_(topo), values_(std::move(by_row)) {
    if (values_.size() != topo_.sessions())
      throw InputError("expected " + std::to_string(topo_.sessions()) + " measurements, got " +
                       std::to_string(values_.size()));
  }

  /// From an explicit (session, value) list; every session exactly once.
  static MeasurementSet from_entries(const Topology& topo, std::span<const std::pair<Session, Rational>> entries) {
    std::vector<std::optional<Rational>> slots(topo.sessions());
    for (const auto& [s, v] : entries) {
      auto& slot = slots[topo.row_of(s)];
      if (slot) throw InputError("duplicate measurement for session " + s.to_string());
      slot = v;
    }
    std::vector<Rational> values;
    values.reserve(slots.size());
    for (std::size_t r = 0; r < slots.size(); ++r) {
      if (!slots[r]) throw InputError("missing measurement for session " + topo.session_at(r).to_string());
      values.push_back(*slots[r]);
    }
    return {topo, std::move(values)};
  }

  [[nodiscard]] const Topology& topology() const { return topo_; }
  [[nodiscard]] const Rational& at(const Session& s) const { return values_[topo_.row_of(s)]; }
  [[nodiscard]] std::span<const Rational> by_row() const { return values_; }

  friend bool operator==(const MeasurementSet&, const MeasurementSet&) = default;

 private:
  Topology topo_;
  std::vector<Rational> values_;
};

/// True offsets of nodes 1..N-1 from the reference node 0.
class GroundTruth {
 public:
  explicit GroundTruth(std::vector<Rational> offsets) : offsets_(std::move(offsets)) {
    if (offsets_.size() < 2) throw InputError("ground truth needs offsets for at least nodes 1 and 2");
  }
  static GroundTruth zeros(const Topology& topo) {
    return GroundTruth(std::vector<Rational>(static_cast<std::size_t>(topo.nodes() - 1)));
  }

  [[nodiscard]] int nodes() const { return static_cast<int>(offsets_.size()) + 1; }
  /// Offset of `node` from node 0; zero for node 0 itself.
  [[nodiscard]] Rational offset(int node) const {
    if (node == 0) return {};
    return offsets_.at(static_cast<std::size_t>(node - 1));
  }
  /// delta_ij = delta_i0 - delta_j0.
  [[nodiscard]] Rational delta(const Session& s) const { return offset(s.i) - offset(s.j); }
  [[nodiscard]] std::span<const Rational> offsets() const { return offsets_; }

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;

 private:
  std::vector<Rational> offsets_;
};

/// Semantic meaning of each column of a built system.
struct ColumnLayout {
  int offset_cols = 0;              ///< estimated offsets of nodes 1..N-1
  std::vector<Session> estimated;   ///< estimated-fault columns, row order
  std::vector<Session> actual;      ///< actual-fault columns (re-vectorized systems only)

  [[nodiscard]] std::size_t total() const {
    return static_cast<std::size_t>(offset_cols) + estimated.size() + actual.size();
  }
  [[nodiscard]] std::size_t offset_col(int node) const { return static_cast<std::size_t>(node - 1); }
  [[nodiscard]] std::size_t estimated_col(std::size_t idx) const { return static_cast<std::size_t>(offset_cols) + idx; }
  [[nodiscard]] std::size_t actual_col(std::size_t idx) const {
    return static_cast<std::size_t>(offset_cols) + estimated.size() + idx;
  }

  /// Short label such as "d20", "ehat21" or "e10".
  [[nodiscard]] std::string label(std::size_t col) const {
    auto pair_label = [](const Session& s) { return std::to_string(s.i) + std::to_string(s.j); };
    if (col < static_cast<std::size_t>(offset_cols)) return "d" + std::to_string(col + 1) + "0";
    col -= static_cast<std::size_t>(offset_cols);
    if (col < estimated.size()) return "ehat" + pair_label(estimated[col]);
    col -= estimated.size();
    return "e" + pair_label(actual.at(col));
  }
};

struct LinearSystem {
  Matrix a;
  Vector b;
  ColumnLayout layout;
};

namespace detail {

inline Matrix offset_block(const Topology& topo, std::size_t total_cols) {
  Matrix a(topo.sessions(), total_cols);
  for (std::size_t r = 0; r < topo.sessions(); ++r) {
    const Session s = topo.session_at(r);
    a(r, static_cast<std::size_t>(s.i - 1)) = Rational(1);
    if (s.j != 0) a(r, static_cast<std::size_t>(s.j - 1)) = Rational(-1);
  }
  return a;
}

}  // namespace detail

/// A x = b over (offset estimates, estimated faults) for one hypothesized
/// placement. Magnitudes in `estimated` are ignored.
inline LinearSystem build_estimation_system(const Topology& topo, const FaultAssignment& estimated,
                                            const MeasurementSet& meas) {
  estimated.validate(topo);
  if (meas.topology() != topo) throw InputError("measurement set was built for a different node count");
  ColumnLayout layout{topo.nodes() - 1, estimated.positions(), {}};
  Matrix a = detail::offset_block(topo, layout.total());
  for (std::size_t k = 0; k < layout.estimated.size(); ++k)
    a(topo.row_of(layout.estimated[k]), layout.estimated_col(k)) = Rational(1);
  Vector b(meas.by_row().begin(), meas.by_row().end());
  return {std::move(a), std::move(b), std::move(layout)};
}

/// A' x' = b' with the actual faults moved to the unknown side (entering
/// with -1) and b' holding fault-free true offsets.
inline LinearSystem build_revectorized_system(const Topology& topo, const FaultAssignment& estimated,
                                              const FaultAssignment& actual, const GroundTruth& truth) {
  estimated.validate(topo);
  actual.validate(topo);
  if (truth.nodes() != topo.nodes()) throw InputError("ground truth was built for a different node count");
  ColumnLayout layout{topo.nodes() - 1, estimated.positions(), actual.positions()};
  Matrix a = detail::offset_block(topo, layout.total());
  for (std::size_t k = 0; k < layout.estimated.size(); ++k)
    a(topo.row_of(layout.estimated[k]), layout.estimated_col(k)) = Rational(1);
  for (std::size_t k = 0; k < layout.actual.size(); ++k)
    a(topo.row_of(layout.actual[k]), layout.actual_col(k)) = Rational(-1);
  Vector b(topo.sessions());
  for (std::size_t r = 0; r < topo.sessions(); ++r) b[r] = truth.delta(topo.session_at(r));
  return {std::move(a), std::move(b), std::move(layout)};
}

/// Number of estimated positions that are actually faulty.
inline std::size_t correctly_positioned_count(const FaultAssignment& estimated, const FaultAssignment& actual) {
  std::size_t l = 0;
  for (const auto& [s, _] : estimated.entries())
    if (actual.contains(s)) ++l;
  return l;
}

/// Node permutation given as perm[old] = new.
using Permutation = std::vector<int>;

inline void require_permutation(const Permutation& perm, int n) {
  if (static_cast<int>(perm.size()) != n) throw InputError("permutation size does not match node count");
  std::vector<bool> seen(perm.size(), false);
  for (int v : perm) {
    if (v < 0 || v >= n || seen[static_cast<std::size_t>(v)]) throw InputError("not a permutation of node indices");
    seen[static_cast<std::size_t>(v)] = true;
  }
}

/// Renames nodes. A magnitude changes sign when the renamed pair reverses
/// orientation, since it is defined on the measurement of c_i - c_j, i > j.
inline FaultAssignment relabel(const FaultAssignment& assignment, const Permutation& perm) {
  require_permutation(perm, static_cast<int>(perm.size()));
  FaultAssignment out;
  for (const auto& [s, e] : assignment.entries()) {
    const int a = perm.at(static_cast<std::size_t>(s.i));
    const int b = perm.at(static_cast<std::size_t>(s.j));
    const Session t(a, b);
    if (e)
      out.add(t, a > b ? *e : -*e);
    else
      out.add(t);
  }
  return out;
}

inline MeasurementSet relabel(const MeasurementSet& meas, const Permutation& perm) {
  const Topology& topo = meas.topology();
  require_permutation(perm, topo.nodes());
  std::vector<Rational> values(topo.sessions());
  for (std::size_t r = 0; r < topo.sessions(); ++r) {
    const Session s = topo.session_at(r);
    const int a = perm[static_cast<std::size_t>(s.i)];
    const int b = perm[static_cast<std::size_t>(s.j)];
    values[topo.row_of(Session(a, b))] = a > b ? meas.by_row()[r] : -meas.by_row()[r];
  }
  return {topo, std::move(values)};
}

/// Offsets re-expressed after renaming; the new node 0 becomes the reference.
inline GroundTruth relabel(const GroundTruth& truth, const Permutation& perm) {
  const int n = truth.nodes();
  require_permutation(perm, n);
  std::vector<int> inverse(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) inverse[static_cast<std::size_t>(perm[static_cast<std::size_t>(v)])] = v;
  const Rational base = truth.offset(inverse[0]);
  std::vector<Rational> offsets;
  for (int y = 1; y < n; ++y) offsets.push_back(truth.offset(inverse[static_cast<std::size_t>(y)]) - base);
  return GroundTruth(std::move(offsets));
}

}  // namespace clocksync
