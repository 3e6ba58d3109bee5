#pragma once

// Edge subsets of the complete graph K_N up to node renaming.
//
// The representative of an orbit is its lexicographically smallest sorted
// session list over all node permutations, where sessions compare in row
// order. It is found by an exact branch-and-bound instead of trying all N!
// permutations:
//   * untouched nodes always take the largest labels;
//   * once a labeled node still has unlabeled neighbors, the next label must
//     go to a neighbor of the smallest such node (anything else puts a larger
//     key at the first undecided position);
//   * so every connected component is labeled contiguously, and the best
//     labeling of a set of components is the best component first followed by
//     the (memoized) best labeling of the rest.

#include <clocksync/errors.hpp>
#include <clocksync/sync_model.hpp>

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <set>
#include <utility>
#include <vector>

namespace clocksync {

struct CanonicalForm {
  std::vector<Session> edges;  ///< sorted, relabeled
  Permutation perm;            ///< perm[old] = new
};

namespace detail {

class EdgeCanonicalizer {
 public:
  EdgeCanonicalizer(int n, const std::vector<Session>& edges) : n_(n), edges_(edges) {
    for (const auto& e : edges_) {
      if (e.i >= n || e.j < 0) throw InputError("edge " + e.to_string() + " outside node range");
      touch(e.i);
      touch(e.j);
    }
    if (touched_.size() > 64) throw InputError("canonical form supports at most 64 touched nodes");
    adj_.assign(touched_.size(), 0);
    for (const auto& e : edges_) {
      const int a = index_.at(e.i);
      const int b = index_.at(e.j);
      adj_[static_cast<std::size_t>(a)] |= bit(b);
      adj_[static_cast<std::size_t>(b)] |= bit(a);
    }
  }

  CanonicalForm run() {
    const std::uint64_t all = touched_.size() == 64 ? ~0ULL : (bit(static_cast<int>(touched_.size())) - 1);
    const Labeling& best = solve(all);
    CanonicalForm out;
    out.perm.assign(static_cast<std::size_t>(n_), -1);
    int next = 0;
    for (int local : best.order) out.perm[static_cast<std::size_t>(touched_[static_cast<std::size_t>(local)])] = next++;
    for (int v = 0; v < n_; ++v)
      if (out.perm[static_cast<std::size_t>(v)] < 0) out.perm[static_cast<std::size_t>(v)] = next++;
    for (const auto& [lo, hi] : best.keys) out.edges.emplace_back(hi, lo);
    return out;
  }

 private:
  using Key = std::pair<int, int>;  // (lower label, higher label)

  struct Labeling {
    std::vector<Key> keys;   // sorted
    std::vector<int> order;  // local vertex indices in label order
  };

  static std::uint64_t bit(int v) { return 1ULL << static_cast<unsigned>(v); }

  void touch(int v) {
    if (index_.emplace(v, static_cast<int>(touched_.size())).second) touched_.push_back(v);
  }

  std::uint64_t component_of(int v, std::uint64_t within) const {
    std::uint64_t comp = bit(v);
    std::uint64_t frontier = comp;
    while (frontier) {
      std::uint64_t grow = 0;
      for (std::uint64_t f = frontier; f; f &= f - 1) grow |= adj_[static_cast<std::size_t>(std::countr_zero(f))];
      grow &= within & ~comp;
      comp |= grow;
      frontier = grow;
    }
    return comp;
  }

  // Sorted keys of edges with both endpoints labeled and lower label <= max_lo.
  std::vector<Key> decided_keys(const std::vector<int>& label, int max_lo) const {
    std::vector<Key> keys;
    for (std::size_t v = 0; v < adj_.size(); ++v) {
      const int lv = label[v];
      if (lv < 0) continue;
      for (std::uint64_t a = adj_[v]; a; a &= a - 1) {
        const int u = std::countr_zero(a);
        const int lu = label[static_cast<std::size_t>(u)];
        if (lu > lv && lv <= max_lo) keys.emplace_back(lv, lu);
      }
    }
    std::sort(keys.begin(), keys.end());
    return keys;
  }

  void component_dfs(std::uint64_t comp, std::vector<int>& label, std::vector<int>& order, bool& have,
                     Labeling& best) const {
    const int m = static_cast<int>(order.size());
    if (m == std::popcount(comp)) {
      std::vector<Key> keys = decided_keys(label, m);
      if (!have || keys < best.keys) {
        have = true;
        best.keys = std::move(keys);
        best.order = order;
      }
      return;
    }
    int lo_min = -1;
    std::uint64_t open = 0;
    for (int l = 0; l < m; ++l) {
      open = adj_[static_cast<std::size_t>(order[static_cast<std::size_t>(l)])] & comp;
      for (std::uint64_t a = open; a; a &= a - 1)
        if (label[static_cast<std::size_t>(std::countr_zero(a))] >= 0) open &= ~bit(std::countr_zero(a));
      if (open) {
        lo_min = l;
        break;
      }
    }
    if (have) {
      const std::vector<Key> prefix = decided_keys(label, lo_min);
      const auto n = std::min(prefix.size(), best.keys.size());
      if (std::lexicographical_compare(best.keys.begin(), best.keys.begin() + static_cast<std::ptrdiff_t>(n),
                                       prefix.begin(), prefix.begin() + static_cast<std::ptrdiff_t>(n)))
        return;
    }
    for (std::uint64_t a = open; a; a &= a - 1) {
      const int u = std::countr_zero(a);
      label[static_cast<std::size_t>(u)] = m;
      order.push_back(u);
      component_dfs(comp, label, order, have, best);
      order.pop_back();
      label[static_cast<std::size_t>(u)] = -1;
    }
  }

  Labeling component_best(std::uint64_t comp) const {
    Labeling best;
    bool have = false;
    std::vector<int> label(adj_.size(), -1);
    std::vector<int> order;
    for (std::uint64_t c = comp; c; c &= c - 1) {
      const int v = std::countr_zero(c);
      label[static_cast<std::size_t>(v)] = 0;
      order.push_back(v);
      component_dfs(comp, label, order, have, best);
      order.pop_back();
      label[static_cast<std::size_t>(v)] = -1;
    }
    return best;
  }

  const Labeling& solve(std::uint64_t remaining) {
    if (auto it = memo_.find(remaining); it != memo_.end()) return it->second;
    Labeling best;
    bool have = false;
    std::uint64_t seen = 0;
    for (std::uint64_t r = remaining; r; r &= r - 1) {
      const int v = std::countr_zero(r);
      if (seen & bit(v)) continue;
      const std::uint64_t comp = component_of(v, remaining);
      seen |= comp;
      Labeling cand = component_best(comp);
      const int shift = std::popcount(comp);
      const Labeling& rest = solve(remaining & ~comp);
      for (const auto& [lo, hi] : rest.keys) cand.keys.emplace_back(lo + shift, hi + shift);
      cand.order.insert(cand.order.end(), rest.order.begin(), rest.order.end());
      if (!have || cand.keys < best.keys) {
        have = true;
        best = std::move(cand);
      }
    }
    return memo_.emplace(remaining, std::move(best)).first->second;
  }

  int n_;
  std::vector<Session> edges_;
  std::vector<int> touched_;
  std::map<int, int> index_;
  std::vector<std::uint64_t> adj_;
  std::map<std::uint64_t, Labeling> memo_;
};

}  // namespace detail

/// Orbit representative of `edges` under all node permutations of K_n,
/// plus a permutation mapping `edges` onto it.
inline CanonicalForm canonical_form(int n, const std::vector<Session>& edges) {
  return detail::EdgeCanonicalizer(n, edges).run();
}

/// One canonical representative per orbit of K-edge subsets of K_N, sorted.
inline std::vector<FaultAssignment> enumerate_actual_classes(const Topology& topo, std::size_t count) {
  if (count > topo.sessions()) throw InputError("fault count exceeds the number of sessions");
  const std::vector<Session> sessions = topo.all_sessions();
  std::set<std::vector<Session>> level{{}};
  for (std::size_t k = 1; k <= count; ++k) {
    std::set<std::vector<Session>> next;
    for (const auto& rep : level) {
      for (const auto& s : sessions) {
        if (std::binary_search(rep.begin(), rep.end(), s)) continue;
        std::vector<Session> grown = rep;
        grown.insert(std::upper_bound(grown.begin(), grown.end(), s), s);
        next.insert(canonical_form(topo.nodes(), grown).edges);
      }
    }
    level = std::move(next);
  }
  std::vector<FaultAssignment> out;
  out.reserve(level.size());
  for (const auto& rep : level) out.emplace_back(std::span<const Session>(rep));
  return out;
}

}  // namespace clocksync
