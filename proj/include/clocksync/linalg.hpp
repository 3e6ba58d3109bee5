#pragma once

// Exact linear algebra over the rationals: rank, reduced row-echelon form,
// and Rouché–Capelli classification of A x = b.
//
// Pivoting always takes the first nonzero entry in column order, so every
// result (including null-space bases) is reproducible bit for bit.

#include <clocksync/matrix.hpp>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace clocksync {

namespace detail {

// Fraction-free (Bareiss) echelon reduction in place; returns the rank.
// Works for any exact integer-like type whose division is exact.
inline std::size_t bareiss_rank(std::vector<std::vector<mpz_class>>& m, std::size_t cols) {
  const std::size_t rows = m.size();
  std::size_t r = 0;
  mpz_class prev = 1;
  for (std::size_t c = 0; c < cols && r < rows; ++c) {
    std::size_t p = r;
    while (p < rows && m[p][c] == 0) ++p;
    if (p == rows) continue;
    std::swap(m[p], m[r]);
    for (std::size_t i = r + 1; i < rows; ++i) {
      for (std::size_t j = c + 1; j < cols; ++j) {
        mpz_class v = m[r][c] * m[i][j] - m[i][c] * m[r][j];
        mpz_divexact(m[i][j].get_mpz_t(), v.get_mpz_t(), prev.get_mpz_t());
      }
      m[i][c] = 0;
    }
    prev = m[r][c];
    ++r;
  }
  return r;
}

inline bool checked_bareiss_step(std::int64_t piv, std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t prev,
                                 std::int64_t& out) {
  std::int64_t x = 0;
  std::int64_t y = 0;
  std::int64_t d = 0;
  if (__builtin_mul_overflow(piv, a, &x) || __builtin_mul_overflow(b, c, &y) || __builtin_sub_overflow(x, y, &d))
    return false;
  out = d / prev;
  return true;
}

}  // namespace detail

/// Exact rank over the rationals.
inline std::size_t rank(const Matrix& m) {
  // Clear denominators row by row, then eliminate fraction-free.
  std::vector<std::vector<mpz_class>> ints(m.rows(), std::vector<mpz_class>(m.cols()));
  for (std::size_t r = 0; r < m.rows(); ++r) {
    mpz_class l = 1;
    for (const auto& v : m.row(r)) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), v.raw().get_den_mpz_t());
    for (std::size_t c = 0; c < m.cols(); ++c) ints[r][c] = m(r, c).raw().get_num() * (l / m(r, c).raw().get_den());
  }
  return detail::bareiss_rank(ints, m.cols());
}

/// Exact rank of an integer matrix. Runs in machine integers and falls
/// back to arbitrary precision if an intermediate would overflow.
inline std::size_t rank(const IntMatrix& m) {
  IntMatrix w = m;
  const std::size_t rows = w.rows();
  const std::size_t cols = w.cols();
  std::size_t r = 0;
  std::int64_t prev = 1;
  for (std::size_t c = 0; c < cols && r < rows; ++c) {
    std::size_t p = r;
    while (p < rows && w(p, c) == 0) ++p;
    if (p == rows) continue;
    w.swap_rows(p, r);
    for (std::size_t i = r + 1; i < rows; ++i) {
      for (std::size_t j = c + 1; j < cols; ++j) {
        std::int64_t out = 0;
        if (!detail::checked_bareiss_step(w(r, c), w(i, j), w(i, c), w(r, j), prev, out)) return rank(to_rational(m));
        w(i, j) = out;
      }
      w(i, c) = 0;
    }
    prev = w(r, c);
    ++r;
  }
  return r;
}

/// Reduced row-echelon form with the list of pivot columns.
struct RowEchelon {
  Matrix reduced;
  std::vector<std::size_t> pivot_cols;
};

inline RowEchelon rref(Matrix m) {
  std::vector<std::size_t> pivots;
  std::size_t r = 0;
  for (std::size_t c = 0; c < m.cols() && r < m.rows(); ++c) {
    std::size_t p = r;
    while (p < m.rows() && m(p, c).is_zero()) ++p;
    if (p == m.rows()) continue;
    m.swap_rows(p, r);
    const Rational inv = Rational(1) / m(r, c);
    for (std::size_t j = c; j < m.cols(); ++j)
      if (!m(r, j).is_zero()) m(r, j) *= inv;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      if (i == r || m(i, c).is_zero()) continue;
      const Rational f = m(i, c);
      for (std::size_t j = c; j < m.cols(); ++j)
        if (!m(r, j).is_zero()) m(i, j) -= f * m(r, j);
    }
    pivots.push_back(c);
    ++r;
  }
  return {std::move(m), std::move(pivots)};
}

enum class SolveKind { NoSolution, Unique, Infinite };

inline std::string_view to_string(SolveKind k) {
  switch (k) {
    case SolveKind::NoSolution: return "NoSolution";
    case SolveKind::Unique: return "Unique";
    case SolveKind::Infinite: return "Infinite";
  }
  return "?";
}

/// Outcome of A x = b under the Rouché–Capelli theorem.
///
/// `solution` is set only for Unique. For Infinite, `particular` has every
/// free variable at zero and `null_basis` holds one vector per free column
/// (in column order) with that variable set to one.
struct SolveOutcome {
  SolveKind kind = SolveKind::NoSolution;
  std::size_t rank_a = 0;
  std::size_t rank_augmented = 0;
  Vector solution;
  std::size_t nullity = 0;
  Vector particular;
  std::vector<Vector> null_basis;
};

inline SolveOutcome classify_solve(const Matrix& a, std::span<const Rational> b) {
  if (b.size() != a.rows()) throw std::invalid_argument("classify_solve: length of b must equal row count of A");
  const std::size_t n = a.cols();
  auto [reduced, pivots] = rref(augment(a, b));

  SolveOutcome out;
  out.rank_augmented = pivots.size();
  const bool inconsistent = !pivots.empty() && pivots.back() == n;
  out.rank_a = inconsistent ? pivots.size() - 1 : pivots.size();
  if (inconsistent) {
    out.kind = SolveKind::NoSolution;
    return out;
  }

  Vector particular(n);
  std::vector<bool> is_pivot(n, false);
  for (std::size_t i = 0; i < pivots.size(); ++i) {
    particular[pivots[i]] = reduced(i, n);
    is_pivot[pivots[i]] = true;
  }
  if (pivots.size() == n) {
    out.kind = SolveKind::Unique;
    out.solution = std::move(particular);
    return out;
  }

  out.kind = SolveKind::Infinite;
  out.nullity = n - pivots.size();
  for (std::size_t f = 0; f < n; ++f) {
    if (is_pivot[f]) continue;
    Vector v(n);
    v[f] = Rational(1);
    for (std::size_t i = 0; i < pivots.size(); ++i) v[pivots[i]] = -reduced(i, f);
    out.null_basis.push_back(std::move(v));
  }
  out.particular = std::move(particular);
  return out;
}

}  // namespace clocksync
