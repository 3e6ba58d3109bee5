#pragma once

#include <clocksync/rational.hpp>

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <ostream>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace clocksync {

/// Dense row-major matrix. Shape is fixed at construction and never empty.
template <typename T>
class BasicMatrix {
 public:
  using value_type = T;

  BasicMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, T(0)) {
    if (rows == 0 || cols == 0) throw std::invalid_argument("matrix must have at least one row and one column");
  }

  BasicMatrix(std::initializer_list<std::initializer_list<T>> init)
      : BasicMatrix(init.size(), init.size() ? init.begin()->size() : 0) {
    std::size_t r = 0;
    for (const auto& row : init) {
      if (row.size() != cols_) throw std::invalid_argument("ragged matrix initializer");
      std::size_t c = 0;
      for (const auto& v : row) (*this)(r, c++) = v;
      ++r;
    }
  }

  [[nodiscard]] std::size_t rows() const { return rows_; }
  [[nodiscard]] std::size_t cols() const { return cols_; }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  [[nodiscard]] std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  [[nodiscard]] std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  void swap_rows(std::size_t a, std::size_t b) {
    if (a == b) return;
    for (std::size_t c = 0; c < cols_; ++c) std::swap((*this)(a, c), (*this)(b, c));
  }

  [[nodiscard]] BasicMatrix transposed() const {
    BasicMatrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  friend bool operator==(const BasicMatrix&, const BasicMatrix&) = default;

  friend std::ostream& operator<<(std::ostream& os, const BasicMatrix& m) {
    for (std::size_t r = 0; r < m.rows_; ++r) {
      os << (r == 0 ? "[[" : " [");
      for (std::size_t c = 0; c < m.cols_; ++c) os << (c ? ", " : "") << m(r, c);
      os << (r + 1 == m.rows_ ? "]]" : "]\n");
    }
    return os;
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<T> data_;
};

using Matrix = BasicMatrix<Rational>;
using IntMatrix = BasicMatrix<std::int64_t>;
using Vector = std::vector<Rational>;

inline Matrix to_rational(const IntMatrix& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = Rational(static_cast<long>(m(r, c)));
  return out;
}

inline Vector multiply(const Matrix& a, std::span<const Rational> x) {
  if (x.size() != a.cols()) throw std::invalid_argument("multiply: dimension mismatch");
  Vector out(a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    Rational acc;
    for (std::size_t c = 0; c < a.cols(); ++c)
      if (!a(r, c).is_zero() && !x[c].is_zero()) acc += a(r, c) * x[c];
    out[r] = std::move(acc);
  }
  return out;
}

/// Appends `b` as an extra column.
inline Matrix augment(const Matrix& a, std::span<const Rational> b) {
  if (b.size() != a.rows()) throw std::invalid_argument("augment: length of b must equal row count");
  Matrix out(a.rows(), a.cols() + 1);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) out(r, c) = a(r, c);
    out(r, a.cols()) = b[r];
  }
  return out;
}

}  // namespace clocksync
