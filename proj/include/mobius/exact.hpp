#pragma once

// Exact rational arithmetic for near-boundary re-checks. Eigen does not
// interoperate with boost rationals here, so a minimal row-major matrix
// template carries the exact path.

#include "mobius/core.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <charconv>
#include <optional>
#include <string>
#include <string_view>

namespace mobius {

using Rational = boost::multiprecision::number<boost::multiprecision::cpp_rational_backend,
                                               boost::multiprecision::et_off>;
using BigInt = boost::multiprecision::number<boost::multiprecision::cpp_int_backend<>,
                                             boost::multiprecision::et_off>;

inline double to_double(const Rational& q) { return q.convert_to<double>(); }

namespace detail {

inline std::optional<BigInt> parse_integer(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::size_t pos = 0;
  bool negative = false;
  if (s[0] == '+' || s[0] == '-') {
    negative = s[0] == '-';
    pos = 1;
  }
  if (pos == s.size()) return std::nullopt;
  BigInt v = 0;
  for (; pos < s.size(); ++pos) {
    if (s[pos] < '0' || s[pos] > '9') return std::nullopt;
    v = v * 10 + (s[pos] - '0');
  }
  return negative ? BigInt(-v) : v;
}

inline BigInt pow10(long e) {
  BigInt r = 1;
  for (long i = 0; i < e; ++i) r *= 10;
  return r;
}

}  // namespace detail

/// Parses "p/q", an integer, or a decimal literal ("0.25", "-1e-3") into an
/// exact rational. Decimal literals are exact in base ten, so "0.2" is 1/5.
inline std::optional<Rational> parse_rational(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (s.empty()) return std::nullopt;
  if (auto slash = s.find('/'); slash != std::string_view::npos) {
    auto p = detail::parse_integer(s.substr(0, slash));
    auto q = detail::parse_integer(s.substr(slash + 1));
    if (!p || !q || *q == 0) return std::nullopt;
    return Rational(*p, *q);
  }
  std::string_view mant = s;
  long exponent = 0;
  if (auto e = s.find_first_of("eE"); e != std::string_view::npos) {
    mant = s.substr(0, e);
    auto ex = s.substr(e + 1);
    if (!ex.empty() && ex.front() == '+') ex.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(ex.data(), ex.data() + ex.size(), exponent);
    if (ec != std::errc{} || ptr != ex.data() + ex.size()) return std::nullopt;
  }
  std::string digits;
  long frac = 0;
  bool seen_dot = false;
  for (std::size_t i = 0; i < mant.size(); ++i) {
    char c = mant[i];
    if (c == '.') {
      if (seen_dot) return std::nullopt;
      seen_dot = true;
    } else if ((c == '-' || c == '+') && i == 0) {
      digits.push_back(c);
    } else if (c >= '0' && c <= '9') {
      digits.push_back(c);
      if (seen_dot) ++frac;
    } else {
      return std::nullopt;
    }
  }
  auto num = detail::parse_integer(digits);
  if (!num) return std::nullopt;
  long scale = exponent - frac;
  if (scale >= 0) return Rational(*num * detail::pow10(scale));
  return Rational(*num, detail::pow10(-scale));
}

inline std::string to_string(const Rational& q) {
  if (denominator(q) == 1) return numerator(q).str();
  return numerator(q).str() + "/" + denominator(q).str();
}

/// Small row-major dense matrix for scalar types Eigen cannot host.
template <class T>
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, const T& fill = T(0))
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  DenseMatrix transpose() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  friend DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) {
    require_size(b.rows_, a.cols_, "matrix product");
    DenseMatrix r(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const T& aik = a(i, k);
        if (aik == 0) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) r(i, j) += aik * b(k, j);
      }
    return r;
  }

  friend bool operator==(const DenseMatrix& a, const DenseMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

  Matrix to_real() const {
    Matrix m(rows_, cols_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) m(i, j) = static_cast<double>((*this)(i, j));
    return m;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

template <>
inline Matrix DenseMatrix<Rational>::to_real() const {
  Matrix m(rows_, cols_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) m(i, j) = to_double((*this)(i, j));
  return m;
}

using RationalMatrix = DenseMatrix<Rational>;

template <class T, class Int>
DenseMatrix<T> from_integer(const Eigen::Matrix<Int, Eigen::Dynamic, Eigen::Dynamic>& m) {
  DenseMatrix<T> r(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) r(i, j) = T(m(i, j));
  return r;
}

/// Solves x A = b for a row vector x by Gaussian elimination with exact
/// pivoting (first nonzero pivot). Returns nullopt when A is singular.
template <class T>
std::optional<std::vector<T>> solve_left(DenseMatrix<T> a, std::vector<T> b) {
  // x A = b  <=>  A^T x^T = b^T
  DenseMatrix<T> m = a.transpose();
  const std::size_t n = m.rows();
  require_size(b.size(), n, "solve_left rhs");
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    while (piv < n && m(piv, col) == 0) ++piv;
    if (piv == n) return std::nullopt;
    if (piv != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(m(piv, j), m(col, j));
      std::swap(b[piv], b[col]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      if (m(r, col) == 0) continue;
      T f = m(r, col) / m(col, col);
      for (std::size_t j = col; j < n; ++j) m(r, j) -= f * m(col, j);
      b[r] -= f * b[col];
    }
  }
  std::vector<T> x(n);
  for (std::size_t i = n; i-- > 0;) {
    T s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= m(i, j) * x[j];
    x[i] = s / m(i, i);
  }
  return x;
}

}  // namespace mobius
