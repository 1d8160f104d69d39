// SPDX-License-Identifier: Apache-2.0
//
// Small dense containers and elimination routines that work over both double
// and the jet ring. Pivoting looks at the constant term only, which is enough:
// a jet is invertible exactly when its constant term is nonzero.
#pragma once

#include <affinelab/error.hpp>
#include <affinelab/jet.hpp>

#include <cmath>
#include <cstddef>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace affinelab {

inline double leading(double x) { return x; }
inline double leading(const Jet& x) { return x.value(); }

/// Row-major dense matrix.
template <class T>
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, const T& fill)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<T> data_;
};

/// A rank-r array with every dimension equal to n (tensor components on a
/// coordinate frame). The last index varies fastest.
template <class T>
class Tensor {
 public:
  Tensor() = default;
  Tensor(int rank, int dim, const T& fill) : rank_(rank), dim_(dim) {
    std::size_t size = 1;
    for (int k = 0; k < rank; ++k) size *= static_cast<std::size_t>(dim);
    data_.assign(size, fill);
  }

  int rank() const { return rank_; }
  int dim() const { return dim_; }
  std::size_t size() const { return data_.size(); }

  template <class... I>
  T& operator()(I... idx) {
    return data_[flat(idx...)];
  }
  template <class... I>
  const T& operator()(I... idx) const {
    return data_[flat(idx...)];
  }

  T& operator[](std::size_t k) { return data_[k]; }
  const T& operator[](std::size_t k) const { return data_[k]; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  /// Decompose a flat index into its multi-index.
  std::vector<int> unflatten(std::size_t k) const {
    std::vector<int> idx(static_cast<std::size_t>(rank_));
    for (int r = rank_ - 1; r >= 0; --r) {
      idx[static_cast<std::size_t>(r)] = static_cast<int>(k % static_cast<std::size_t>(dim_));
      k /= static_cast<std::size_t>(dim_);
    }
    return idx;
  }

 private:
  template <class... I>
  std::size_t flat(I... idx) const {
    std::size_t k = 0;
    ((k = k * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(idx)), ...);
    return k;
  }

  int rank_ = 0, dim_ = 0;
  std::vector<T> data_;
};

/// Map each component of a tensor (constant term of jets, typically).
template <class F, class T>
auto map_tensor(const Tensor<T>& t, F&& f) {
  using R = decltype(f(t[0]));
  Tensor<R> out;
  std::vector<R> data;
  data.reserve(t.size());
  for (const auto& v : t.data()) data.push_back(f(v));
  out = Tensor<R>(t.rank(), t.dim(), data.empty() ? R{} : data.front());
  out.data() = std::move(data);
  return out;
}

namespace detail {

template <class T>
std::size_t pick_pivot(const Mat<T>& a, std::size_t col, double scale) {
  std::size_t best = col;
  double best_abs = std::abs(leading(a(col, col)));
  for (std::size_t r = col + 1; r < a.rows(); ++r) {
    const double v = std::abs(leading(a(r, col)));
    if (v > best_abs) {
      best_abs = v;
      best = r;
    }
  }
  if (!(best_abs > 1e-14 * scale))
    throw Error(ErrorCode::degenerate_frame,
                "singular matrix at the base point (pivot " + std::to_string(best_abs) + ")");
  return best;
}

template <class T>
double max_leading(const Mat<T>& a) {
  double s = 0.0;
  for (const auto& v : a.data()) s = std::max(s, std::abs(leading(v)));
  return s > 0.0 ? s : 1.0;
}

}  // namespace detail

/// Cofactor expansion of the trailing block starting at (start, start).
template <class T>
T cofactor_determinant(const Mat<T>& a, std::size_t start = 0) {
  const std::size_t n = a.rows() - start;
  if (n == 1) return a(start, start);
  T sum = a(start, start) * 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    Mat<T> minor(n - 1, n - 1, a(start, start));
    for (std::size_t r = 1; r < n; ++r)
      for (std::size_t k = 0, kk = 0; k < n; ++k) {
        if (k == c) continue;
        minor(r - 1, kk++) = a(start + r, start + k);
      }
    T term = a(start, start + c) * cofactor_determinant(minor);
    if (c % 2 == 0) sum += term;
    else sum -= term;
  }
  return sum;
}

/// Determinant by Gaussian elimination with partial pivoting on constant terms.
template <class T>
T determinant(Mat<T> a) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw Error(ErrorCode::dimension, "determinant of a non-square matrix");
  const double scale = detail::max_leading(a);
  T det = a(0, 0) * 0.0 + 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p;
    try {
      p = detail::pick_pivot(a, c, scale);
    } catch (const Error&) {
      // constant part singular; fall back to cofactor expansion, which needs no inverse
      if constexpr (std::is_same_v<T, double>) return 0.0;
      else return det * cofactor_determinant(a, c);
    }
    if (p != c) {
      for (std::size_t k = 0; k < n; ++k) std::swap(a(c, k), a(p, k));
      det = -det;
    }
    det = det * a(c, c);
    const T inv = 1.0 / a(c, c);
    for (std::size_t r = c + 1; r < n; ++r) {
      const T factor = a(r, c) * inv;
      for (std::size_t k = c; k < n; ++k) a(r, k) -= factor * a(c, k);
    }
  }
  return det;
}

/// Solve A X = B for several right-hand sides (columns of B).
template <class T>
Mat<T> solve(Mat<T> a, Mat<T> b) {
  const std::size_t n = a.rows();
  if (a.cols() != n || b.rows() != n)
    throw Error(ErrorCode::dimension, "solve: incompatible shapes");
  const double scale = detail::max_leading(a);
  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t p = detail::pick_pivot(a, c, scale);
    if (p != c) {
      for (std::size_t k = 0; k < n; ++k) std::swap(a(c, k), a(p, k));
      for (std::size_t k = 0; k < b.cols(); ++k) std::swap(b(c, k), b(p, k));
    }
    const T inv = 1.0 / a(c, c);
    for (std::size_t k = c; k < n; ++k) a(c, k) = a(c, k) * inv;
    for (std::size_t k = 0; k < b.cols(); ++k) b(c, k) = b(c, k) * inv;
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const T factor = a(r, c);
      for (std::size_t k = c; k < n; ++k) a(r, k) -= factor * a(c, k);
      for (std::size_t k = 0; k < b.cols(); ++k) b(r, k) -= factor * b(c, k);
    }
  }
  return b;
}

template <class T>
std::vector<T> solve(const Mat<T>& a, const std::vector<T>& rhs) {
  if (rhs.empty()) return {};
  Mat<T> b(rhs.size(), 1, rhs.front());
  for (std::size_t r = 0; r < rhs.size(); ++r) b(r, 0) = rhs[r];
  Mat<T> x = solve(a, std::move(b));
  return x.data();
}

template <class T>
Mat<T> inverse(const Mat<T>& a) {
  Mat<T> id(a.rows(), a.cols(), a(0, 0) * 0.0);
  for (std::size_t k = 0; k < a.rows(); ++k) id(k, k) = id(k, k) + 1.0;
  return solve(a, std::move(id));
}

}  // namespace affinelab
