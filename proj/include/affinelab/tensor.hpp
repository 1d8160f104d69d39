// SPDX-License-Identifier: Apache-2.0
//
// Tensor utilities on the chart frame: truncation of jet fields, covariant
// derivatives through a set of connection coefficients, and norms measured in
// an h-orthonormal frame.
#pragma once

#include <affinelab/jet.hpp>
#include <affinelab/linalg.hpp>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

namespace affinelab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline Jet truncate(const Jet& j, int order) { return j.order() == order ? j : j.truncated(order); }

inline Tensor<Jet> truncate(const Tensor<Jet>& t, int order) {
  Tensor<Jet> out = t;
  for (auto& v : out.data()) v = truncate(v, order);
  return out;
}

inline Mat<Jet> truncate(const Mat<Jet>& m, int order) {
  Mat<Jet> out = m;
  for (auto& v : out.data()) v = truncate(v, order);
  return out;
}

inline std::vector<Jet> truncate(const std::vector<Jet>& v, int order) {
  std::vector<Jet> out;
  out.reserve(v.size());
  for (const auto& j : v) out.push_back(truncate(j, order));
  return out;
}

inline Tensor<double> values(const Tensor<Jet>& t) {
  return map_tensor(t, [](const Jet& j) { return j.value(); });
}

inline Matrix values(const Mat<Jet>& m) {
  Matrix out(static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c)
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m(r, c).value();
  return out;
}

inline Vector values(const std::vector<Jet>& v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t k = 0; k < v.size(); ++k) out(static_cast<Eigen::Index>(k)) = v[k].value();
  return out;
}

/// A rank-2 tensor viewed as a matrix (first index = row).
template <class T>
Mat<T> as_mat(const Tensor<T>& t) {
  const auto n = static_cast<std::size_t>(t.dim());
  Mat<T> m(n, n, t[0]);
  m.data() = t.data();
  return m;
}

template <class T>
Tensor<T> as_tensor(const Mat<T>& m) {
  Tensor<T> t(2, static_cast<int>(m.rows()), m.data().front());
  t.data() = m.data();
  return t;
}

inline Tensor<double> as_tensor(const Matrix& m) {
  Tensor<double> t(2, static_cast<int>(m.rows()), 0.0);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) t(r, c) = m(r, c);
  return t;
}

/// Covariant derivative of a tensor whose first `upper` indices are
/// contravariant and the rest covariant. The derivative index comes first in
/// the result: out(d, i...) = (nabla_d t)(i...). gamma(k, i, j) = Gamma^k_ij.
inline Tensor<Jet> covariant_derivative(const Tensor<Jet>& t, int upper, const Tensor<Jet>& gamma) {
  const int n = t.dim();
  const int order = std::min(t[0].order() - 1, gamma[0].order());
  if (order < 0) throw Error(ErrorCode::order, "covariant derivative needs jets of order >= 1");
  const Tensor<Jet> g = truncate(gamma, order);
  Tensor<Jet> out(t.rank() + 1, n, Jet(n, order));
  std::vector<int> idx;
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    const auto full = out.unflatten(flat);
    const int d = full[0];
    idx.assign(full.begin() + 1, full.end());
    auto at = [&](const std::vector<int>& i) {
      std::size_t k = 0;
      for (int v : i) k = k * static_cast<std::size_t>(n) + static_cast<std::size_t>(v);
      return k;
    };
    Jet acc = t[at(idx)].derivative(d);
    if (acc.order() != order) acc = acc.truncated(order);
    for (int slot = 0; slot < t.rank(); ++slot) {
      auto moved = idx;
      for (int m = 0; m < n; ++m) {
        moved[static_cast<std::size_t>(slot)] = m;
        const Jet tm = truncate(t[at(moved)], order);
        if (slot < upper)
          acc += g(idx[static_cast<std::size_t>(slot)], d, m) * tm;
        else
          acc -= g(m, d, idx[static_cast<std::size_t>(slot)]) * tm;
      }
    }
    out[flat] = std::move(acc);
  }
  return out;
}

/// Orthonormal frame for a positive definite h: columns e_a with h(e_a, e_b) = delta.
/// Returns E together with its inverse.
struct OrthoFrame {
  Matrix E;
  Matrix Einv;
};

inline OrthoFrame orthonormal_frame(const Matrix& h) {
  Eigen::LLT<Matrix> llt(h);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::convexity, "affine metric is not positive definite");
  const Matrix L = llt.matrixL();
  OrthoFrame f;
  f.E = L.transpose().triangularView<Eigen::Upper>().solve(Matrix::Identity(h.rows(), h.cols()));
  f.Einv = L.transpose();
  return f;
}

/// Components of t in the frame: covariant slots contract with E, the first
/// `upper` slots with E^{-1}.
inline Tensor<double> in_frame(const Tensor<double>& t, int upper, const OrthoFrame& f) {
  Tensor<double> cur = t;
  const int n = t.dim();
  for (int slot = 0; slot < t.rank(); ++slot) {
    Tensor<double> next(t.rank(), n, 0.0);
    for (std::size_t flat = 0; flat < next.size(); ++flat) {
      auto idx = next.unflatten(flat);
      const int a = idx[static_cast<std::size_t>(slot)];
      double s = 0.0;
      for (int m = 0; m < n; ++m) {
        idx[static_cast<std::size_t>(slot)] = m;
        std::size_t k = 0;
        for (int v : idx) k = k * static_cast<std::size_t>(n) + static_cast<std::size_t>(v);
        const double w = slot < upper ? f.Einv(a, m) : f.E(m, a);
        s += w * cur[k];
      }
      next[flat] = s;
    }
    cur = std::move(next);
  }
  return cur;
}

/// Tensorial norm with respect to h.
inline double h_norm(const Tensor<double>& t, int upper, const OrthoFrame& f) {
  const Tensor<double> c = in_frame(t, upper, f);
  double s = 0.0;
  for (double v : c.data()) s += v * v;
  return std::sqrt(s);
}

/// Largest component in the orthonormal frame.
inline double frame_sup(const Tensor<double>& t, int upper, const OrthoFrame& f) {
  const Tensor<double> c = in_frame(t, upper, f);
  double s = 0.0;
  for (double v : c.data()) s = std::max(s, std::abs(v));
  return s;
}

inline double sup_abs(const Tensor<double>& t) {
  double s = 0.0;
  for (double v : t.data()) s = std::max(s, std::abs(v));
  return s;
}

inline Tensor<double> difference(const Tensor<double>& a, const Tensor<double>& b) {
  Tensor<double> d = a;
  for (std::size_t k = 0; k < d.size(); ++k) d[k] -= b[k];
  return d;
}

}  // namespace affinelab
