// SPDX-License-Identifier: Apache-2.0
//
// Blaschke structure of a hypersurface at a chart point. All quantities are
// built over the jet ring so that later stages can keep differentiating:
// with F known to order N, h lives at order N-2, the connections, K, C and
// the affine normal at N-3 and the shape operator at N-4.
#pragma once

#include <affinelab/dsl.hpp>
#include <affinelab/error.hpp>
#include <affinelab/jet.hpp>
#include <affinelab/linalg.hpp>
#include <affinelab/tensor.hpp>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>
#include <vector>

namespace affinelab {

struct TentativeFrame {
  Mat<Jet> frame;           // (n+1) x n, columns F_i
  std::vector<Jet> xi;      // seed transversal, sign fixed so h~ > 0
  Mat<Jet> h;               // h~_ij
  Jet theta;                // det[F_1..F_n, xi~]
};

/// Columns F_1..F_n followed by a transversal vector, truncated to `order`.
inline Mat<Jet> augmented(const Mat<Jet>& frame, const std::vector<Jet>& xi, int order) {
  const std::size_t m = frame.rows();
  Mat<Jet> a(m, m, Jet(static_cast<int>(frame.cols()), order));
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c + 1 < m; ++c) a(r, c) = truncate(frame(r, c), order);
    a(r, m - 1) = truncate(xi[r], order);
  }
  return a;
}

/// Second derivatives F_ij as (n+1) x n(n+1)/2 columns, pairs (i <= j) in
/// row-major order.
inline Mat<Jet> second_derivatives(const Mat<Jet>& frame, int order) {
  const std::size_t m = frame.rows(), n = frame.cols();
  Mat<Jet> b(m, n * (n + 1) / 2, Jet(static_cast<int>(n), order));
  for (std::size_t r = 0; r < m; ++r) {
    std::size_t col = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) b(r, col++) = truncate(frame(r, i).derivative(static_cast<int>(j)), order);
  }
  return b;
}

inline std::size_t pair_column(std::size_t i, std::size_t j, std::size_t n) {
  if (i > j) std::swap(i, j);
  return i * n - i * (i - 1) / 2 + (j - i);
}

inline TentativeFrame tentative_frame(const std::vector<Jet>& F) {
  if (F.empty()) throw Error(ErrorCode::dimension, "empty immersion");
  const int n = F[0].num_vars();
  const int N = F[0].order();
  if (static_cast<int>(F.size()) != n + 1)
    throw Error(ErrorCode::dimension, "immersion must have n+1 components");
  if (N < 2) throw Error(ErrorCode::order, "tentative frame needs jets of order >= 2");
  const auto un = static_cast<std::size_t>(n);

  Mat<Jet> frame(un + 1, un, Jet(n, N - 1));
  for (std::size_t a = 0; a <= un; ++a)
    for (std::size_t i = 0; i < un; ++i) frame(a, i) = F[a].derivative(static_cast<int>(i));

  // generalized cross product, oriented so that det[F_1..F_n, xi~] = |xi~|^2
  std::vector<Jet> xi;
  for (std::size_t a = 0; a <= un; ++a) {
    Mat<Jet> minor(un, un, Jet(n, N - 1));
    for (std::size_t r = 0, rr = 0; r <= un; ++r) {
      if (r == a) continue;
      for (std::size_t c = 0; c < un; ++c) minor(rr, c) = frame(r, c);
      ++rr;
    }
    Jet d = un == 0 ? Jet::constant(n, N - 1, 1.0) : determinant(minor);
    xi.push_back(((a + un) % 2 == 0) ? d : -d);
  }
  double norm2 = 0.0, scale = 1.0;
  for (const auto& x : xi) norm2 += x.value() * x.value();
  for (std::size_t i = 0; i < un; ++i) {
    double col = 0.0;
    for (std::size_t a = 0; a <= un; ++a) col += frame(a, i).value() * frame(a, i).value();
    scale *= col;
  }
  if (!(norm2 > 1e-24 * scale))
    throw Error(ErrorCode::degenerate_frame, "tangent vectors are linearly dependent at the base point");

  Jet theta = determinant(augmented(frame, xi, N - 1));
  Mat<Jet> decomposed = solve(augmented(frame, xi, N - 2), second_derivatives(frame, N - 2));
  Mat<Jet> h(un, un, Jet(n, N - 2));
  for (std::size_t i = 0; i < un; ++i)
    for (std::size_t j = 0; j < un; ++j) h(i, j) = decomposed(un, pair_column(i, j, un));

  Eigen::SelfAdjointEigenSolver<Matrix> eig(values(h));
  const double lo = eig.eigenvalues().minCoeff(), hi = eig.eigenvalues().maxCoeff();
  const double tol = 1e-12 * std::max(std::abs(lo), std::abs(hi));
  if (lo < -tol && hi > tol)
    throw Error(ErrorCode::convexity, "affine metric is indefinite at the base point");
  if (!(std::abs(lo) > tol && std::abs(hi) > tol))
    throw Error(ErrorCode::convexity, "affine metric is degenerate at the base point");
  if (hi < 0.0) {
    for (auto& x : xi) x = -x;
    theta = -theta;
    for (auto& v : h.data()) v = -v;
  }
  return {std::move(frame), std::move(xi), std::move(h), std::move(theta)};
}

inline Jet abs_jet(const Jet& j) { return j.value() < 0.0 ? -j : j; }

/// Blaschke metric from a tentative decomposition.
inline Mat<Jet> affine_metric(const Mat<Jet>& h_tilde, const Jet& theta) {
  const int n = static_cast<int>(h_tilde.rows());
  const int order = h_tilde(0, 0).order();
  const Jet weight = pow(abs_jet(determinant(h_tilde)), -1.0 / (n + 2)) *
                     pow(abs_jet(truncate(theta, order)), 2.0 / (n + 2));
  Mat<Jet> h = h_tilde;
  for (auto& v : h.data()) v = weight * v;
  return h;
}

/// Christoffel symbols of h: out(k, i, j) = Gamma^k_ij, one order below h.
inline Tensor<Jet> levi_civita(const Mat<Jet>& h) {
  const int n = static_cast<int>(h.rows());
  const int order = h(0, 0).order() - 1;
  if (order < 0) throw Error(ErrorCode::order, "Levi-Civita connection needs h to order >= 1");
  const Mat<Jet> hinv = inverse(truncate(h, order));
  Tensor<Jet> dh(3, n, Jet(n, order));  // dh(l, i, j) = d_l h_ij
  for (int l = 0; l < n; ++l)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) dh(l, i, j) = h(i, j).derivative(l);
  Tensor<Jet> lower(3, n, Jet(n, order));  // Gamma_{l,ij}
  for (int l = 0; l < n; ++l)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) lower(l, i, j) = 0.5 * (dh(i, l, j) + dh(j, l, i) - dh(l, i, j));
  Tensor<Jet> gamma(3, n, Jet(n, order));
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        Jet s(n, order);
        for (int l = 0; l < n; ++l) s += hinv(k, l) * lower(l, i, j);
        gamma(k, j, i) = s;
        gamma(k, i, j) = std::move(s);
      }
  return gamma;
}

/// Affine normal as (1/n) times the Laplace-Beltrami operator of h applied to
/// the position vector.
inline std::vector<Jet> affine_normal(const Mat<Jet>& frame, const Mat<Jet>& h) {
  const int n = static_cast<int>(h.rows());
  const int order = h(0, 0).order() - 1;
  if (order < 0 || frame(0, 0).order() < 3)
    throw Error(ErrorCode::order, "affine normal needs F to jet order >= 3");
  const Tensor<Jet> gamma = levi_civita(h);
  const Mat<Jet> hinv = inverse(truncate(h, order));
  std::vector<Jet> xi;
  for (std::size_t a = 0; a < frame.rows(); ++a) {
    Jet s(n, order);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        Jet term = truncate(frame(a, static_cast<std::size_t>(i)).derivative(j), order);
        for (int k = 0; k < n; ++k) term -= gamma(k, i, j) * truncate(frame(a, static_cast<std::size_t>(k)), order);
        s += hinv(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) * term;
      }
    xi.push_back(s / static_cast<double>(n));
  }
  return xi;
}

/// Internal consistency figures computed alongside the structure.
struct BlaschkeChecks {
  double volume = 0;            // |det[F, xi]^2 - det h| / det h
  double equiaffine = 0;        // transversal part of d xi
  double self_consistency = 0;  // h recovered against the affine normal vs h
  double K_symmetry = 0;
  double C_symmetry = 0;
  double apolarity = 0;
  double C_cross = 0;           // -2 h(K., .) against nabla h
};

struct BlaschkeJets {
  std::vector<Jet> F;           // order N
  Mat<Jet> frame;               // order N-1
  Mat<Jet> h;                   // order N-2
  std::vector<Jet> xi;          // order N-3
  Tensor<Jet> GammaHat;         // order N-3
  Tensor<Jet> Gamma;            // order N-3
  Tensor<Jet> K;                // K(k, i, j) = K^k_ij, order N-3
  Tensor<Jet> C;                // order N-3
  Mat<Jet> S;                   // S(j, i) = S^j_i, order N-4
};

struct BlaschkePoint {
  int n = 0;
  int order = 0;
  ChartPoint point;
  Matrix h;
  Vector xi;
  Matrix S;                     // operator matrix: column i is S(d_i)
  Tensor<double> Gamma;
  Tensor<double> GammaHat;
  Tensor<double> K;
  Tensor<double> C;
  Matrix frame;
  BlaschkeJets jets;
  BlaschkeChecks checks;
};

inline BlaschkePoint blaschke_from_jets(std::vector<Jet> F) {
  const int n = F.at(0).num_vars();
  const int N = F[0].order();
  if (N < 4) throw Error(ErrorCode::order, "Blaschke structure needs jet order >= 4, got " + std::to_string(N));
  const auto un = static_cast<std::size_t>(n);

  TentativeFrame tf = tentative_frame(F);
  BlaschkePoint bp;
  bp.n = n;
  bp.order = N;
  auto& J = bp.jets;
  J.F = std::move(F);
  J.frame = tf.frame;
  J.h = affine_metric(tf.h, tf.theta);
  J.GammaHat = levi_civita(J.h);
  J.xi = affine_normal(J.frame, J.h);

  // redecompose against the affine normal
  const Mat<Jet> base = augmented(J.frame, J.xi, N - 3);
  const Mat<Jet> dec = solve(base, second_derivatives(J.frame, N - 3));
  J.Gamma = Tensor<Jet>(3, n, Jet(n, N - 3));
  Mat<Jet> h_again(un, un, Jet(n, N - 3));
  for (std::size_t i = 0; i < un; ++i)
    for (std::size_t j = 0; j < un; ++j) {
      const std::size_t col = pair_column(i, j, un);
      for (std::size_t k = 0; k < un; ++k) J.Gamma(k, i, j) = dec(k, col);
      h_again(i, j) = dec(un, col);
    }

  Mat<Jet> dxi(un + 1, un, Jet(n, N - 4));
  for (std::size_t a = 0; a <= un; ++a)
    for (std::size_t i = 0; i < un; ++i) dxi(a, i) = J.xi[a].derivative(static_cast<int>(i));
  const Mat<Jet> wein = solve(augmented(J.frame, J.xi, N - 4), dxi);
  J.S = Mat<Jet>(un, un, Jet(n, N - 4));
  for (std::size_t j = 0; j < un; ++j)
    for (std::size_t i = 0; i < un; ++i) J.S(j, i) = -wein(j, i);

  J.K = J.Gamma;
  for (std::size_t k = 0; k < J.K.size(); ++k) J.K[k] -= J.GammaHat[k];
  const Mat<Jet> h3 = truncate(J.h, N - 3);
  J.C = Tensor<Jet>(3, n, Jet(n, N - 3));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        Jet s(n, N - 3);
        for (int l = 0; l < n; ++l) s += h3(static_cast<std::size_t>(k), static_cast<std::size_t>(l)) * J.K(l, i, j);
        J.C(i, j, k) = -2.0 * s;
      }

  bp.point.clear();
  bp.h = values(J.h);
  bp.xi = values(J.xi);
  bp.S = values(J.S);
  bp.Gamma = values(J.Gamma);
  bp.GammaHat = values(J.GammaHat);
  bp.K = values(J.K);
  bp.C = values(J.C);
  bp.frame = values(J.frame);

  // checks
  auto& ck = bp.checks;
  Matrix fx(n + 1, n + 1);
  fx.leftCols(n) = bp.frame;
  fx.col(n) = bp.xi;
  const double deth = bp.h.determinant();
  ck.volume = std::abs(fx.determinant() * fx.determinant() - deth) / std::abs(deth);
  const OrthoFrame of = orthonormal_frame(bp.h);
  Tensor<double> transversal(1, n, 0.0);
  for (int i = 0; i < n; ++i) transversal[static_cast<std::size_t>(i)] = wein(un, static_cast<std::size_t>(i)).value();
  ck.equiaffine = frame_sup(transversal, 0, of);
  ck.self_consistency = frame_sup(difference(as_tensor(values(h_again)), as_tensor(bp.h)), 0, of);
  double ksym = 0, csym = 0, apol = 0;
  for (int i = 0; i < n; ++i) {
    double tr = 0;
    for (int k = 0; k < n; ++k) tr += bp.K(k, i, k);
    apol = std::max(apol, std::abs(tr));
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        ksym = std::max(ksym, std::abs(bp.K(k, i, j) - bp.K(k, j, i)));
        csym = std::max({csym, std::abs(bp.C(i, j, k) - bp.C(j, k, i)), std::abs(bp.C(i, j, k) - bp.C(i, k, j))});
      }
  }
  ck.K_symmetry = ksym;
  ck.C_symmetry = csym;
  ck.apolarity = apol;
  const Tensor<double> nabla_h = values(covariant_derivative(as_tensor(J.h), 0, J.Gamma));
  ck.C_cross = frame_sup(difference(nabla_h, bp.C), 0, of);
  return bp;
}

inline BlaschkePoint blaschke_point(const ImmersionSpec& spec, const ChartPoint& p, int order) {
  if (order < 4) throw Error(ErrorCode::order, "Blaschke structure needs jet order >= 4, got " + std::to_string(order));
  BlaschkePoint bp = blaschke_from_jets(eval_jet(spec, p, order));
  bp.point = p;
  return bp;
}

/// J = h(K, K) / (n(n-1)).
inline double pick_invariant(const BlaschkePoint& bp) {
  const double k = h_norm(bp.K, 1, orthonormal_frame(bp.h));
  return k * k / (bp.n * (bp.n - 1));
}

/// H = tr S / n.
inline double mean_curvature(const BlaschkePoint& bp) { return bp.S.trace() / bp.n; }

}  // namespace affinelab
