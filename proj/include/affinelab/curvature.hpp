// SPDX-License-Identifier: Apache-2.0
//
// Intrinsic curvature of the affine metric and the tensor R.C, computed both
// as the antisymmetrized second covariant derivative of C and as the
// algebraic action of the curvature operator on C.
#pragma once

#include <affinelab/blaschke.hpp>
#include <affinelab/tensor.hpp>

#include <algorithm>
#include <cmath>
#include <optional>

namespace affinelab {

/// Riem(l, i, j, k) = R^l_ijk, i.e. R(d_i, d_j) d_k = R^l_ijk d_l.
inline Tensor<Jet> riemann(const Tensor<Jet>& gamma) {
  const int n = gamma.dim();
  const int order = gamma[0].order() - 1;
  if (order < 0) throw Error(ErrorCode::order, "curvature needs connection jets of order >= 1");
  const Tensor<Jet> g = truncate(gamma, order);
  Tensor<Jet> R(4, n, Jet(n, order));
  for (int l = 0; l < n; ++l)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          Jet s = gamma(l, j, k).derivative(i) - gamma(l, i, k).derivative(j);
          for (int m = 0; m < n; ++m) s += g(l, i, m) * g(m, j, k) - g(l, j, m) * g(m, i, k);
          R(l, i, j, k) = std::move(s);
        }
  return R;
}

/// Schouten operator P (upper index first) and Weyl tensor from R and h.
struct SchoutenWeyl {
  Tensor<Jet> P;
  Tensor<Jet> W;
};

inline SchoutenWeyl schouten_weyl(const Tensor<Jet>& riem, const Mat<Jet>& h_in) {
  const int n = riem.dim();
  if (n < 3) throw Error(ErrorCode::dimension, "Schouten and Weyl tensors need n >= 3");
  const int order = riem[0].order();
  const Mat<Jet> h = truncate(h_in, order);
  const Mat<Jet> hinv = inverse(h);
  auto un = [](int v) { return static_cast<std::size_t>(v); };

  Mat<Jet> ric(un(n), un(n), Jet(n, order));
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) ric(un(j), un(k)) += riem(l, l, j, k);
  Tensor<Jet> Q(2, n, Jet(n, order));
  Jet r(n, order);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j) Q(i, k) += hinv(un(i), un(j)) * ric(un(j), un(k));
    r += Q(i, i);
  }
  SchoutenWeyl out{Tensor<Jet>(2, n, Jet(n, order)), Tensor<Jet>(4, n, Jet(n, order))};
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      out.P(i, k) = Q(i, k) / (n - 2.0);
      if (i == k) out.P(i, k) -= r / (2.0 * (n - 1) * (n - 2));
    }
  // hP(j, k) = h(P d_j, d_k)
  Mat<Jet> hP(un(n), un(n), Jet(n, order));
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      for (int m = 0; m < n; ++m) hP(un(j), un(k)) += out.P(m, j) * h(un(m), un(k));
  for (int l = 0; l < n; ++l)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          Jet w = riem(l, i, j, k) - h(un(j), un(k)) * out.P(l, i) + h(un(i), un(k)) * out.P(l, j);
          if (l == i) w -= hP(un(j), un(k));
          if (l == j) w += hP(un(i), un(k));
          out.W(l, i, j, k) = std::move(w);
        }
  return out;
}

struct CurvatureChecks {
  double antisymmetry = 0;
  double pair_symmetry = 0;
  double bianchi = 0;
  double ricci_symmetry = 0;
  double weyl_trace = 0;
  double metricity = 0;
};

struct CurvaturePack {
  int n = 0;
  Tensor<double> Riem;
  Matrix Ric;
  Matrix Q;
  double r = 0;
  double chi = 0;
  Matrix P;                     // empty when n < 3
  Tensor<double> W;             // empty when n < 3
  Tensor<double> gradC;         // gradC(d, i, j, k)
  Tensor<double> gradK;         // gradK(d, l, i, j) = (nabla_d K)^l_ij
  std::optional<Tensor<double>> gradS;  // gradS(d, l, j), needs order >= 5
  std::optional<Tensor<double>> gradP;  // gradP(d, l, k) = (nabla_d P)^l_k, needs n >= 3, order >= 5
  std::optional<Tensor<double>> grad2C;
  std::optional<Tensor<double>> RC_comm;
  Tensor<double> RC_action;
  double weyl_norm = 0;
  Tensor<Jet> riem_jet;
  std::optional<Tensor<Jet>> P_jet;
  CurvatureChecks checks;
};

/// (R(a,b).C)(x,y,z) = -C(R(a,b)x,y,z) - C(x,R(a,b)y,z) - C(x,y,R(a,b)z).
inline Tensor<double> semiparallel_action(const Tensor<double>& riem, const Tensor<double>& C) {
  const int n = C.dim();
  Tensor<double> out(5, n, 0.0);
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    const auto i = out.unflatten(flat);
    const int a = i[0], b = i[1], x = i[2], y = i[3], z = i[4];
    double s = 0.0;
    for (int l = 0; l < n; ++l)
      s -= riem(l, a, b, x) * C(l, y, z) + riem(l, a, b, y) * C(x, l, z) + riem(l, a, b, z) * C(x, y, l);
    out[flat] = s;
  }
  return out;
}

/// Antisymmetrized second covariant derivative.
inline Tensor<double> semiparallel_commutator(const Tensor<double>& grad2C) {
  Tensor<double> out = grad2C;
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    const auto i = out.unflatten(flat);
    out[flat] = grad2C[flat] - grad2C(i[1], i[0], i[2], i[3], i[4]);
  }
  return out;
}

inline CurvaturePack curvature_pack(const BlaschkePoint& bp) {
  const int n = bp.n;
  const auto& J = bp.jets;
  CurvaturePack cp;
  cp.n = n;
  cp.riem_jet = riemann(J.GammaHat);
  cp.Riem = values(cp.riem_jet);
  cp.Ric = Matrix::Zero(n, n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) cp.Ric(j, k) += cp.Riem(l, l, j, k);
  cp.Q = bp.h.ldlt().solve(cp.Ric);
  cp.r = cp.Q.trace();
  cp.chi = n > 1 ? cp.r / (n * (n - 1.0)) : 0.0;

  const OrthoFrame of = orthonormal_frame(bp.h);
  if (n >= 3) {
    SchoutenWeyl sw = schouten_weyl(cp.riem_jet, J.h);
    const Tensor<double> P = values(sw.P);
    cp.P = Matrix(n, n);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) cp.P(i, k) = P(i, k);
    cp.W = values(sw.W);
    cp.weyl_norm = h_norm(cp.W, 1, of);
    cp.P_jet = std::move(sw.P);
  }

  const Tensor<Jet> gradC = covariant_derivative(J.C, 0, J.GammaHat);
  cp.gradC = values(gradC);
  cp.gradK = values(covariant_derivative(J.K, 1, J.GammaHat));
  if (bp.order >= 5) {
    cp.grad2C = values(covariant_derivative(gradC, 0, J.GammaHat));
    cp.RC_comm = semiparallel_commutator(*cp.grad2C);
    cp.gradS = values(covariant_derivative(as_tensor(J.S), 1, J.GammaHat));
    if (cp.P_jet) cp.gradP = values(covariant_derivative(*cp.P_jet, 1, J.GammaHat));
  }
  cp.RC_action = semiparallel_action(cp.Riem, bp.C);

  auto& ck = cp.checks;
  for (int l = 0; l < n; ++l)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          ck.antisymmetry = std::max(ck.antisymmetry, std::abs(cp.Riem(l, i, j, k) + cp.Riem(l, j, i, k)));
          ck.bianchi = std::max(ck.bianchi,
                                std::abs(cp.Riem(l, i, j, k) + cp.Riem(l, j, k, i) + cp.Riem(l, k, i, j)));
        }
  Tensor<double> lowered(4, n, 0.0);  // R(i, j, k, w) = h(R(d_i, d_j) d_k, d_w)
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int w = 0; w < n; ++w)
          for (int l = 0; l < n; ++l) lowered(i, j, k, w) += bp.h(w, l) * cp.Riem(l, i, j, k);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int w = 0; w < n; ++w)
          ck.pair_symmetry = std::max(ck.pair_symmetry, std::abs(lowered(i, j, k, w) - lowered(k, w, i, j)));
  ck.ricci_symmetry = (cp.Ric - cp.Ric.transpose()).cwiseAbs().maxCoeff();
  if (n >= 3)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double s = 0;
        for (int l = 0; l < n; ++l) s += cp.W(l, l, j, k);
        ck.weyl_trace = std::max(ck.weyl_trace, std::abs(s));
      }
  ck.metricity = sup_abs(values(covariant_derivative(as_tensor(J.h), 0, J.GammaHat)));
  return cp;
}

struct SemiparallelResidual {
  double action = 0;                      // h-norm of R.C
  std::optional<double> commutator;       // h-norm of the commutator route
  std::optional<double> discrepancy;      // h-norm of the difference of the two routes
};

inline SemiparallelResidual semiparallel_residual(const BlaschkePoint& bp, const CurvaturePack& cp) {
  const OrthoFrame of = orthonormal_frame(bp.h);
  SemiparallelResidual out;
  out.action = h_norm(cp.RC_action, 0, of);
  if (cp.RC_comm) {
    out.commutator = h_norm(*cp.RC_comm, 0, of);
    out.discrepancy = h_norm(difference(*cp.RC_comm, cp.RC_action), 0, of);
  }
  return out;
}

/// Sectional curvature of the plane spanned by x and y.
inline double sectional_curvature(const BlaschkePoint& bp, const CurvaturePack& cp, const Vector& x,
                                  const Vector& y) {
  const int n = bp.n;
  Vector ryy = Vector::Zero(n);  // R(x, y) y
  for (int l = 0; l < n; ++l)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) ryy(l) += cp.Riem(l, i, j, k) * x(i) * y(j) * y(k);
  const double area = x.dot(bp.h * x) * y.dot(bp.h * y) - std::pow(x.dot(bp.h * y), 2);
  return ryy.dot(bp.h * x) / area;
}

struct StructureResiduals {
  double apolarity = 0;
  double gauss = 0;
  double codazziK = 0;
  std::optional<double> codazziS;  // needs jet order >= 5
  double chi_identity = 0;
};

inline StructureResiduals structure_residuals(const BlaschkePoint& bp, const CurvaturePack& cp) {
  const int n = bp.n;
  const Matrix& h = bp.h;
  const Matrix& S = bp.S;
  const Tensor<double>& K = bp.K;
  const Matrix hS = S.transpose() * h;  // hS(j, k) = h(S d_j, d_k)
  const OrthoFrame of = orthonormal_frame(h);
  StructureResiduals out;

  Tensor<double> trace(1, n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) trace[static_cast<std::size_t>(i)] += K(k, i, k);
  out.apolarity = frame_sup(trace, 0, of);

  Tensor<double> gauss(4, n, 0.0), codK(4, n, 0.0);
  for (int l = 0; l < n; ++l)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          double g = 0.5 * (h(j, k) * S(l, i) - h(i, k) * S(l, j) + (l == i ? hS(j, k) : 0.0) -
                            (l == j ? hS(i, k) : 0.0));
          for (int m = 0; m < n; ++m) g -= K(l, i, m) * K(m, j, k) - K(l, j, m) * K(m, i, k);
          gauss(l, i, j, k) = cp.Riem(l, i, j, k) - g;
          const double rhs = 0.5 * (h(j, k) * S(l, i) - h(i, k) * S(l, j) - (l == i ? hS(j, k) : 0.0) +
                                    (l == j ? hS(i, k) : 0.0));
          codK(l, i, j, k) = cp.gradK(i, l, j, k) - cp.gradK(j, l, i, k) - rhs;
        }
  out.gauss = frame_sup(gauss, 1, of);
  out.codazziK = frame_sup(codK, 1, of);

  if (cp.gradS) {
    const Tensor<double>& dS = *cp.gradS;
    Tensor<double> codS(3, n, 0.0);  // codS(l, i, j)
    for (int l = 0; l < n; ++l)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double rhs = 0.0;
          for (int m = 0; m < n; ++m) rhs += S(m, i) * K(l, m, j) - S(m, j) * K(l, m, i);
          codS(l, i, j) = dS(i, l, j) - dS(j, l, i) - rhs;
        }
    out.codazziS = frame_sup(codS, 1, of);
  }
  out.chi_identity = std::abs(cp.chi - mean_curvature(bp) - pick_invariant(bp));
  return out;
}

}  // namespace affinelab
