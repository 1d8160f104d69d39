// SPDX-License-Identifier: Apache-2.0
//
// Eigenstructure of the Schouten tensor and shape operator, the identities
// forced by semi-parallelism, and the final branch decision.
#pragma once

#include <affinelab/blaschke.hpp>
#include <affinelab/curvature.hpp>
#include <affinelab/tensor.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace affinelab {

struct Tolerances {
  double identity = 1e-7;
  double zero = 1e-6;
  double nonzero = 1e-3;
  double eigen_rel = 1e-7;     // eigenvalue clustering, relative to the spectral scale
  double eigen_floor = 1e-8;
  double gap_factor = 10.0;
  double fd_step = 1e-3;
  double derivative = 1e-4;    // identities verified by finite differences
};

struct EigenPartition {
  std::vector<double> values;         // ascending
  std::vector<int> multiplicities;
  std::vector<Matrix> frames;         // h-orthonormal columns per eigenvalue
  double gap_ratio = std::numeric_limits<double>::infinity();
  int m_min = 0;
  int m_max = 0;
  double self_adjoint = 0;            // |hA - (hA)^T|
  double frame_error = 0;             // |E^T h E - I|

  bool confident() const { return m_min == m_max; }
  int m() const { return m_max; }
};

/// Distinct eigenvalues of an h-self-adjoint operator A (A(i, j) = A^i_j).
inline EigenPartition eigen_partition(const Matrix& A, const Matrix& h, const Tolerances& tol = {}) {
  const Eigen::Index n = A.rows();
  const Matrix hA = h * A;
  EigenPartition out;
  out.self_adjoint = (hA - hA.transpose()).cwiseAbs().maxCoeff();
  const Matrix sym = 0.5 * (hA + hA.transpose());
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(sym, h);
  const Vector ev = es.eigenvalues();
  const Matrix V = es.eigenvectors();
  out.frame_error = (V.transpose() * h * V - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();

  const double scale = ev.cwiseAbs().maxCoeff();
  const double noise = std::max(tol.eigen_floor, tol.eigen_rel * scale);
  std::vector<Eigen::Index> starts{0};
  for (Eigen::Index k = 0; k + 1 < n; ++k)
    if (ev(k + 1) - ev(k) > noise) starts.push_back(k + 1);
  starts.push_back(n);

  double spread = 0.0, gap = std::numeric_limits<double>::infinity();
  int uncertain = 0;
  for (std::size_t c = 0; c + 1 < starts.size(); ++c) {
    const Eigen::Index a = starts[c], b = starts[c + 1];
    out.values.push_back(ev.segment(a, b - a).mean());
    out.multiplicities.push_back(static_cast<int>(b - a));
    out.frames.push_back(V.middleCols(a, b - a));
    spread = std::max(spread, ev(b - 1) - ev(a));
    if (c > 0) {
      const double g = ev(a) - ev(a - 1);
      gap = std::min(gap, g);
      if (g <= tol.gap_factor * noise) ++uncertain;
    }
  }
  out.gap_ratio = gap / std::max(spread, noise);
  out.m_max = static_cast<int>(out.values.size());
  out.m_min = out.m_max - uncertain;
  return out;
}

/// Adapted frame {T, X_1..X_{n-1}} of a two-eigenvalue Schouten tensor.
struct StructureFrame {
  Vector T;
  Matrix X;
  double lambda1 = 0, lambda2 = 0;
  double mu1 = 0, mu2 = 0;
  double nu1 = 0, nu2 = 0;
};

/// Picks the simple eigenvalue of P. The sign of T is fixed by positive
/// h-pairing with `reference` (a chart vector), falling back to the first
/// coordinate direction with a noticeable pairing.
inline std::optional<StructureFrame> structure_frame(const BlaschkePoint& bp, const EigenPartition& p_part,
                                                     const std::optional<Vector>& reference = std::nullopt) {
  const int n = bp.n;
  if (p_part.m() != 2 || n < 3) return std::nullopt;
  int simple = -1;
  for (int k = 0; k < 2; ++k)
    if (p_part.multiplicities[static_cast<std::size_t>(k)] == 1) simple = k;
  if (simple < 0 || p_part.multiplicities[static_cast<std::size_t>(1 - simple)] != n - 1) return std::nullopt;

  StructureFrame f;
  f.T = p_part.frames[static_cast<std::size_t>(simple)].col(0);
  f.X = p_part.frames[static_cast<std::size_t>(1 - simple)];
  f.nu1 = p_part.values[static_cast<std::size_t>(simple)];
  f.nu2 = p_part.values[static_cast<std::size_t>(1 - simple)];

  const Vector hT = bp.h * f.T;
  double pairing = 0.0;
  if (reference) pairing = reference->dot(hT);
  for (int k = 0; k < n && std::abs(pairing) < 1e-6; ++k) pairing = hT(k);
  if (pairing < 0) f.T = -f.T;

  Matrix E(n, n);
  E.col(0) = f.T;
  E.rightCols(n - 1) = f.X;
  const OrthoFrame of{E, E.inverse()};
  const Tensor<double> K = in_frame(bp.K, 1, of);
  const Matrix S = of.Einv * bp.S * E;
  f.lambda1 = K(0, 0, 0);
  for (int i = 1; i < n; ++i) {
    f.lambda2 += K(i, 0, i) / (n - 1);
    f.mu2 += S(i, i) / (n - 1);
  }
  f.mu1 = S(0, 0);
  return f;
}

namespace detail {

inline double rel(double lhs, double rhs) {
  return std::abs(lhs - rhs) / std::max({1.0, std::abs(lhs), std::abs(rhs)});
}

}  // namespace detail

/// Residuals of the identities satisfied by the adapted frame; affine-sphere
/// identities are added when `affine_sphere` is set.
inline std::map<std::string, double> lemma_checks(const BlaschkePoint& bp, const CurvaturePack& cp,
                                                  const StructureFrame& f, bool affine_sphere) {
  const int n = bp.n;
  std::map<std::string, double> out;
  Matrix E(n, n);
  E.col(0) = f.T;
  E.rightCols(n - 1) = f.X;
  const OrthoFrame of{E, E.inverse()};
  const Tensor<double> K = in_frame(bp.K, 1, of);
  const Matrix Q = of.Einv * cp.Q * E;
  const Matrix S = of.Einv * bp.S * E;
  const double r = cp.r;
  const double kscale = std::max({1.0, std::abs(f.lambda1), std::abs(f.lambda2)});

  double ktt = 0, ktx = 0, kxy = 0, l2 = 0;
  for (int a = 0; a < n; ++a) {
    ktt = std::max(ktt, std::abs(K(a, 0, 0) - (a == 0 ? f.lambda1 : 0.0)));
    for (int i = 1; i < n; ++i) {
      ktx = std::max(ktx, std::abs(K(a, 0, i) - (a == i ? f.lambda2 : 0.0)));
      for (int j = 1; j < n; ++j) {
        const double d = std::abs(K(a, i, j) - (a == 0 && i == j ? f.lambda2 : 0.0));
        kxy = std::max(kxy, d);
        if (a > 0) l2 = std::max(l2, d);
      }
    }
  }
  out["K_TT"] = ktt / kscale;
  out["K_TX"] = ktx / kscale;
  out["K_XY"] = kxy / kscale;
  out["L2"] = l2 / kscale;
  out["lambda_relation"] = detail::rel(f.lambda1, -(n - 1) * f.lambda2);

  const double qscale = std::max(1.0, std::abs(r));
  double qt = 0, qx = 0;
  for (int a = 0; a < n; ++a) {
    qt = std::max(qt, std::abs(Q(a, 0)));
    for (int i = 1; i < n; ++i) qx = std::max(qx, std::abs(Q(a, i) - (a == i ? r / (n - 1) : 0.0)));
  }
  out["QT"] = qt / qscale;
  out["QX"] = qx / qscale;
  out["nu_sum"] = detail::rel(f.nu1, -f.nu2);
  out["nu2_scalar"] = detail::rel(f.nu2, r / (2.0 * (n - 1) * (n - 2)));

  const double sscale = std::max({1.0, std::abs(f.mu1), std::abs(f.mu2)});
  double st = 0, sx = 0;
  for (int a = 0; a < n; ++a) {
    st = std::max(st, std::abs(S(a, 0) - (a == 0 ? f.mu1 : 0.0)));
    for (int i = 1; i < n; ++i) sx = std::max(sx, std::abs(S(a, i) - (a == i ? f.mu2 : 0.0)));
  }
  out["S_T"] = st / sscale;
  out["S_X"] = sx / sscale;
  out["mu2_relation"] = detail::rel(f.mu2, 2 * f.nu2 + f.lambda2 * f.lambda2);
  out["mu_sum"] = detail::rel(f.mu1 + f.mu2, -2.0 * n * f.lambda2 * f.lambda2);

  if (affine_sphere) {
    const double H = mean_curvature(bp);
    const double J = pick_invariant(bp);
    out["H_lambda2"] = detail::rel(H, -n * f.lambda2 * f.lambda2);
    out["r_H"] = detail::rel(r, (n * n - 1.0) * (n - 2.0) * H / n);
    out["J_H"] = detail::rel(J, -(n + 2.0) * H / (n * n));
    Matrix tric = cp.Ric - (r / n) * bp.h;
    const double norm2 = std::pow(h_norm(as_tensor(tric), 0, orthonormal_frame(bp.h)), 2);
    out["traceless_ricci"] = detail::rel(norm2, r * r / (n * (n - 1.0)));
    const double bound = -(n + 1.0) * (n - 2.0) / (n + 2.0) * J * r;
    out["traceless_ricci_bound"] = detail::rel(norm2, bound);
    // the general inequality, reported as the amount by which it is violated
    out["pinching_violation"] = std::max(0.0, norm2 - bound) / std::max(1.0, std::abs(bound)) +
                                std::max(0.0, J * r) / std::max(1.0, std::abs(J * r));
  }
  return out;
}

/// Pointwise quantities of the warped-product analysis.
struct IntrinsicWarp {
  double alpha = 0;
  double nabla_TT = 0;        // |h(X, nabla_T T)|
  double umbilic = 0;         // |nabla_X T + alpha X|
  double sec_XX = 0;          // residual of sec(X_i, X_j) = r/((n-1)(n-2))
  double sec_TX = 0;          // residual of sec(T, X_i) = 0
};

inline std::optional<IntrinsicWarp> intrinsic_warp(const BlaschkePoint& bp, const CurvaturePack& cp,
                                                   const StructureFrame& f) {
  if (!cp.gradP) return std::nullopt;
  const int n = bp.n;
  const Tensor<double>& dP = *cp.gradP;
  auto derivative_of_P = [&](const Vector& dir) {
    Matrix G = Matrix::Zero(n, n);
    for (int d = 0; d < n; ++d)
      for (int l = 0; l < n; ++l)
        for (int k = 0; k < n; ++k) G(l, k) += dir(d) * dP(d, l, k);
    return G;
  };
  const double gap = f.nu1 - f.nu2;
  const Matrix hX = bp.h * f.X;
  Matrix M(n - 1, n - 1);  // M(j, k) = h(X_j, nabla_{X_k} T)
  for (int k = 0; k < n - 1; ++k) {
    const Vector w = derivative_of_P(f.X.col(k)) * f.T;
    M.col(k) = hX.transpose() * w / gap;
  }
  IntrinsicWarp out;
  out.alpha = -M.trace() / (n - 1);
  out.umbilic = (M + out.alpha * Matrix::Identity(n - 1, n - 1)).cwiseAbs().maxCoeff();
  out.nabla_TT = (hX.transpose() * (derivative_of_P(f.T) * f.T) / gap).cwiseAbs().maxCoeff();

  Matrix E(n, n);
  E.col(0) = f.T;
  E.rightCols(n - 1) = f.X;
  const Tensor<double> R = in_frame(cp.Riem, 1, OrthoFrame{E, E.inverse()});
  const double kxx = cp.r / ((n - 1.0) * (n - 2.0));
  for (int i = 1; i < n; ++i) {
    out.sec_TX = std::max(out.sec_TX, std::abs(R(0, 0, i, i)));
    for (int j = 1; j < n; ++j)
      if (i != j) out.sec_XX = std::max(out.sec_XX, std::abs(R(i, i, j, j) - kxx));
  }
  const double scale = std::max(1.0, std::abs(kxx));
  out.sec_TX /= scale;
  out.sec_XX /= scale;
  return out;
}

/// Scalars tracked along curves for the derivative identities.
struct FrameScalars {
  double alpha, lambda2, mu1, mu2;
};

enum class Verdict {
  Quadric,
  FlatMetric,
  CalabiType_1_2,
  LorentzSphere_1_3,
  WarpedFamily_1,
  WarpedFamily_2,
  WarpedFamily_3,
  WarpedFamily_4,
  WarpedFamily_5,
  WarpedFamily_6,
  Unclassified
};

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Quadric: return "Quadric";
    case Verdict::FlatMetric: return "FlatMetric";
    case Verdict::CalabiType_1_2: return "CalabiType_1_2";
    case Verdict::LorentzSphere_1_3: return "LorentzSphere_1_3";
    case Verdict::WarpedFamily_1: return "WarpedFamily_1";
    case Verdict::WarpedFamily_2: return "WarpedFamily_2";
    case Verdict::WarpedFamily_3: return "WarpedFamily_3";
    case Verdict::WarpedFamily_4: return "WarpedFamily_4";
    case Verdict::WarpedFamily_5: return "WarpedFamily_5";
    case Verdict::WarpedFamily_6: return "WarpedFamily_6";
    case Verdict::Unclassified: return "Unclassified";
  }
  return "Unclassified";
}

/// Everything computed at one sample point.
struct PointRecord {
  ChartPoint point;
  std::optional<std::string> error;   // numerical failure at this point
  std::optional<ErrorCode> error_code;
  double H = 0, J = 0, r = 0, chi = 0;
  double C_norm = 0, riem_norm = 0, weyl_norm = 0;
  double rc_action = 0;
  std::optional<double> rc_commutator, rc_discrepancy;
  double umbilicity = 0;              // |S - H I| in the orthonormal frame
  std::map<std::string, double> identities;  // residuals of general identities
  EigenPartition P_part, S_part;
  std::optional<StructureFrame> frame;
  std::map<std::string, double> lemma;       // adapted-frame identities (m = 2)
  std::optional<IntrinsicWarp> warp;
  std::map<std::string, double> warped;      // warped-product identities (m = sigma = 2)
  std::optional<double> c;            // fiber curvature when m = sigma = 2
  Vector T_chart;                     // T in chart coordinates, when present
};

struct AnalysisOptions {
  int order = 5;
  Tolerances tol;
  bool derivative_checks = true;
};

/// Affine chart u = p + L w in which the affine metric is the identity at
/// w = 0. Analysing there keeps high-order jets well scaled for
/// any chart the surface is given in.
struct LocalChart {
  ImmersionSpec spec;
  Matrix L, Linv;
};

inline LocalChart local_chart(const ImmersionSpec& spec, const ChartPoint& p) {
  const auto tf = tentative_frame(eval_jet(spec, p, 2));
  const Matrix h = values(affine_metric(tf.h, tf.theta));
  Eigen::LLT<Matrix> llt(h);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::convexity, "affine metric is not definite at the base point");
  const Matrix U = llt.matrixU();
  LocalChart lc;
  lc.Linv = U;
  lc.L = U.inverse();
  const auto n = static_cast<std::size_t>(h.rows());
  Mat<double> b(n, n, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) b(r, c) = lc.L(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  lc.spec = reparametrize(spec, b, p);
  return lc;
}

namespace detail {

inline std::optional<FrameScalars> scalars_at(const ImmersionSpec& spec, const ChartPoint& q, const Vector& ref,
                                              const AnalysisOptions& opt) {
  const LocalChart lc = local_chart(spec, q);
  const BlaschkePoint bp = blaschke_point(lc.spec, ChartPoint(q.size(), 0.0), opt.order);
  const CurvaturePack cp = curvature_pack(bp);
  const auto part = eigen_partition(cp.P, bp.h, opt.tol);
  const auto f = structure_frame(bp, part, lc.Linv * ref);
  if (!f) return std::nullopt;
  const auto w = intrinsic_warp(bp, cp, *f);
  if (!w) return std::nullopt;
  return FrameScalars{w->alpha, f->lambda2, f->mu1, f->mu2};
}

/// Five-point central difference of the frame scalars along a chart direction.
inline std::optional<FrameScalars> directional_derivative(const ImmersionSpec& spec, const ChartPoint& p,
                                                          const Vector& dir, const Vector& ref,
                                                          const AnalysisOptions& opt) {
  const double h = opt.tol.fd_step;
  const double w[4] = {1.0, -8.0, 8.0, -1.0};
  const double s[4] = {-2.0, -1.0, 1.0, 2.0};
  FrameScalars d{0, 0, 0, 0};
  for (int k = 0; k < 4; ++k) {
    ChartPoint q = p;
    for (std::size_t i = 0; i < q.size(); ++i) q[i] += s[k] * h * dir(static_cast<Eigen::Index>(i));
    const auto v = scalars_at(spec, q, ref, opt);
    if (!v) return std::nullopt;
    d.alpha += w[k] * v->alpha;
    d.lambda2 += w[k] * v->lambda2;
    d.mu1 += w[k] * v->mu1;
    d.mu2 += w[k] * v->mu2;
  }
  const double denom = 12.0 * h;
  return FrameScalars{d.alpha / denom, d.lambda2 / denom, d.mu1 / denom, d.mu2 / denom};
}

}  // namespace detail

/// Finite-difference verification of the derivative identities along T and
/// along the fiber directions. Returns residuals keyed by identity.
inline std::map<std::string, double> warped_structure_check(const ImmersionSpec& spec, const ChartPoint& p,
                                                            const BlaschkePoint& bp, const StructureFrame& f,
                                                            const IntrinsicWarp& w, const AnalysisOptions& opt) {
  std::map<std::string, double> out;
  const int n = bp.n;
  const double a = w.alpha, l2 = f.lambda2, m1 = f.mu1, m2 = f.mu2;
  const auto dT = detail::directional_derivative(spec, p, f.T, f.T, opt);
  if (!dT) {
    out["structure_lost"] = 1.0;
    return out;
  }
  const double scale = std::max({1.0, a * a, std::abs(l2 * a), std::abs(m1), std::abs(m2)});
  out["T_alpha"] = std::abs(dT->alpha - a * a) / scale;
  out["T_lambda2"] = std::abs(dT->lambda2 - ((n + 1) * l2 * a + 0.5 * (m1 - m2))) / scale;
  out["T_mu2"] = std::abs(dT->mu2 - (m2 - m1) * (a - l2)) / scale;
  double x = 0.0;
  for (int i = 0; i < n - 1; ++i) {
    const auto dX = detail::directional_derivative(spec, p, f.X.col(i), f.T, opt);
    if (!dX) {
      out["structure_lost"] = 1.0;
      return out;
    }
    x = std::max({x, std::abs(dX->alpha), std::abs(dX->lambda2), std::abs(dX->mu1), std::abs(dX->mu2)});
  }
  out["X_scalars"] = x / scale;
  return out;
}

inline PointRecord analyze_point(const ImmersionSpec& spec, const ChartPoint& p, const AnalysisOptions& opt = {}) {
  PointRecord rec;
  rec.point = p;
  try {
    const LocalChart lc = local_chart(spec, p);
    const BlaschkePoint bp = blaschke_point(lc.spec, ChartPoint(p.size(), 0.0), opt.order);
    const CurvaturePack cp = curvature_pack(bp);
    const int n = bp.n;
    const OrthoFrame of = orthonormal_frame(bp.h);
    rec.H = mean_curvature(bp);
    rec.J = pick_invariant(bp);
    rec.r = cp.r;
    rec.chi = cp.chi;
    rec.C_norm = h_norm(bp.C, 0, of);
    rec.riem_norm = h_norm(cp.Riem, 1, of);
    rec.weyl_norm = cp.weyl_norm;
    const auto rc = semiparallel_residual(bp, cp);
    rec.rc_action = rc.action;
    rec.rc_commutator = rc.commutator;
    rec.rc_discrepancy = rc.discrepancy;
    rec.umbilicity = frame_sup(as_tensor(Matrix(bp.S - rec.H * Matrix::Identity(n, n))), 1, of);

    auto& id = rec.identities;
    id["volume"] = bp.checks.volume;
    id["equiaffine"] = bp.checks.equiaffine;
    id["self_consistency"] = bp.checks.self_consistency;
    id["K_symmetry"] = bp.checks.K_symmetry;
    id["C_symmetry"] = bp.checks.C_symmetry;
    id["C_cross"] = bp.checks.C_cross;
    const auto sr = structure_residuals(bp, cp);
    id["apolarity"] = sr.apolarity;
    id["gauss"] = sr.gauss;
    id["codazzi_K"] = sr.codazziK;
    if (sr.codazziS) id["codazzi_S"] = *sr.codazziS;
    id["chi_identity"] = sr.chi_identity;
    id["bianchi"] = cp.checks.bianchi;
    id["riemann_symmetry"] = std::max(cp.checks.antisymmetry, cp.checks.pair_symmetry);
    id["metricity"] = cp.checks.metricity;
    if (n >= 3) id["weyl_trace"] = cp.checks.weyl_trace;
    if (rc.discrepancy) id["rc_routes"] = *rc.discrepancy;

    rec.S_part = eigen_partition(bp.S, bp.h, opt.tol);
    if (n >= 3) {
      rec.P_part = eigen_partition(cp.P, bp.h, opt.tol);
      const auto local = structure_frame(bp, rec.P_part, lc.Linv.col(0));
      if (local) {
        // T and X are reported in the caller's chart
        rec.frame = *local;
        rec.frame->T = lc.L * local->T;
        rec.frame->X = lc.L * local->X;
        rec.T_chart = rec.frame->T;
        rec.lemma = lemma_checks(bp, cp, *local, rec.umbilicity < opt.tol.zero);
        rec.warp = intrinsic_warp(bp, cp, *local);
        if (rec.warp && rec.S_part.m() == 2) {
          const auto& f = *rec.frame;
          const auto& w = *rec.warp;
          const double a = w.alpha;
          if (std::abs(a) < opt.tol.zero)
            rec.c = f.mu2 - f.lambda2 * f.lambda2;
          else
            rec.c = 1.0 + (f.mu2 - f.lambda2 * f.lambda2) / (a * a);
          rec.warped["nabla_T_T"] = w.nabla_TT / std::max(1.0, std::abs(a));
          rec.warped["nabla_X_T"] = w.umbilic / std::max(1.0, std::abs(a));
          rec.warped["sectional_XX"] = w.sec_XX;
          rec.warped["sectional_TX"] = w.sec_TX;
          if (opt.derivative_checks) {
            const auto d = warped_structure_check(spec, p, bp, f, w, opt);
            rec.warped.insert(d.begin(), d.end());
          }
        }
      }
    }
  } catch (const Error& e) {
    if (!e.is_numerical()) throw;
    rec.error = e.what();
    rec.error_code = e.code();
  }
  return rec;
}

struct StructureReport {
  int n = 0;
  bool convexity_ok = true;
  bool numerical_ok = true;
  bool is_affine_sphere = false;
  int m = 0, m_min = 0;
  int sigma = 0, sigma_min = 0;
  double weyl_norm = 0;
  double semiparallel_residual = 0;
  double C_norm_max = 0;
  double mean_curvature = 0;
  std::optional<double> c;
  std::optional<double> alpha_max;
  std::string f_tag;                  // "1", "t" or empty
  std::map<std::string, double> identity_residuals;
  Verdict verdict = Verdict::Unclassified;
  std::string verdict_evidence;
  bool identities_ok = true;
};

namespace detail {

inline void merge_max(std::map<std::string, double>& into, const std::map<std::string, double>& from,
                      const std::string& prefix = "") {
  for (const auto& [k, v] : from) {
    auto& slot = into[prefix + k];
    slot = std::max(slot, v);
  }
}

inline std::string fmt(double v);

inline bool all_below(const std::map<std::string, double>& m, const std::string& prefix, double tol,
                      std::ostringstream& ev) {
  bool ok = true;
  for (const auto& [k, v] : m)
    if (k.rfind(prefix, 0) == 0 && !(v < tol)) {
      ev << k << " residual " << fmt(v) << " exceeds " << fmt(tol) << "; ";
      ok = false;
    }
  return ok;
}

inline std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

}  // namespace detail

/// Pure fold over the per-point records.
inline StructureReport verdict(const std::vector<PointRecord>& points, int n, const Tolerances& tol = {}) {
  StructureReport rep;
  rep.n = n;
  std::ostringstream ev;
  auto done = [&](Verdict v) {
    rep.verdict = v;
    rep.verdict_evidence = ev.str();
    return rep;
  };
  if (points.empty()) {
    ev << "no sample points";
    return done(Verdict::Unclassified);
  }
  for (const auto& p : points)
    if (p.error) {
      rep.numerical_ok = false;
      if (p.error_code == ErrorCode::convexity) rep.convexity_ok = false;
      ev << "numerical failure at a sample point: " << *p.error;
      return done(Verdict::Unclassified);
    }

  rep.m = 0;
  rep.m_min = n;
  rep.sigma = 0;
  rep.sigma_min = n;
  double h_lo = std::numeric_limits<double>::infinity(), h_hi = -h_lo, umb = 0.0;
  bool P_consistent = true, S_consistent = true;
  for (const auto& p : points) {
    detail::merge_max(rep.identity_residuals, p.identities);
    rep.weyl_norm = std::max(rep.weyl_norm, p.weyl_norm);
    rep.semiparallel_residual = std::max(rep.semiparallel_residual, p.rc_action);
    rep.C_norm_max = std::max(rep.C_norm_max, p.C_norm);
    h_lo = std::min(h_lo, p.H);
    h_hi = std::max(h_hi, p.H);
    umb = std::max(umb, p.umbilicity);
    if (n >= 3) {
      if (rep.m && p.P_part.m() != rep.m) P_consistent = false;
      rep.m = std::max(rep.m, p.P_part.m_max);
      rep.m_min = std::min(rep.m_min, p.P_part.m_min);
    }
    if (rep.sigma && p.S_part.m() != rep.sigma) S_consistent = false;
    rep.sigma = std::max(rep.sigma, p.S_part.m_max);
    rep.sigma_min = std::min(rep.sigma_min, p.S_part.m_min);
  }
  rep.mean_curvature = 0.5 * (h_lo + h_hi);
  rep.is_affine_sphere =
      umb < tol.zero && (h_hi - h_lo) <= tol.zero * std::max(1.0, std::abs(rep.mean_curvature));

  for (const auto& [k, v] : rep.identity_residuals) {
    if (!(v < tol.identity)) {
      rep.identities_ok = false;
      ev << "identity " << k << " residual " << detail::fmt(v) << " exceeds tolerance; ";
    }
  }

  ev << "n=" << n << ", max |C|=" << detail::fmt(rep.C_norm_max) << ", max |R.C|="
     << detail::fmt(rep.semiparallel_residual) << ", max |W|=" << detail::fmt(rep.weyl_norm) << "; ";
  if (!rep.identities_ok) return done(Verdict::Unclassified);
  if (n < 3) {
    ev << "the classification covers n >= 3 only";
    return done(Verdict::Unclassified);
  }
  if (rep.semiparallel_residual >= tol.zero) {
    ev << "cubic form is not semi-parallel on the sample set";
    return done(Verdict::Unclassified);
  }
  if (n >= 4 && rep.weyl_norm >= tol.zero) {
    ev << "Weyl tensor does not vanish on the sample set";
    return done(Verdict::Unclassified);
  }
  if (rep.C_norm_max < tol.zero) {
    ev << "cubic form vanishes: hyperquadric with H=" << detail::fmt(rep.mean_curvature)
       << (std::abs(rep.mean_curvature) < tol.zero ? " (paraboloid)"
                                                   : rep.mean_curvature > 0 ? " (ellipsoid)" : " (hyperboloid)");
    return done(Verdict::Quadric);
  }
  if (!P_consistent || rep.m != rep.m_min) {
    ev << "Schouten eigenvalue count is indeterminate (m in [" << rep.m_min << ", " << rep.m << "])";
    return done(Verdict::Unclassified);
  }
  if (!S_consistent || rep.sigma != rep.sigma_min) {
    ev << "shape operator eigenvalue count is indeterminate (sigma in [" << rep.sigma_min << ", " << rep.sigma
       << "])";
    return done(Verdict::Unclassified);
  }
  ev << "m=" << rep.m << ", sigma=" << rep.sigma << "; ";

  if (rep.m == 1) {
    double riem = 0.0;
    for (const auto& p : points) riem = std::max(riem, p.riem_norm);
    if (riem >= tol.zero) {
      ev << "constant nonzero sectional curvature with nonvanishing cubic form";
      return done(Verdict::Unclassified);
    }
    if (rep.is_affine_sphere && rep.mean_curvature < -tol.nonzero) {
      ev << "flat hyperbolic affine sphere, H=" << detail::fmt(rep.mean_curvature);
      return done(Verdict::CalabiType_1_2);
    }
    ev << "flat affine metric, sigma=" << rep.sigma;
    return done(Verdict::FlatMetric);
  }
  if (rep.m != 2) {
    ev << "Schouten tensor has more than two eigenvalues";
    return done(Verdict::Unclassified);
  }

  // m = 2: adapted frame and lemma identities
  for (const auto& p : points) {
    if (!p.frame) {
      ev << "no simple Schouten eigenvalue at a sample point";
      return done(Verdict::Unclassified);
    }
    detail::merge_max(rep.identity_residuals, p.lemma, "lemma.");
  }
  if (!detail::all_below(rep.identity_residuals, "lemma.", tol.zero, ev)) return done(Verdict::Unclassified);
  if (rep.sigma == 1) {
    if (!rep.is_affine_sphere) {
      ev << "shape operator is umbilic pointwise but H is not constant";
      return done(Verdict::Unclassified);
    }
    ev << "hyperbolic affine sphere with quasi-Einstein metric, H=" << detail::fmt(rep.mean_curvature);
    return done(Verdict::LorentzSphere_1_3);
  }
  if (rep.sigma != 2) {
    ev << "shape operator has more than two eigenvalues";
    return done(Verdict::Unclassified);
  }

  double a_lo = std::numeric_limits<double>::infinity(), a_hi = 0.0;
  double c_lo = a_lo, c_hi = -a_lo, case3 = 0.0;
  for (const auto& p : points) {
    if (!p.warp || !p.c) {
      ev << "warped-product data unavailable at a sample point";
      return done(Verdict::Unclassified);
    }
    const double a = std::abs(p.warp->alpha);
    a_lo = std::min(a_lo, a);
    a_hi = std::max(a_hi, a);
    c_lo = std::min(c_lo, *p.c);
    c_hi = std::max(c_hi, *p.c);
    const auto& f = *p.frame;
    detail::merge_max(rep.identity_residuals, p.warped, "warped.");
    case3 = std::max(case3, std::hypot(f.mu2, p.warp->alpha - f.lambda2) /
                                std::max(1.0, std::abs(p.warp->alpha)));
  }
  {
    std::map<std::string, double> pointwise, stencil;
    for (const auto& [k, v] : rep.identity_residuals) {
      if (k.rfind("warped.", 0) != 0) continue;
      const bool fd = k.rfind("warped.T_", 0) == 0 || k.rfind("warped.X_", 0) == 0;
      (fd ? stencil : pointwise)[k] = v;
    }
    const bool ok = detail::all_below(pointwise, "warped.", tol.zero, ev);
    if (!(detail::all_below(stencil, "warped.", tol.derivative, ev) && ok)) return done(Verdict::Unclassified);
  }
  rep.alpha_max = a_hi;
  if (a_hi < tol.zero)
    rep.f_tag = "1";
  else if (a_lo > tol.nonzero)
    rep.f_tag = "t";
  else {
    ev << "warping function undecided: |alpha| ranges over [" << detail::fmt(a_lo) << ", " << detail::fmt(a_hi)
       << "]";
    return done(Verdict::Unclassified);
  }
  const double c = 0.5 * (c_lo + c_hi);
  rep.c = c;
  ev << "f=" << rep.f_tag << ", c=" << detail::fmt(c) << "; ";
  if (c_hi - c_lo > tol.zero * std::max(1.0, std::abs(c))) {
    ev << "fiber curvature not constant (spread " << detail::fmt(c_hi - c_lo) << ")";
    return done(Verdict::Unclassified);
  }
  const bool c_zero = std::abs(c) < tol.zero;
  const bool c_clear = std::abs(c) > tol.nonzero;
  if (!c_zero && !c_clear) {
    ev << "sign of c undecided";
    return done(Verdict::Unclassified);
  }
  if (rep.f_tag == "1") {
    if (c_zero) {
      ev << "c=0 with f=1 contradicts nonzero scalar curvature";
      return done(Verdict::Unclassified);
    }
    return done(c > 0 ? Verdict::WarpedFamily_1 : Verdict::WarpedFamily_2);
  }
  if (c_zero) {
    if (case3 < tol.zero) {
      ev << "mu2 = 0 and lambda2 = alpha";
      return done(Verdict::WarpedFamily_6);
    }
    return done(Verdict::WarpedFamily_5);
  }
  if (c > 0) {
    if (std::abs(c - 1.0) <= tol.nonzero) {
      ev << "c=1 contradicts nonzero scalar curvature";
      return done(Verdict::Unclassified);
    }
    return done(Verdict::WarpedFamily_3);
  }
  return done(Verdict::WarpedFamily_4);
}

}  // namespace affinelab
