// SPDX-License-Identifier: Apache-2.0
#include <affinelab/classify.hpp>

#include "common.hpp"

#include <gtest/gtest.h>

#include <random>

namespace affinelab {
namespace {

using testing::random_point;

std::vector<PointRecord> sample(const ImmersionSpec& spec, std::mt19937& rng, int count, double lo, double hi,
                                const AnalysisOptions& opt = {}) {
  std::vector<PointRecord> out;
  for (int k = 0; k < count; ++k) out.push_back(analyze_point(spec, random_point(rng, spec.chart_dim, lo, hi), opt));
  return out;
}

/// W6 written out directly: t = u1, fiber coordinates u2 .. un.
std::string w6_text(int n) {
  std::string s = testing::header(n), sq;
  for (int k = 2; k <= n; ++k) {
    s += "u" + std::to_string(k) + ", ";
    sq += (k > 2 ? " + u" : "u") + std::to_string(k) + "^2";
  }
  const std::string p = std::to_string(n + 2);
  return s + "(" + sq + ")/2 - log(u1)/" + p + ", u1^" + p + "/" + p + ")";
}

TEST(EigenPartition, CountsMultiplicitiesOfGeneralizedProblem) {
  std::mt19937 rng(11);
  const Matrix B = testing::random_unimodular(rng, 4);
  const Matrix h = B.transpose() * B;
  // A = V diag(d) V^{-1} with V h-orthonormal is h-self-adjoint
  const Matrix V = orthonormal_frame(h).E;
  Vector d(4);
  d << 2.0, -1.0, 2.0, 2.0;
  const Matrix A = V * d.asDiagonal() * V.inverse();
  const auto p = eigen_partition(A, h);
  EXPECT_TRUE(p.confident());
  EXPECT_EQ(p.m(), 2);
  ASSERT_EQ(p.values.size(), 2u);
  EXPECT_NEAR(p.values[0], -1.0, 1e-12);
  EXPECT_NEAR(p.values[1], 2.0, 1e-12);
  EXPECT_EQ(p.multiplicities, (std::vector<int>{1, 3}));
  EXPECT_LT(p.self_adjoint, 1e-12);
  EXPECT_LT(p.frame_error, 1e-12);
  const Matrix& E = p.frames[1];
  EXPECT_LT((E.transpose() * h * E - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((A * E - 2.0 * E).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(EigenPartition, NearlyDegenerateGapIsUncertain) {
  const Matrix h = Matrix::Identity(3, 3);
  Matrix A = Matrix::Zero(3, 3);
  A.diagonal() << 1.0, 1.0 + 1e-6, 3.0;
  const auto p = eigen_partition(A, h);
  EXPECT_FALSE(p.confident());
  EXPECT_EQ(p.m_min, 2);
  EXPECT_EQ(p.m_max, 3);
  A(1, 1) = 1.0 + 1e-12;
  EXPECT_EQ(eigen_partition(A, h).m(), 2);
  EXPECT_TRUE(eigen_partition(A, h).confident());
}

TEST(Classify, ConstantCurvatureHasSingleSchoutenEigenvalue) {
  std::mt19937 rng(12);
  for (int n : {3, 4}) {
    const auto spec = parse_immersion(testing::sphere_graph(n, 0.7));
    const auto rec = analyze_point(spec, random_point(rng, n, -0.2, 0.2));
    EXPECT_EQ(rec.P_part.m(), 1);
    EXPECT_EQ(rec.S_part.m(), 1);
    EXPECT_NEAR(rec.P_part.values[0], 0.35, 1e-9);
    EXPECT_FALSE(rec.frame.has_value());
  }
}

TEST(Classify, LorentzSphereSatisfiesAdaptedFrameIdentities) {
  std::mt19937 rng(13);
  for (int n : {3, 4}) {
    const auto spec = parse_immersion(testing::lorentz_hypersurface(n));
    for (int trial = 0; trial < 4; ++trial) {
      const auto rec = analyze_point(spec, random_point(rng, n, -0.5, 0.5));
      ASSERT_FALSE(rec.error);
      EXPECT_EQ(rec.P_part.m(), 2);
      EXPECT_EQ(rec.P_part.multiplicities.front() == 1 ? rec.P_part.multiplicities.back()
                                                       : rec.P_part.multiplicities.front(),
                n - 1);
      EXPECT_EQ(rec.S_part.m(), 1);
      ASSERT_TRUE(rec.frame.has_value());
      const auto& f = *rec.frame;
      // nu_1 + (n-1) nu_2 = tr P and the relations of the adapted frame
      EXPECT_NEAR(f.lambda1, -(n - 1.0) * f.lambda2, 1e-9);
      EXPECT_NEAR(f.mu1, f.mu2, 1e-9);
      EXPECT_NEAR(rec.H, -n * f.lambda2 * f.lambda2, 1e-8);
      EXPECT_NEAR(rec.r, (n * n - 1.0) * (n - 2.0) * rec.H / n, 1e-8);
      EXPECT_NEAR(rec.J, -(n + 2.0) * rec.H / (n * n), 1e-9);
      for (const auto& [key, value] : rec.lemma) EXPECT_LT(value, 1e-6) << key;
      EXPECT_LT(rec.lemma.at("traceless_ricci"), 1e-8);
      EXPECT_LT(rec.lemma.at("traceless_ricci_bound"), 1e-8);
      EXPECT_LT(rec.lemma.at("pinching_violation"), 1e-8);
    }
  }
}

TEST(Classify, ClosedFormWarpedProductRecoversWarpingData) {
  for (int n : {3, 4}) {
    const auto spec = parse_immersion(w6_text(n));
    for (double t : {0.7, 1.0, 1.6}) {
      ChartPoint p(static_cast<std::size_t>(n), 0.15);
      p[0] = t;
      const auto rec = analyze_point(spec, p);
      ASSERT_TRUE(rec.frame && rec.warp && rec.c);
      EXPECT_EQ(rec.S_part.m(), 2);
      EXPECT_EQ(rec.P_part.m(), 2);
      EXPECT_NEAR(rec.warp->alpha, -1.0 / t, 1e-9);
      EXPECT_NEAR(rec.frame->lambda2, -1.0 / t, 1e-9);
      EXPECT_NEAR(rec.frame->mu2, 0.0, 1e-9);
      EXPECT_NEAR(*rec.c, 0.0, 1e-9);
      // T is the coordinate field of t
      EXPECT_NEAR(rec.T_chart(0), 1.0, 1e-9);
      EXPECT_LT(rec.T_chart.tail(n - 1).cwiseAbs().maxCoeff(), 1e-9);
      for (const auto& [key, value] : rec.warped) EXPECT_LT(value, 1e-6) << key;
      for (const auto& [key, value] : rec.lemma) EXPECT_LT(value, 1e-6) << key;
    }
  }
}

TEST(Classify, BadlyScaledChartsKeepPrecision) {
  const auto base = parse_immersion(w6_text(3));
  const ChartPoint p = {1.3, 0.2, -0.1};
  Mat<double> a(4, 4, 0.0), b(3, 3, 0.0);
  a(0, 0) = 50.0, a(1, 1) = 0.02, a(2, 2) = 1.0, a(3, 3) = 1.0;
  a(0, 3) = 40.0;
  b(0, 0) = 0.05, b(1, 1) = 20.0, b(2, 2) = 1.0;
  b(1, 0) = 15.0;
  // u = b v + p, so v = 0 is the same point
  const auto moved = reparametrize(compose_ambient(base, a, {1.0, 2.0, 3.0, 4.0}), b, p);
  const auto ref = analyze_point(base, p);
  const auto rec = analyze_point(moved, {0.0, 0.0, 0.0});
  ASSERT_FALSE(rec.error);
  for (const auto& [key, value] : rec.identities) EXPECT_LT(value, 1e-10) << key;
  EXPECT_NEAR(rec.H, ref.H, 1e-10);
  EXPECT_NEAR(rec.J, ref.J, 1e-10);
  ASSERT_TRUE(rec.c && ref.c);
  EXPECT_NEAR(*rec.c, *ref.c, 1e-9);
  // T in the moved chart maps to T in the original one
  Vector T(3);
  for (int i = 0; i < 3; ++i) {
    T(i) = 0.0;
    for (int j = 0; j < 3; ++j) T(i) += b(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) * rec.T_chart(j);
  }
  EXPECT_LT((T - ref.T_chart).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Classify, DerivativeChecksVanishOnClosedForm) {
  const auto spec = parse_immersion(w6_text(3));
  const auto rec = analyze_point(spec, {1.3, 0.1, -0.2});
  ASSERT_TRUE(rec.warped.count("T_alpha"));
  EXPECT_LT(rec.warped.at("T_alpha"), 1e-8);
  EXPECT_LT(rec.warped.at("T_lambda2"), 1e-8);
  EXPECT_LT(rec.warped.at("T_mu2"), 1e-8);
  EXPECT_LT(rec.warped.at("X_scalars"), 1e-8);
  AnalysisOptions opt;
  opt.derivative_checks = false;
  EXPECT_FALSE(analyze_point(spec, {1.3, 0.1, -0.2}, opt).warped.count("T_alpha"));
}

TEST(Verdict, EmptyAndFailingSamples) {
  EXPECT_EQ(verdict({}, 3).verdict, Verdict::Unclassified);
  PointRecord bad;
  bad.error = "affine metric is not positive definite";
  bad.error_code = ErrorCode::convexity;
  const auto rep = verdict({bad}, 3);
  EXPECT_EQ(rep.verdict, Verdict::Unclassified);
  EXPECT_FALSE(rep.convexity_ok);
  EXPECT_FALSE(rep.numerical_ok);
  PointRecord good;
  good.identities["gauss"] = 1e-3;
  const auto rep2 = verdict({good}, 3);
  EXPECT_FALSE(rep2.identities_ok);
  EXPECT_NE(rep2.verdict_evidence.find("gauss"), std::string::npos);
}

TEST(Verdict, SaddleFailsAsNumericalError) {
  const auto spec = parse_immersion("n=3; F = (u1, u2, u3, u1^2 - u2^2 + u3^2)");
  const auto rec = analyze_point(spec, {0.1, 0.2, 0.3});
  ASSERT_TRUE(rec.error.has_value());
  EXPECT_EQ(*rec.error_code, ErrorCode::convexity);
}

TEST(Verdict, ReferenceSpecs) {
  std::mt19937 rng(14);
  struct Case {
    std::string text;
    double lo, hi;
    Verdict expected;
  };
  const std::vector<Case> cases = {
      {testing::paraboloid(3), -0.8, 0.8, Verdict::Quadric},
      {testing::sphere_graph(4, 1.3), -0.2, 0.2, Verdict::Quadric},
      {testing::hyperboloid_graph(3, -0.4), -0.8, 0.8, Verdict::Quadric},
      {testing::product_hypersurface(3), -0.8, 0.8, Verdict::CalabiType_1_2},
      {testing::product_hypersurface(4), -0.8, 0.8, Verdict::CalabiType_1_2},
      {testing::lorentz_hypersurface(3), -0.6, 0.6, Verdict::LorentzSphere_1_3},
      {testing::lorentz_hypersurface(4), -0.6, 0.6, Verdict::LorentzSphere_1_3},
      {testing::kPerturbed, -0.8, 0.8, Verdict::Unclassified},
      {testing::paraboloid(2), -0.8, 0.8, Verdict::Unclassified},
  };
  for (const auto& c : cases) {
    const auto spec = parse_immersion(c.text);
    const auto rep = verdict(sample(spec, rng, 5, c.lo, c.hi), spec.chart_dim);
    EXPECT_EQ(to_string(rep.verdict), to_string(c.expected)) << c.text << "\n" << rep.verdict_evidence;
  }
  const auto w6 = parse_immersion(w6_text(3));
  const auto rep = verdict(sample(w6, rng, 4, 0.6, 1.5), 3);
  EXPECT_EQ(rep.verdict, Verdict::WarpedFamily_6) << rep.verdict_evidence;
  EXPECT_EQ(rep.f_tag, "t");
  ASSERT_TRUE(rep.c.has_value());
  EXPECT_NEAR(*rep.c, 0.0, 1e-9);
}

TEST(Verdict, AnnotatesQuadricType) {
  std::mt19937 rng(15);
  const auto ell = parse_immersion(testing::sphere_graph(3, 2.0));
  auto rep = verdict(sample(ell, rng, 3, -0.2, 0.2), 3);
  EXPECT_NE(rep.verdict_evidence.find("ellipsoid"), std::string::npos);
  EXPECT_NEAR(rep.mean_curvature, 2.0, 1e-9);
  const auto hyp = parse_immersion(testing::hyperboloid_graph(3, -2.0));
  rep = verdict(sample(hyp, rng, 3, -0.5, 0.5), 3);
  EXPECT_NE(rep.verdict_evidence.find("hyperboloid"), std::string::npos);
  const auto par = parse_immersion(testing::paraboloid(3));
  rep = verdict(sample(par, rng, 3, -0.5, 0.5), 3);
  EXPECT_NE(rep.verdict_evidence.find("paraboloid"), std::string::npos);
}

TEST(Verdict, InvariantUnderAmbientAndChartMaps) {
  std::mt19937 rng(16);
  const auto base = parse_immersion(testing::lorentz_hypersurface(3));
  const ChartPoint p = {0.2, -0.1, 0.3};
  const auto ref = analyze_point(base, p);
  for (int trial = 0; trial < 3; ++trial) {
    const Matrix A = testing::random_unimodular(rng, 4);
    const Matrix B = testing::random_unimodular(rng, 3) * 0.8;
    // chart change u = B v + p maps v = 0 to p
    const auto moved = reparametrize(compose_ambient(base, testing::to_mat(A), {0.5, -1.0, 2.0, 0.25}),
                                     testing::to_mat(B), p);
    const auto rec = analyze_point(moved, {0.0, 0.0, 0.0});
    EXPECT_NEAR(rec.H, ref.H, 1e-9);
    EXPECT_NEAR(rec.J, ref.J, 1e-9);
    EXPECT_NEAR(rec.r, ref.r, 1e-8);
    EXPECT_EQ(rec.P_part.multiplicities, ref.P_part.multiplicities);
    EXPECT_EQ(rec.S_part.multiplicities, ref.S_part.multiplicities);
    ASSERT_TRUE(rec.frame.has_value());
    EXPECT_NEAR(rec.frame->lambda2 * rec.frame->lambda2, ref.frame->lambda2 * ref.frame->lambda2, 1e-9);
  }
}

}  // namespace
}  // namespace affinelab
