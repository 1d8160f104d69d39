// SPDX-License-Identifier: Apache-2.0
#include <affinelab/curvature.hpp>

#include "common.hpp"

#include <gtest/gtest.h>

#include <random>

namespace affinelab {
namespace {

using testing::random_point;

struct Computed {
  BlaschkePoint bp;
  CurvaturePack cp;
};

Computed at(const std::string& text, const ChartPoint& p, int order = 5) {
  auto bp = blaschke_point(parse_immersion(text), p, order);
  auto cp = curvature_pack(bp);
  return {std::move(bp), std::move(cp)};
}

void expect_curvature_identities(const CurvaturePack& cp, double tol = 1e-7) {
  EXPECT_LT(cp.checks.antisymmetry, tol);
  EXPECT_LT(cp.checks.pair_symmetry, tol);
  EXPECT_LT(cp.checks.bianchi, tol);
  EXPECT_LT(cp.checks.ricci_symmetry, tol);
  EXPECT_LT(cp.checks.weyl_trace, tol);
  EXPECT_LT(cp.checks.metricity, 1e-9);
}

void expect_structure(const Computed& c, double tol = 1e-7) {
  const auto s = structure_residuals(c.bp, c.cp);
  EXPECT_LT(s.apolarity, tol);
  EXPECT_LT(s.gauss, tol);
  EXPECT_LT(s.codazziK, tol);
  ASSERT_TRUE(s.codazziS.has_value());
  EXPECT_LT(*s.codazziS, tol);
  EXPECT_LT(s.chi_identity, tol);
  const auto rc = semiparallel_residual(c.bp, c.cp);
  ASSERT_TRUE(rc.discrepancy.has_value());
  EXPECT_LT(*rc.discrepancy, tol);
}

TEST(Curvature, ParaboloidIsFlat) {
  const auto c = at(testing::paraboloid(3), {0.4, -0.1, 0.3});
  EXPECT_LT(sup_abs(c.cp.Riem), 1e-12);
  EXPECT_LT(c.cp.P.cwiseAbs().maxCoeff(), 1e-12);
  expect_curvature_identities(c.cp);
  expect_structure(c);
}

TEST(Curvature, SpheresHaveConstantSectionalCurvature) {
  std::mt19937 rng(3);
  std::normal_distribution<double> g;
  for (int n : {3, 4}) {
    for (double curv : {0.5, 1.5, -0.7, -2.0}) {
      const std::string text = curv > 0 ? testing::sphere_graph(n, curv) : testing::hyperboloid_graph(n, curv);
      const auto c = at(text, random_point(rng, n, -0.2, 0.2));
      for (int trial = 0; trial < 5; ++trial) {
        Vector x(n), y(n);
        for (int k = 0; k < n; ++k) x(k) = g(rng), y(k) = g(rng);
        EXPECT_NEAR(sectional_curvature(c.bp, c.cp, x, y), curv, 1e-9);
      }
      // constant curvature c gives P = (c/2) I
      EXPECT_LT((c.cp.P - 0.5 * curv * Matrix::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-9);
      EXPECT_NEAR(c.cp.chi, curv, 1e-9);
      EXPECT_LT(c.cp.weyl_norm, 1e-8);
      const auto rc = semiparallel_residual(c.bp, c.cp);
      EXPECT_LT(rc.action, 1e-9);
      EXPECT_LT(*rc.commutator, 1e-9);
      expect_curvature_identities(c.cp);
      expect_structure(c);
      // Gauss equation with K = 0: R(X,Y)Z = c (h(Y,Z)X - h(X,Z)Y)
      for (int l = 0; l < n; ++l)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
              const double expected = curv * ((l == i ? c.bp.h(j, k) : 0.0) - (l == j ? c.bp.h(i, k) : 0.0));
              EXPECT_NEAR(c.cp.Riem(l, i, j, k), expected, 1e-8);
            }
    }
  }
}

TEST(Curvature, ProductHypersurfaceIsFlatEverywhere) {
  std::mt19937 rng(4);
  for (int trial = 0; trial < 8; ++trial) {
    const auto c = at(testing::product_hypersurface(3), random_point(rng, 3));
    EXPECT_LT(sup_abs(c.cp.Riem), 1e-10);
    const double H = mean_curvature(c.bp);
    EXPECT_NEAR(pick_invariant(c.bp), -H, 1e-10);
    EXPECT_GT(pick_invariant(c.bp), 0.0);
    const auto rc = semiparallel_residual(c.bp, c.cp);
    EXPECT_LT(rc.action, 1e-9);
    EXPECT_LT(*rc.commutator, 1e-8);
    expect_structure(c);
  }
}

TEST(Curvature, WeylVanishesInDimensionThree) {
  std::mt19937 rng(5);
  {
    const auto c = at(testing::kPerturbed, random_point(rng, 3, -0.5, 0.5));
    EXPECT_LT(c.cp.weyl_norm, 1e-9);
    expect_curvature_identities(c.cp);
    expect_structure(c);
  }
  const auto c = at("n=3; F = (u1, u2, u3, exp(u1) + u2^2 + u3^4/12 + u3^2 + u1*u2/4)", {0.2, -0.3, 0.1});
  EXPECT_LT(c.cp.weyl_norm, 1e-9);
  EXPECT_GT(sup_abs(c.cp.Riem), 1e-3);
  expect_curvature_identities(c.cp);
  expect_structure(c);
}

TEST(Curvature, LorentzHypersurfaceIsSemiparallelAndConformallyFlat) {
  std::mt19937 rng(6);
  for (int n : {3, 4}) {
    const int points = n == 3 ? 20 : 5;
    for (int trial = 0; trial < points; ++trial) {
      const auto c = at(testing::lorentz_hypersurface(n), random_point(rng, n, -0.6, 0.6));
      const auto rc = semiparallel_residual(c.bp, c.cp);
      EXPECT_LT(rc.action, 1e-7);
      EXPECT_LT(*rc.commutator, 1e-7);
      EXPECT_LT(c.cp.weyl_norm, 1e-7);
      const double H = mean_curvature(c.bp);
      EXPECT_LT(H, 0.0);
      EXPECT_NEAR(pick_invariant(c.bp), -(n + 2.0) * H / (n * n), 1e-9);
      expect_curvature_identities(c.cp);
      expect_structure(c);
    }
  }
}

TEST(Curvature, PerturbedGraphIsNotSemiparallel) {
  const auto c = at(testing::kPerturbed, {0.3, -0.2, 0.4});
  const auto rc = semiparallel_residual(c.bp, c.cp);
  EXPECT_GT(rc.action, 1e-3);
  EXPECT_GT(*rc.commutator, 1e-3);
  EXPECT_LT(*rc.discrepancy, 1e-7);
  expect_structure(c);
}

TEST(Curvature, StructureIdentitiesOnGenericConvexHypersurfaces) {
  std::mt19937 rng(8);
  const char* specs[] = {
      "n=3; F = (u1, u2, u3, exp(u1 + u2/3) + u2^2 + u3^2 + u1^2*u3^2)",
      "n=4; F = (u1, u2, u3, u4, (u1^2+u2^2+u3^2+u4^2)/2 + u1*u2*u3*u4/5 + u4^3/7)",
      "n=3; F = (exp(u3)*cos(u1), exp(u3)*sin(u1), u2, exp(u3)^2/2 + u2^2)",
  };
  for (const char* text : specs) {
    for (int trial = 0; trial < 3; ++trial) {
      const auto spec = parse_immersion(text);
      const auto c = at(text, random_point(rng, spec.chart_dim, -0.4, 0.4));
      expect_curvature_identities(c.cp);
      expect_structure(c);
    }
  }
}

TEST(Curvature, SchoutenNeedsDimensionThree) {
  const auto bp = blaschke_point(parse_immersion(testing::paraboloid(2)), {0.1, 0.2}, 5);
  EXPECT_THROW(schouten_weyl(riemann(bp.jets.GammaHat), bp.jets.h), Error);
  const auto cp = curvature_pack(bp);
  EXPECT_EQ(cp.P.size(), 0);
}

TEST(Curvature, CommutatorNeedsOrderFive) {
  const auto bp = blaschke_point(parse_immersion(testing::kPerturbed), {0.1, 0.2, 0.3}, 4);
  const auto cp = curvature_pack(bp);
  EXPECT_FALSE(cp.RC_comm.has_value());
  EXPECT_FALSE(semiparallel_residual(bp, cp).discrepancy.has_value());
}

}  // namespace
}  // namespace affinelab
