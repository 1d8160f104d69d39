// SPDX-License-Identifier: Apache-2.0
#include <affinelab/dsl.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace affinelab {
namespace {

constexpr const char* kParaboloid = "n=3; F = (u1, u2, u3, (u1^2+u2^2+u3^2)/2)";
constexpr const char* kCalabi = "n=3; F = (exp(u1), exp(u2), exp(u3), exp(-u1-u2-u3))";

ErrorCode parse_error_code(const std::string& text) {
  try {
    parse_immersion(text);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::io;  // sentinel: no error
}

TEST(Parse, ParaboloidSpec) {
  const auto spec = parse_immersion(kParaboloid);
  EXPECT_EQ(spec.chart_dim, 3);
  EXPECT_EQ(spec.ambient_dim(), 4);
  ASSERT_EQ(spec.components.size(), 4u);
  const auto v = eval_point(spec, {1.0, 2.0, 3.0});
  EXPECT_DOUBLE_EQ(v[3], 7.0);
}

TEST(Parse, ExponentialChartOfProductHypersurface) {
  const auto spec = parse_immersion(kCalabi);
  const auto x = eval_point(spec, {0.3, -0.2, 0.5});
  EXPECT_NEAR(x[0] * x[1] * x[2] * x[3], 1.0, 1e-15);
}

TEST(Parse, ComponentCountMismatchIsSemanticError) {
  EXPECT_EQ(parse_error_code("n=2; F = (u1, u2)"), ErrorCode::semantic);
  EXPECT_EQ(parse_error_code("n=2; F = (u1, u2, u1, u2)"), ErrorCode::semantic);
}

TEST(Parse, ErrorsCarryPositions) {
  try {
    parse_immersion("n=2;\nF = (u1, u2,\n     u3 + 1)");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.code(), ErrorCode::semantic);
    EXPECT_EQ(e.line(), 3);
    EXPECT_EQ(e.column(), 6);
  }
  try {
    parse_immersion("n=2; F = (u1, u2 +, 1)");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.code(), ErrorCode::syntax);
    EXPECT_EQ(e.column(), 19);
  }
}

TEST(Parse, RejectsUnknownNamesAndArity) {
  EXPECT_EQ(parse_error_code("n=1; F = (u1, tan(u1))"), ErrorCode::semantic);
  EXPECT_EQ(parse_error_code("n=1; F = (u1, exp(u1, u1))"), ErrorCode::semantic);
  EXPECT_EQ(parse_error_code("n=1; F = (x, u1)"), ErrorCode::semantic);
  EXPECT_EQ(parse_error_code("n=1; F = (u1, u1^u1)"), ErrorCode::semantic);
  EXPECT_EQ(parse_error_code("F = (u1, u1)"), ErrorCode::syntax);
  EXPECT_EQ(parse_error_code("n=1; F = (u1, 2 $ u1)"), ErrorCode::syntax);
  EXPECT_EQ(parse_error_code("n=1; F = (u1, u1); F = (u1, u1)"), ErrorCode::syntax);
}

TEST(Parse, PowerBindsTighterThanUnaryMinus) {
  const auto spec = parse_immersion("n=1; F = (u1, -u1^2)");
  EXPECT_DOUBLE_EQ(eval_point(spec, {3.0})[1], -9.0);
  const auto spec2 = parse_immersion("n=1; F = (u1, 2^3^2)");
  EXPECT_DOUBLE_EQ(eval_point(spec2, {0.0})[1], 512.0);
  const auto spec3 = parse_immersion("n=1; F = (u1, u1^-2 + u1^(1/2))");
  EXPECT_DOUBLE_EQ(eval_point(spec3, {4.0})[1], 1.0 / 16 + 2.0);
}

TEST(Parse, DomainAndNameStatements) {
  const auto spec = parse_immersion(
      "# comment line\nn = 2;\nname = \"bowl\";\ndomain u2 = [-1/2, 3];\nF = (u1, u2, u1^2 + u2^2);");
  EXPECT_EQ(spec.name, "bowl");
  EXPECT_FALSE(spec.domain[0].has_value());
  ASSERT_TRUE(spec.domain[1].has_value());
  EXPECT_DOUBLE_EQ(spec.domain[1]->lo, -0.5);
  EXPECT_DOUBLE_EQ(spec.domain[1]->hi, 3.0);
}

TEST(EvalJet, PolynomialPassthrough) {
  const auto spec = parse_immersion(kParaboloid);
  const auto jets = eval_jet(spec, {0.0, 0.0, 0.0}, 2);
  MultiIndex a{};
  for (int i = 0; i < 3; ++i) {
    a = {};
    a[i] = 1;
    EXPECT_DOUBLE_EQ(jets[i].coeff(a), 1.0);
    a[i] = 2;
    EXPECT_DOUBLE_EQ(jets[3].coeff(a), 0.5);
  }
  EXPECT_DOUBLE_EQ(jets[3].value(), 0.0);
}

TEST(EvalJet, ExponentialChartGradients) {
  const auto spec = parse_immersion(kCalabi);
  const auto jets = eval_jet(spec, {0.0, 0.0, 0.0}, 1);
  for (int c = 0; c < 4; ++c) {
    EXPECT_DOUBLE_EQ(jets[c].value(), 1.0);
    for (int v = 0; v < 3; ++v) EXPECT_DOUBLE_EQ(jets[c].gradient(v), c == 3 ? -1.0 : (c == v ? 1.0 : 0.0));
  }
}

TEST(EvalJet, DomainViolationNamesSubexpression) {
  const auto spec = parse_immersion("n=1; F = (u1, 1 + log(u1))");
  try {
    eval_jet(spec, {0.0}, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::evaluation);
    EXPECT_NE(std::string(e.what()).find("log(u1)"), std::string::npos);
  }
  EXPECT_THROW(eval_point(parse_immersion("n=1; F = (u1, (u1 - 1)^(1/3))"), {0.5}), Error);
}

TEST(EvalJet, MatchesPointEvaluationAndCentralDifferences) {
  const char* specs[] = {
      kParaboloid, kCalabi,
      "n=3; F = (exp(u3)*u1, exp(u3)*u2, exp(u3)*sqrt(1+u1^2+u2^2), exp(-3*u3))",
      "n=2; F = (2*u1/(1+u1^2+u2^2), 2*u2/(1+u1^2+u2^2), (1-u1^2-u2^2)/(1+u1^2+u2^2))",
      "n=2; F = (sin(u1)*cos(u2), u2^(5/2), log(1 + u1^2) - u2^3)",
  };
  const double h = 1e-4;
  for (const char* text : specs) {
    const auto spec = parse_immersion(text);
    ChartPoint p(static_cast<std::size_t>(spec.chart_dim));
    for (std::size_t k = 0; k < p.size(); ++k) p[k] = 0.3 + 0.1 * static_cast<double>(k);
    const auto jets = eval_jet(spec, p, 3);
    const auto values = eval_point(spec, p);
    for (std::size_t c = 0; c < jets.size(); ++c) {
      EXPECT_NEAR(jets[c].value(), values[c], 1e-14 * std::max(1.0, std::abs(values[c])));
      for (int v = 0; v < spec.chart_dim; ++v) {
        ChartPoint a = p, b = p;
        a[static_cast<std::size_t>(v)] += h;
        b[static_cast<std::size_t>(v)] -= h;
        const double fd = (eval_point(spec, a)[c] - eval_point(spec, b)[c]) / (2 * h);
        EXPECT_LT(std::abs(fd - jets[c].gradient(v)) / std::max(1.0, std::abs(fd)), 1e-6) << text;
      }
    }
  }
}

TEST(Profiles, IntegralMatchesClosedForm) {
  // g(t) = int_{1/2}^t s^2 exp(s) ds = e^s (s^2 - 2 s + 2) |_{1/2}^t
  const auto spec = parse_immersion(
      "n=2; profile g(s) = integral(s^2*exp(s), 0.5, 0); F = (u1, u2, g(u1) + u2^2)");
  auto closed = [](double t) { return std::exp(t) * (t * t - 2 * t + 2); };
  const auto jets = eval_jet(spec, {1.3, 0.0}, 4);
  EXPECT_NEAR(jets[2].value(), closed(1.3) - closed(0.5), 1e-13);
  // derivatives come from the integrand: g' = t^2 e^t, g'' = (t^2 + 2t) e^t
  MultiIndex a{};
  a[0] = 1;
  EXPECT_NEAR(jets[2].partial(a), 1.69 * std::exp(1.3), 1e-13);
  a[0] = 2;
  EXPECT_NEAR(jets[2].partial(a), (1.69 + 2.6) * std::exp(1.3), 1e-12);
}

TEST(Profiles, Ode2MatchesClosedForm) {
  // t^2 k'' - 4 t k' + 4 (25/16) k = 0 has the double root k = t^(5/2)
  const auto spec = parse_immersion(
      "n=1; profile k(s) = ode2(s^2, -4*s, 4*25/16, 1, 1, 5/2); F = (u1, k(u1))");
  const auto jets = eval_jet(spec, {1.7}, 5);
  const Jet expected = pow(Jet::variable(1, 5, 0, 1.7), 2.5);
  for (std::size_t k = 0; k < expected.coefficients().size(); ++k)
    EXPECT_NEAR(jets[1].coefficients()[k], expected.coefficients()[k], 1e-10);
  // backwards integration from t0
  EXPECT_NEAR(eval_point(spec, {0.6})[1], std::pow(0.6, 2.5), 1e-11);
}

TEST(Profiles, ProfilesMayReferenceEarlierProfiles) {
  const auto spec = parse_immersion(
      "n=1; profile a(s) = integral(1, 0, 0); profile b(s) = integral(2*a(s), 0, 0); F = (u1, b(u1))");
  EXPECT_NEAR(eval_point(spec, {1.5})[1], 2.25, 1e-13);
  EXPECT_EQ(parse_error_code("n=1; profile b(s) = integral(a(s), 0, 0); profile a(s) = integral(1,0,0); F = (u1, b(u1))"),
            ErrorCode::semantic);
  EXPECT_EQ(parse_error_code("n=1; profile b(s) = integral(u1, 0, 0); F = (u1, b(u1))"), ErrorCode::semantic);
}

// Random expression trees for the printer round trip.
std::string random_expr(std::mt19937& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 9);
  std::uniform_int_distribution<int> var(1, 3);
  switch (pick(rng)) {
    case 0: return "u" + std::to_string(var(rng));
    case 1: return std::to_string(std::uniform_int_distribution<int>(0, 9)(rng)) + ".25";
    case 2: return random_expr(rng, depth - 1) + " + " + random_expr(rng, depth - 1);
    case 3: return random_expr(rng, depth - 1) + " - " + random_expr(rng, depth - 1);
    case 4: return "(" + random_expr(rng, depth - 1) + ")*" + random_expr(rng, depth - 1);
    case 5: return random_expr(rng, depth - 1) + "/(" + random_expr(rng, depth - 1) + ")";
    case 6: return "-" + random_expr(rng, depth - 1);
    case 7: return "(" + random_expr(rng, depth - 1) + ")^(3/2)";
    case 8: return "exp(" + random_expr(rng, depth - 1) + ")";
    default: return "-u1^2 - (" + random_expr(rng, depth - 1) + ")^-1";
  }
}

TEST(Printer, ParsePrintParseIsFixedPoint) {
  std::mt19937 rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    std::string text = "n=3; F = (";
    for (int c = 0; c < 4; ++c) text += (c ? ", " : "") + random_expr(rng, 4);
    text += ")";
    const auto once = to_sdl(parse_immersion(text));
    const auto twice = to_sdl(parse_immersion(once));
    EXPECT_EQ(once, twice);
  }
  const auto with_profiles = to_sdl(parse_immersion(
      "n=2; name=\"x\"; domain u1 = [0.5, 2]; profile k(s) = ode2(s^2, -4*s, 2, 1, 1, 0.1);"
      "profile g(s) = integral(s^4*k(s)^(-3/4), 0.5, 0); F = (g(u1), u1*u2, k(u1)^(1/4))"));
  EXPECT_EQ(with_profiles, to_sdl(parse_immersion(with_profiles)));
}

TEST(Transforms, AmbientMapAndReparametrization) {
  const auto spec = parse_immersion(kParaboloid);
  Mat<double> a(4, 4, 0.0);
  for (int k = 0; k < 4; ++k) a(k, k) = 1.0;
  a(0, 3) = 2.0;
  const auto mapped = compose_ambient(spec, a, {0.0, 1.0, 0.0, 0.0});
  const auto x = eval_point(mapped, {1.0, 1.0, 1.0});
  EXPECT_DOUBLE_EQ(x[0], 1.0 + 2.0 * 1.5);
  EXPECT_DOUBLE_EQ(x[1], 2.0);

  Mat<double> b(3, 3, 0.0);
  b(0, 1) = 1.0;
  b(1, 0) = -1.0;
  b(2, 2) = 1.0;
  const auto re = reparametrize(spec, b, {0.5, 0.0, 0.0});
  const auto y = eval_point(re, {2.0, 3.0, 4.0});  // u = (3.5, -2, 4)
  EXPECT_DOUBLE_EQ(y[0], 3.5);
  EXPECT_DOUBLE_EQ(y[1], -2.0);
  EXPECT_DOUBLE_EQ(y[3], (3.5 * 3.5 + 4.0 + 16.0) / 2);
}

}  // namespace
}  // namespace affinelab
