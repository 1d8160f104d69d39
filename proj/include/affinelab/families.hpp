// SPDX-License-Identifier: Apache-2.0
//
// Built-in immersions: the three hyperquadrics, the flat hyperbolic affine
// sphere x_1 ... x_{n+1} = 1, the Lorentz-type sphere
// (x_n^2 - x_1^2 - ... - x_{n-1}^2)^n x_{n+1}^2 = 1, and six warped products
// R_+ x_f M_2 over a constant curvature fiber.
//
// Every family is emitted as surface description text. Profile functions that
// have no elementary antiderivative become `integral` or `ode2` profiles.
#pragma once

#include <affinelab/classify.hpp>
#include <affinelab/dsl.hpp>
#include <affinelab/error.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace affinelab {

enum class FamilyId {
  Quadric_Ellipsoid,
  Quadric_Hyperboloid,
  Quadric_Paraboloid,
  Calabi_1_2,
  Lorentz_1_3,
  W1,
  W2,
  W3,
  W4,
  W5,
  W6
};

inline constexpr std::array<FamilyId, 11> kAllFamilies = {
    FamilyId::Quadric_Ellipsoid, FamilyId::Quadric_Hyperboloid, FamilyId::Quadric_Paraboloid,
    FamilyId::Calabi_1_2,        FamilyId::Lorentz_1_3,         FamilyId::W1,
    FamilyId::W2,                FamilyId::W3,                  FamilyId::W4,
    FamilyId::W5,                FamilyId::W6};

inline std::string to_string(FamilyId id) {
  switch (id) {
    case FamilyId::Quadric_Ellipsoid: return "Quadric_Ellipsoid";
    case FamilyId::Quadric_Hyperboloid: return "Quadric_Hyperboloid";
    case FamilyId::Quadric_Paraboloid: return "Quadric_Paraboloid";
    case FamilyId::Calabi_1_2: return "Calabi_1_2";
    case FamilyId::Lorentz_1_3: return "Lorentz_1_3";
    case FamilyId::W1: return "W1";
    case FamilyId::W2: return "W2";
    case FamilyId::W3: return "W3";
    case FamilyId::W4: return "W4";
    case FamilyId::W5: return "W5";
    case FamilyId::W6: return "W6";
  }
  return "?";
}

/// Accepts the canonical names case-insensitively plus short aliases
/// (ellipsoid, hyperboloid, paraboloid, calabi, lorentz).
inline FamilyId parse_family_id(const std::string& text) {
  std::string key;
  for (char ch : text) key += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  for (FamilyId id : kAllFamilies) {
    std::string name = to_string(id);
    for (auto& ch : name) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    if (key == name) return id;
  }
  static const std::map<std::string, FamilyId> aliases = {
      {"ellipsoid", FamilyId::Quadric_Ellipsoid},     {"hyperboloid", FamilyId::Quadric_Hyperboloid},
      {"paraboloid", FamilyId::Quadric_Paraboloid},   {"calabi", FamilyId::Calabi_1_2},
      {"lorentz", FamilyId::Lorentz_1_3},             {"w1", FamilyId::W1}};
  if (auto it = aliases.find(key); it != aliases.end()) return it->second;
  throw Error(ErrorCode::parameter, "unknown family '" + text + "'");
}

inline bool is_warped(FamilyId id) {
  return id == FamilyId::W1 || id == FamilyId::W2 || id == FamilyId::W3 || id == FamilyId::W4 ||
         id == FamilyId::W5 || id == FamilyId::W6;
}

inline Verdict expected_verdict(FamilyId id) {
  switch (id) {
    case FamilyId::Quadric_Ellipsoid:
    case FamilyId::Quadric_Hyperboloid:
    case FamilyId::Quadric_Paraboloid: return Verdict::Quadric;
    case FamilyId::Calabi_1_2: return Verdict::CalabiType_1_2;
    case FamilyId::Lorentz_1_3: return Verdict::LorentzSphere_1_3;
    case FamilyId::W1: return Verdict::WarpedFamily_1;
    case FamilyId::W2: return Verdict::WarpedFamily_2;
    case FamilyId::W3: return Verdict::WarpedFamily_3;
    case FamilyId::W4: return Verdict::WarpedFamily_4;
    case FamilyId::W5: return Verdict::WarpedFamily_5;
    case FamilyId::W6: return Verdict::WarpedFamily_6;
  }
  return Verdict::Unclassified;
}

/// Warping function of the metric dt^2 + f(t)^2 g_fiber.
enum class Warping { one, t };

enum class KMode { automatic, closed_form, numeric };

struct FamilyParams {
  FamilyId id = FamilyId::Quadric_Paraboloid;
  int n = 3;
  std::optional<double> c;                 // defaulted per family when absent
  std::map<std::string, double> constants; // c1, c2, c3, epsilon; t0, k0, k1 for numeric k
  Box t_range{0.5, 2.0};
  double x_half_width = 0.8;
  KMode k_mode = KMode::automatic;
};

// ---------------------------------------------------------------------------
// Text helpers

namespace families_detail {

inline std::string num(double v) {
  const std::string s = dsl::format_number(v);
  return v < 0 ? "(" + s + ")" : s;
}

inline std::string power(const std::string& base, double e) {
  if (e == 1.0) return base;
  return "(" + base + ")^(" + dsl::format_number(e) + ")";
}

inline std::string var(int k) { return "u" + std::to_string(k); }

inline double constant(const FamilyParams& p, const std::string& key, double fallback) {
  const auto it = p.constants.find(key);
  return it == p.constants.end() ? fallback : it->second;
}

/// |x|^2 over the fiber variables u2 .. un.
inline std::string fiber_square(int n) {
  std::string s;
  for (int k = 2; k <= n; ++k) s += (k > 2 ? " + " : "") + var(k) + "^2";
  return s;
}

}  // namespace families_detail

enum class FiberKind { F1, F2, paraboloid_graph };

/// Components of a hyperquadric of dimension m in R^{m+1} with constant
/// sectional curvature c, written in the chart variables u_{first}, ...,
/// u_{first+m-1}. F1 is the stereographic chart of a sphere, F2 the upper
/// sheet of a two-sheeted hyperboloid as a graph.
inline std::vector<std::string> fiber_quadric(FiberKind kind, int m, double c, int first = 1) {
  using namespace families_detail;
  if (m < 1) throw Error(ErrorCode::parameter, "fiber dimension must be at least 1");
  std::string sq;
  for (int k = 0; k < m; ++k) sq += (k ? " + " : "") + var(first + k) + "^2";
  std::vector<std::string> out;
  switch (kind) {
    case FiberKind::F1: {
      if (!(c > 0)) throw Error(ErrorCode::parameter, "sphere fiber needs c > 0, got " + dsl::format_number(c));
      const double radius = std::pow(c, -(m + 2.0) / (2.0 * (m + 1.0)));
      const std::string denom = "(1 + " + sq + ")";
      for (int k = 0; k < m; ++k) out.push_back(num(2 * radius) + "*" + var(first + k) + "/" + denom);
      out.push_back(num(radius) + "*(1 - (" + sq + "))/" + denom);
      break;
    }
    case FiberKind::F2: {
      if (!(c < 0)) throw Error(ErrorCode::parameter, "hyperboloid fiber needs c < 0, got " + dsl::format_number(c));
      const double offset = std::pow(-c, -(m + 2.0) / (m + 1.0));
      for (int k = 0; k < m; ++k) out.push_back(var(first + k));
      out.push_back(power(sq + " + " + dsl::format_number(offset), 0.5));
      break;
    }
    case FiberKind::paraboloid_graph: {
      if (c != 0.0) throw Error(ErrorCode::parameter, "paraboloid fiber needs c = 0");
      for (int k = 0; k < m; ++k) out.push_back(var(first + k));
      out.push_back("(" + sq + ")/2");
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// The profile k(t)

/// Solution of f^2 k'' - (n+1) f f' k' + (n+1) c k = 0 with f = 1 or t.
struct KSolution {
  int n = 3;
  double c = 0;
  Warping f = Warping::one;
  bool closed_form = false;
  std::string branch;                      // which closed form, or "numeric"
  std::optional<double> exponent;          // k = coeff * t^exponent
  double coeff = 1.0;
  std::string profile_def;                 // `profile k(s) = ode2(...)` in numeric mode
  Box range{0.5, 2.0};
  Box positive{0.5, 2.0};                  // largest interval of the range where k > 0
  double residual = 0;                     // sup of the relative ODE residual on the range
  std::optional<std::string> warning;

  /// k as an expression in `v`; numeric mode refers to the profile `k`.
  std::string text(const std::string& v) const { return expr(v); }

  /// Taylor coefficients of k at t (up to `order`).
  std::vector<double> series(double t, int order) const {
    const auto spec = parse_immersion("n = 1; " + profile_def + " F = (" + text("u1") + ", u1);");
    const auto j = eval_jet(spec, {t}, order);
    return {j[0].coefficients().begin(), j[0].coefficients().end()};
  }

  std::function<std::string(const std::string&)> expr;
};

namespace families_detail {

inline std::array<double, 3> ode_coefficients(const KSolution& k, double t) {
  const double n1 = k.n + 1.0;
  if (k.f == Warping::one) return {1.0, 0.0, n1 * k.c};
  return {t * t, -n1 * t, n1 * k.c};
}

inline std::string ode_coefficient_text(const KSolution& k) {
  const double n1 = k.n + 1.0;
  const std::string a0 = dsl::format_number(n1 * k.c);
  if (k.f == Warping::one) return "1, 0, " + a0;
  return "s^2, " + dsl::format_number(-n1) + "*s, " + a0;
}

/// Relative residual of the ODE along the range. In numeric mode k'' is taken
/// from a five point difference of k' so the integration is checked against
/// the equation rather than against itself.
inline double ode_residual(const KSolution& k, int samples = 41) {
  double worst = 0.0;
  const double lo = k.range.lo, hi = k.range.hi, step = 1e-3;
  for (int i = 0; i < samples; ++i) {
    const double t = lo + (hi - lo) * i / (samples - 1.0);
    const auto s = k.series(t, 2);
    double k2 = 2.0 * s[2];
    if (!k.closed_form) {
      auto slope = [&](double x) { return k.series(x, 1)[1]; };
      k2 = (-slope(t + 2 * step) + 8 * slope(t + step) - 8 * slope(t - step) + slope(t - 2 * step)) / (12 * step);
    }
    const auto a = ode_coefficients(k, t);
    const double lhs = a[0] * k2 + a[1] * s[1] + a[2] * s[0];
    const double scale = std::abs(a[0] * k2) + std::abs(a[1] * s[1]) + std::abs(a[2] * s[0]);
    worst = std::max(worst, std::abs(lhs) / std::max(scale, 1e-300));
  }
  return worst;
}

/// Largest sub-interval of the range on which k > 0, refined by bisection.
inline Box positivity_interval(const KSolution& k, int samples = 401) {
  const double lo = k.range.lo, hi = k.range.hi;
  std::vector<double> ts(static_cast<std::size_t>(samples)), ks(ts.size());
  for (int i = 0; i < samples; ++i) ts[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (samples - 1.0);
  ts.back() = hi;
  for (std::size_t i = 0; i < ts.size(); ++i) ks[i] = k.series(ts[i], 0)[0];
  int best_a = -1, best_b = -1;
  for (int a = 0; a < samples;) {
    if (!(ks[static_cast<std::size_t>(a)] > 0)) {
      ++a;
      continue;
    }
    int b = a;
    while (b + 1 < samples && ks[static_cast<std::size_t>(b + 1)] > 0) ++b;
    if (best_a < 0 || b - a > best_b - best_a) best_a = a, best_b = b;
    a = b + 1;
  }
  if (best_a < 0) return {0.0, 0.0};
  auto root = [&](double pos, double neg) {
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (pos + neg);
      (k.series(mid, 0)[0] > 0 ? pos : neg) = mid;
    }
    return pos;
  };
  Box out{ts[static_cast<std::size_t>(best_a)], ts[static_cast<std::size_t>(best_b)]};
  if (best_a > 0) out.lo = root(out.lo, ts[static_cast<std::size_t>(best_a - 1)]);
  if (best_b + 1 < samples) out.hi = root(out.hi, ts[static_cast<std::size_t>(best_b + 1)]);
  return out;
}

}  // namespace families_detail

/// Positive solution k(t) of the profile equation on `range`.
///
/// Closed forms: for f = 1, c1 cos(w t) + c2 sin(w t) (c > 0) or
/// c1 e^{w t} + c2 e^{-w t} (c < 0) with w = sqrt((n+1)|c|); for f = t and
/// c <= (n+2)^2/(4(n+1)), c2 t^tau1 + c3 t^tau2 with
/// tau^2 - (n+2) tau + (n+1) c = 0 (a single power at the double root).
/// Numeric mode integrates from t0 with (k, k')(t0) = (k0, k1).
inline KSolution solve_k(int n, double c, Warping f, KMode mode, const std::map<std::string, double>& constants,
                         Box range) {
  using namespace families_detail;
  if (n < 2) throw Error(ErrorCode::parameter, "solve_k needs n >= 2");
  if (!(range.lo < range.hi)) throw Error(ErrorCode::parameter, "empty t range");
  if (f == Warping::t && !(range.lo > 0)) throw Error(ErrorCode::parameter, "f = t needs a t range with t > 0");
  auto get = [&](const std::string& key, double fallback) {
    const auto it = constants.find(key);
    return it == constants.end() ? fallback : it->second;
  };
  const bool wants_numeric = mode == KMode::numeric || constants.count("k0") || constants.count("k1");
  KSolution k;
  k.n = n;
  k.c = c;
  k.f = f;
  k.range = range;
  const double n1 = n + 1.0;
  const double mid = 0.5 * (range.lo + range.hi);

  const double disc = (n + 2.0) * (n + 2.0) - 4.0 * n1 * c;
  const bool has_closed = f == Warping::one ? c != 0.0 : disc >= 0.0;
  if (mode == KMode::closed_form && !has_closed)
    throw Error(ErrorCode::parameter, "no power solution for c > (n+2)^2/(4(n+1)); use numeric mode");

  if (!wants_numeric && has_closed) {
    k.closed_form = true;
    if (f == Warping::one) {
      const double w = std::sqrt(n1 * std::abs(c));
      if (c > 0) {
        // centred on the range by default: cos(w (t - mid))
        const double c1 = get("c1", std::cos(w * mid)), c2 = get("c2", std::sin(w * mid));
        k.branch = "trigonometric";
        k.expr = [=](const std::string& v) {
          return num(c1) + "*cos(" + dsl::format_number(w) + "*" + v + ") + " + num(c2) + "*sin(" +
                 dsl::format_number(w) + "*" + v + ")";
        };
      } else {
        const double c1 = get("c1", 1.0), c2 = get("c2", 1.0);
        k.branch = "exponential";
        k.expr = [=](const std::string& v) {
          return num(c1) + "*exp(" + dsl::format_number(w) + "*" + v + ") + " + num(c2) + "*exp(" +
                 dsl::format_number(-w) + "*" + v + ")";
        };
      }
    } else {
      const double root = std::sqrt(std::max(disc, 0.0));
      const double tau1 = 0.5 * ((n + 2.0) + root), tau2 = 0.5 * ((n + 2.0) - root);
      if (disc == 0.0) {
        k.branch = "double_root";
        k.exponent = tau1;
        k.coeff = get("c1", 1.0);
      } else {
        k.branch = "power";
        const double c2 = get("c2", 1.0), c3 = get("c3", 0.0);
        if (c3 == 0.0) {
          k.exponent = tau1;
          k.coeff = c2;
        } else if (c2 == 0.0) {
          k.exponent = tau2;
          k.coeff = c3;
        } else {
          k.expr = [=](const std::string& v) {
            return num(c2) + "*" + power(v, tau1) + " + " + num(c3) + "*" + power(v, tau2);
          };
        }
      }
      if (k.exponent) {
        const double e = *k.exponent, a = k.coeff;
        k.expr = [=](const std::string& v) { return num(a) + "*" + power(v, e); };
      }
    }
  } else {
    k.branch = "numeric";
    const double t0 = get("t0", range.lo);
    double k0 = get("k0", 1.0), k1 = get("k1", 0.0);
    if (!constants.count("k1") && f == Warping::t) k1 = 0.5 * (n + 2.0) / t0;  // matches t^{(n+2)/2} at t0
    k.profile_def = "profile k(s) = ode2(" + ode_coefficient_text(k) + ", " + dsl::format_number(t0) + ", " +
                    dsl::format_number(k0) + ", " + dsl::format_number(k1) + ");";
    k.expr = [](const std::string& v) { return "k(" + v + ")"; };
  }

  k.positive = positivity_interval(k);
  if (k.positive.lo != range.lo || k.positive.hi != range.hi) {
    k.warning = "k is not positive on [" + dsl::format_number(range.lo) + ", " + dsl::format_number(range.hi) +
                "]; positive on [" + dsl::format_number(k.positive.lo) + ", " + dsl::format_number(k.positive.hi) +
                "]";
  }
  k.residual = ode_residual(k);
  return k;
}

// ---------------------------------------------------------------------------
// Profiles gamma_1, gamma_2

/// gamma_1 and gamma_2 of a warped family as expressions in a variable,
/// together with the profile definitions they refer to.
struct Profiles {
  std::vector<std::string> defs;
  std::function<std::string(const std::string&)> gamma1, gamma2;
  std::optional<KSolution> k;

  std::string definitions() const {
    std::string s;
    for (const auto& d : defs) s += d + "\n";
    return s;
  }

  /// Values and derivatives of (gamma_1, gamma_2) at t.
  std::array<std::vector<double>, 2> series(double t, int order) const {
    const auto spec = parse_immersion("n = 1; " + definitions() + " F = (" + gamma1("u1") + ", " + gamma2("u1") + ");");
    const auto j = eval_jet(spec, {t}, order);
    return {std::vector<double>(j[0].coefficients().begin(), j[0].coefficients().end()),
            std::vector<double>(j[1].coefficients().begin(), j[1].coefficients().end())};
  }
};

namespace families_detail {

inline double default_c(FamilyId id) {
  switch (id) {
    case FamilyId::Quadric_Ellipsoid: return 1.0;
    case FamilyId::Quadric_Hyperboloid: return -1.0;
    case FamilyId::W1:
    case FamilyId::W3: return 0.5;
    case FamilyId::W2:
    case FamilyId::W4: return -0.5;
    default: return 0.0;
  }
}

inline void check_params(const FamilyParams& p, double c) {
  const std::string name = to_string(p.id);
  auto fail = [&](const std::string& why) { throw Error(ErrorCode::parameter, name + ": " + why); };
  const int min_n = is_warped(p.id) ? 3 : 2;
  if (p.n < min_n) fail("needs n >= " + std::to_string(min_n));
  if (p.n > 12) fail("n > 12 is not supported");
  if (!std::isfinite(c)) fail("c must be finite");
  switch (p.id) {
    case FamilyId::Quadric_Ellipsoid:
    case FamilyId::W1:
      if (!(c > 0)) fail("needs c > 0, got " + dsl::format_number(c));
      break;
    case FamilyId::Quadric_Hyperboloid:
    case FamilyId::W2:
    case FamilyId::W4:
      if (!(c < 0)) fail("needs c < 0, got " + dsl::format_number(c));
      break;
    case FamilyId::W3:
      if (!(c > 0)) fail("needs c > 0, got " + dsl::format_number(c));
      if (c == 1.0) fail("needs c != 1");
      break;
    default:
      if (p.c && c != 0.0) fail("takes no curvature parameter (c = 0)");
  }
  if (is_warped(p.id)) {
    if (!(p.t_range.lo < p.t_range.hi)) fail("empty t range");
    if (p.id != FamilyId::W1 && p.id != FamilyId::W2 && !(p.t_range.lo > 0)) fail("needs t > 0 on the t range");
  }
  if (!(p.x_half_width > 0)) fail("fiber box must be nonempty");
}

}  // namespace families_detail

/// gamma_1, gamma_2 of W1 to W5. Constants of integration are fixed at the
/// left end of the t range; W6 has no profiles.
inline Profiles profile_quadrature(const FamilyParams& p) {
  using namespace families_detail;
  const double c = p.c.value_or(default_c(p.id));
  check_params(p, c);
  const int n = p.n;
  const double n1 = n + 1.0;
  const std::string lo = dsl::format_number(p.t_range.lo);
  Profiles out;
  switch (p.id) {
    case FamilyId::W1:
    case FamilyId::W2:
    case FamilyId::W3:
    case FamilyId::W4: {
      const Warping f = (p.id == FamilyId::W1 || p.id == FamilyId::W2) ? Warping::one : Warping::t;
      KSolution k = solve_k(n, c, f, p.k_mode, p.constants, p.t_range);
      if (k.warning) throw Error(ErrorCode::parameter, to_string(p.id) + ": " + *k.warning);
      if (!k.profile_def.empty()) out.defs.push_back(k.profile_def);
      out.gamma2 = [k, n1](const std::string& v) { return power(k.text(v), 1.0 / n1); };
      // gamma_1' = f^{n+1} k^{-n/(n+1)}
      if (f == Warping::t && k.exponent) {
        const double e = n1 - n * *k.exponent / n1;
        const double a = std::pow(k.coeff, -n / n1);
        if (std::abs(e + 1.0) < 1e-14)
          out.gamma1 = [a](const std::string& v) { return num(a) + "*log(" + v + ")"; };
        else
          out.gamma1 = [a, e](const std::string& v) { return num(a / (e + 1.0)) + "*" + power(v, e + 1.0); };
      } else {
        const std::string weight = f == Warping::t ? "s^" + std::to_string(n + 1) + "*" : "";
        out.defs.push_back("profile g1(s) = integral(" + weight + power(k.text("s"), -n / n1) + ", " + lo + ", 0);");
        out.gamma1 = [](const std::string& v) { return "g1(" + v + ")"; };
      }
      out.k = std::move(k);
      break;
    }
    case FamilyId::W5: {
      const double c1 = constant(p, "c1", 1.0);
      const double a = n1 / (n + 2.0);
      if (!(a * std::pow(p.t_range.lo, n + 2.0) + c1 > 0))
        throw Error(ErrorCode::parameter, "W5: gamma_1 must be positive on the t range (c1 too small)");
      auto g1 = [a, c1, n, n1](const std::string& v) {
        return power(num(a) + "*" + v + "^" + std::to_string(n + 2) + " + " + num(c1), 1.0 / n1);
      };
      // gamma_2' = (n+1)/(n+2) gamma_1' ln t - gamma_1/((n+2) t), gamma_1' = t^{n+1} gamma_1^{-n}
      const std::string G = "(" + num(a) + "*s^" + std::to_string(n + 2) + " + " + num(c1) + ")";
      const std::string dg1 = "s^" + std::to_string(n + 1) + "*" + power(G, -n / n1);
      out.defs.push_back("profile g2(s) = integral(" + num(a) + "*" + dg1 + "*log(s) - " + power(G, 1.0 / n1) + "/(" +
                         std::to_string(n + 2) + "*s), " + lo + ", 0);");
      out.gamma1 = g1;
      out.gamma2 = [](const std::string& v) { return "g2(" + v + ")"; };
      break;
    }
    case FamilyId::W6: {
      out.gamma1 = [n](const std::string& v) { return "-log(" + v + ")/" + std::to_string(n + 2); };
      out.gamma2 = [n](const std::string& v) { return v + "^" + std::to_string(n + 2) + "/" + std::to_string(n + 2); };
      break;
    }
    default: throw Error(ErrorCode::parameter, to_string(p.id) + " has no warped profiles");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Immersions

/// A generated family: the surface text plus the resolved parameters.
struct FamilyInstance {
  FamilyParams params;
  double c = 0;
  std::string sdl;
  ImmersionSpec spec;
  std::optional<Profiles> profiles;
  std::optional<Warping> warping;
};

inline FamilyInstance make_family(const FamilyParams& params) {
  using namespace families_detail;
  FamilyInstance inst;
  inst.params = params;
  const FamilyParams& p = params;
  const double c = p.c.value_or(default_c(p.id));
  check_params(p, c);
  inst.c = c;
  const int n = p.n;
  std::vector<std::string> comps;
  std::string head = "n = " + std::to_string(n) + ";\nname = \"" + to_string(p.id) + "\";\n";
  auto box = [&](int k, double a, double b) {
    head += "domain " + var(k) + " = [" + dsl::format_number(a) + ", " + dsl::format_number(b) + "];\n";
  };

  switch (p.id) {
    case FamilyId::Quadric_Ellipsoid:
      comps = fiber_quadric(FiberKind::F1, n, c);
      break;
    case FamilyId::Quadric_Hyperboloid:
      comps = fiber_quadric(FiberKind::F2, n, c);
      break;
    case FamilyId::Quadric_Paraboloid:
      comps = fiber_quadric(FiberKind::paraboloid_graph, n, 0.0);
      break;
    case FamilyId::Calabi_1_2: {
      std::string sum;
      for (int k = 1; k <= n; ++k) {
        comps.push_back("exp(" + var(k) + ")");
        sum += " - " + var(k);
      }
      comps.push_back("exp(" + sum + ")");
      break;
    }
    case FamilyId::Lorentz_1_3: {
      // u1 is the logarithmic radius, u2 .. un a graph chart of y_n^2 - |y|^2 = 1
      std::string sq = "1";
      for (int k = 2; k <= n; ++k) {
        comps.push_back("exp(u1)*" + var(k));
        sq += " + " + var(k) + "^2";
      }
      comps.push_back("exp(u1)*(" + sq + ")^(1/2)");
      comps.push_back("exp(" + std::to_string(-n) + "*u1)");
      break;
    }
    default: {
      inst.profiles = profile_quadrature(p);
      const Profiles& pr = *inst.profiles;
      const std::string g1 = pr.gamma1("u1"), g2 = pr.gamma2("u1");
      head += pr.definitions();
      box(1, p.t_range.lo, p.t_range.hi);
      if (p.id == FamilyId::W1 || p.id == FamilyId::W2 || p.id == FamilyId::W3 || p.id == FamilyId::W4) {
        inst.warping = (p.id == FamilyId::W1 || p.id == FamilyId::W2) ? Warping::one : Warping::t;
        const auto fiber = fiber_quadric(c > 0 ? FiberKind::F1 : FiberKind::F2, n - 1, c, 2);
        comps.push_back(g1);
        for (const auto& e : fiber) comps.push_back("(" + g2 + ")*(" + e + ")");
      } else if (p.id == FamilyId::W5) {
        inst.warping = Warping::t;
        for (int k = 2; k <= n; ++k) comps.push_back("(" + g1 + ")*" + var(k));
        comps.push_back("(" + g1 + ")*(" + fiber_square(n) + ")/2 + " + g2);
        comps.push_back(g1);
      } else {
        inst.warping = Warping::t;
        for (int k = 2; k <= n; ++k) comps.push_back(var(k));
        comps.push_back("(" + fiber_square(n) + ")/2 + " + pr.gamma1("u1"));
        comps.push_back(pr.gamma2("u1"));
      }
      break;
    }
  }
  for (int k = (inst.warping ? 2 : 1); k <= n; ++k) box(k, -p.x_half_width, p.x_half_width);
  std::string body = "F = (";
  for (std::size_t k = 0; k < comps.size(); ++k) body += (k ? ",\n     " : "") + comps[k];
  body += ");\n";
  inst.sdl = head + body;
  inst.spec = parse_immersion(inst.sdl);
  return inst;
}

inline ImmersionSpec builtin(FamilyId id, int n, FamilyParams params = {}) {
  params.id = id;
  params.n = n;
  return make_family(params).spec;
}

}  // namespace affinelab
