// SPDX-License-Identifier: Apache-2.0
//
// Truncated multivariate Taylor arithmetic.
//
// A Jet of order N in n variables stores the Taylor coefficients c_a = d^a f / a!
// of a function at a base point for every multi-index |a| <= N. Coefficients
// are kept dense in graded order (all degree-0 terms, then degree 1, ...), so
// the coefficients of a lower order are always a prefix of the higher one.
#pragma once

#include <affinelab/error.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace affinelab {

inline constexpr int kMaxJetVars = 8;
inline constexpr int kMaxJetOrder = 8;

using MultiIndex = std::array<std::uint8_t, kMaxJetVars>;

inline int degree(const MultiIndex& a) {
  int d = 0;
  for (auto v : a) d += v;
  return d;
}

/// Shared, immutable indexing tables for one (num_vars, order) pair.
class JetLayout {
 public:
  struct Product {
    std::uint32_t lhs, rhs, out;
  };

  static std::shared_ptr<const JetLayout> get(int num_vars, int order) {
    if (num_vars < 1 || num_vars > kMaxJetVars)
      throw Error(ErrorCode::dimension, "jet: num_vars must be in [1, " +
                                            std::to_string(kMaxJetVars) + "], got " +
                                            std::to_string(num_vars));
    if (order < 0 || order > kMaxJetOrder)
      throw Error(ErrorCode::order, "jet: order must be in [0, " +
                                        std::to_string(kMaxJetOrder) + "], got " +
                                        std::to_string(order));
    static std::mutex mutex;
    static std::map<std::pair<int, int>, std::shared_ptr<const JetLayout>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[{num_vars, order}];
    if (!slot) slot = std::shared_ptr<const JetLayout>(new JetLayout(num_vars, order));
    return slot;
  }

  int num_vars() const { return num_vars_; }
  int order() const { return order_; }
  std::size_t size() const { return indices_.size(); }

  /// Number of coefficients with degree <= k; C(num_vars + k, k).
  std::size_t prefix(int k) const { return prefix_[static_cast<std::size_t>(k)]; }

  const MultiIndex& index(std::size_t rank) const { return indices_[rank]; }

  std::size_t rank(const MultiIndex& a) const {
    auto it = ranks_.find(encode(a));
    if (it == ranks_.end())
      throw Error(ErrorCode::dimension, "jet: multi-index outside layout");
    return it->second;
  }

  const std::vector<Product>& products() const { return products_; }

  /// For output rank k of the derivative in `var`, the source rank of a + e_var.
  const std::vector<std::uint32_t>& derivative_source(int var) const {
    return derivative_src_[static_cast<std::size_t>(var)];
  }

 private:
  JetLayout(int num_vars, int order) : num_vars_(num_vars), order_(order) {
    for (int d = 0; d <= order; ++d) {
      MultiIndex a{};
      append_degree(a, 0, d);
      prefix_.push_back(indices_.size());
    }
    for (std::size_t r = 0; r < indices_.size(); ++r) ranks_.emplace(encode(indices_[r]), r);

    for (std::size_t i = 0; i < indices_.size(); ++i) {
      const int di = degree(indices_[i]);
      for (std::size_t j = 0; j < prefix(order - di); ++j) {
        MultiIndex s{};
        for (int v = 0; v < num_vars; ++v) s[v] = indices_[i][v] + indices_[j][v];
        products_.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                             static_cast<std::uint32_t>(ranks_.at(encode(s)))});
      }
    }
    std::sort(products_.begin(), products_.end(),
              [](const Product& x, const Product& y) { return x.out < y.out; });

    derivative_src_.resize(static_cast<std::size_t>(num_vars));
    if (order > 0) {
      for (int v = 0; v < num_vars; ++v) {
        for (std::size_t k = 0; k < prefix(order - 1); ++k) {
          MultiIndex a = indices_[k];
          a[v] += 1;
          derivative_src_[v].push_back(static_cast<std::uint32_t>(ranks_.at(encode(a))));
        }
      }
    }
  }

  // Lexicographic with the first variable largest first.
  void append_degree(MultiIndex& a, int var, int remaining) {
    if (var == num_vars_ - 1) {
      a[var] = static_cast<std::uint8_t>(remaining);
      indices_.push_back(a);
      a[var] = 0;
      return;
    }
    for (int k = remaining; k >= 0; --k) {
      a[var] = static_cast<std::uint8_t>(k);
      append_degree(a, var + 1, remaining - k);
    }
    a[var] = 0;
  }

  static std::uint64_t encode(const MultiIndex& a) {
    std::uint64_t key = 0;
    for (auto v : a) key = key * 16 + v;
    return key;
  }

  int num_vars_;
  int order_;
  std::vector<MultiIndex> indices_;
  std::vector<std::size_t> prefix_;
  std::unordered_map<std::uint64_t, std::size_t> ranks_;
  std::vector<Product> products_;
  std::vector<std::vector<std::uint32_t>> derivative_src_;
};

class Jet {
 public:
  /// The zero jet.
  Jet(int num_vars, int order)
      : layout_(JetLayout::get(num_vars, order)), coeffs_(layout_->size(), 0.0) {}

  static Jet constant(int num_vars, int order, double value) {
    Jet j(num_vars, order);
    j.coeffs_[0] = value;
    return j;
  }

  /// The coordinate function u_var expanded about u_var = base.
  static Jet variable(int num_vars, int order, int var, double base) {
    if (var < 0 || var >= num_vars)
      throw Error(ErrorCode::dimension, "jet: variable index out of range");
    Jet j = constant(num_vars, order, base);
    if (order > 0) j.coeffs_[1 + static_cast<std::size_t>(var)] = 1.0;
    return j;
  }

  static Jet from_coefficients(int num_vars, int order, std::vector<double> coeffs) {
    Jet j(num_vars, order);
    if (coeffs.size() != j.coeffs_.size())
      throw Error(ErrorCode::dimension, "jet: coefficient count does not match layout");
    j.coeffs_ = std::move(coeffs);
    return j;
  }

  int num_vars() const { return layout_->num_vars(); }
  int order() const { return layout_->order(); }
  const JetLayout& layout() const { return *layout_; }

  double value() const { return coeffs_[0]; }
  std::span<const double> coefficients() const { return coeffs_; }

  /// Taylor coefficient d^a f / a!.
  double coeff(const MultiIndex& a) const {
    if (degree(a) > order()) return 0.0;
    return coeffs_[layout_->rank(a)];
  }

  /// Partial derivative d^a f at the base point.
  double partial(const MultiIndex& a) const {
    double fact = 1.0;
    for (auto v : a)
      for (int k = 2; k <= v; ++k) fact *= k;
    return coeff(a) * fact;
  }

  /// First partial derivative at the base point.
  double gradient(int var) const {
    return order() > 0 ? coeffs_[1 + static_cast<std::size_t>(var)] : 0.0;
  }

  /// Evaluate the truncated polynomial at base + displacement.
  double evaluate(std::span<const double> displacement) const {
    double sum = 0.0;
    for (std::size_t r = 0; r < coeffs_.size(); ++r) {
      double term = coeffs_[r];
      const auto& a = layout_->index(r);
      for (int v = 0; v < num_vars(); ++v)
        for (int k = 0; k < a[v]; ++k) term *= displacement[v];
      sum += term;
    }
    return sum;
  }

  Jet truncated(int new_order) const {
    if (new_order > order())
      throw Error(ErrorCode::order, "jet: cannot raise order by truncation");
    Jet j(num_vars(), new_order);
    std::copy_n(coeffs_.begin(), j.coeffs_.size(), j.coeffs_.begin());
    return j;
  }

  /// d/du_var; the result has order one less.
  Jet derivative(int var) const {
    if (order() == 0) throw Error(ErrorCode::order, "jet: cannot differentiate an order-0 jet");
    if (var < 0 || var >= num_vars()) throw Error(ErrorCode::dimension, "jet: bad variable");
    Jet j(num_vars(), order() - 1);
    const auto& src = layout_->derivative_source(var);
    for (std::size_t k = 0; k < j.coeffs_.size(); ++k)
      j.coeffs_[k] = (layout_->index(k)[var] + 1) * coeffs_[src[k]];
    return j;
  }

  Jet operator-() const {
    Jet j = *this;
    for (auto& c : j.coeffs_) c = -c;
    return j;
  }

  Jet& operator+=(const Jet& o) {
    check_compatible(o);
    for (std::size_t k = 0; k < coeffs_.size(); ++k) coeffs_[k] += o.coeffs_[k];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    check_compatible(o);
    for (std::size_t k = 0; k < coeffs_.size(); ++k) coeffs_[k] -= o.coeffs_[k];
    return *this;
  }
  Jet& operator*=(const Jet& o) { return *this = *this * o; }
  Jet& operator/=(const Jet& o) { return *this = *this / o; }

  Jet& operator+=(double s) {
    coeffs_[0] += s;
    return *this;
  }
  Jet& operator-=(double s) {
    coeffs_[0] -= s;
    return *this;
  }
  Jet& operator*=(double s) {
    for (auto& c : coeffs_) c *= s;
    return *this;
  }
  Jet& operator/=(double s) { return *this *= 1.0 / s; }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator*(const Jet& a, const Jet& b) {
    a.check_compatible(b);
    Jet j(a.num_vars(), a.order());
    const double* x = a.coeffs_.data();
    const double* y = b.coeffs_.data();
    double* out = j.coeffs_.data();
    for (const auto& p : a.layout_->products()) out[p.out] += x[p.lhs] * y[p.rhs];
    return j;
  }
  friend Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }

  friend Jet operator+(Jet a, double s) { return a += s; }
  friend Jet operator+(double s, Jet a) { return a += s; }
  friend Jet operator-(Jet a, double s) { return a -= s; }
  friend Jet operator-(double s, const Jet& a) { return (-a) += s; }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator/(Jet a, double s) { return a /= s; }
  friend Jet operator/(double s, const Jet& a) { return reciprocal(a) *= s; }

  /// Multiplicative inverse by Newton iteration r <- r (2 - a r); each step
  /// doubles the number of correct orders.
  friend Jet reciprocal(const Jet& a) {
    const double a0 = a.value();
    if (a0 == 0.0 || !std::isfinite(a0))
      throw Error(ErrorCode::evaluation, "jet: reciprocal of a jet with zero constant term");
    Jet r = constant(a.num_vars(), a.order(), 1.0 / a0);
    for (int exact = 0; exact < a.order(); exact = 2 * exact + 1) r = r * (2.0 - a * r);
    return r;
  }

  friend bool operator==(const Jet& a, const Jet& b) {
    return a.num_vars() == b.num_vars() && a.order() == b.order() && a.coeffs_ == b.coeffs_;
  }

  void check_compatible(const Jet& o) const {
    if (layout_ != o.layout_)
      throw Error(ErrorCode::dimension,
                  "jet: mismatched shapes (" + std::to_string(num_vars()) + " vars, order " +
                      std::to_string(order()) + ") vs (" + std::to_string(o.num_vars()) +
                      " vars, order " + std::to_string(o.order()) + ")");
  }

 private:
  std::shared_ptr<const JetLayout> layout_;
  std::vector<double> coeffs_;
};

/// f(a) given the univariate Taylor coefficients series[k] = f^(k)(a0)/k! of f
/// at a0 = a.value(). Horner evaluation on the nilpotent part a - a0.
inline Jet compose(std::span<const double> series, const Jet& a) {
  const int n = a.order();
  Jet d = a - a.value();
  auto coef = [&](int k) { return k < static_cast<int>(series.size()) ? series[k] : 0.0; };
  Jet out = Jet::constant(a.num_vars(), n, coef(n));
  for (int k = n - 1; k >= 0; --k) out = out * d + coef(k);
  return out;
}

enum class Analytic { exp, log, sin, cos, sqrt, pow };

/// Univariate Taylor coefficients of an elementary function at x0, up to `order`.
inline std::vector<double> taylor_series(Analytic f, double x0, int order, double p = 1.0) {
  std::vector<double> s(static_cast<std::size_t>(order) + 1);
  auto domain = [&](bool ok, const char* what) {
    if (!ok || !std::isfinite(x0))
      throw Error(ErrorCode::evaluation, std::string(what) + " evaluated at " + std::to_string(x0));
  };
  switch (f) {
    case Analytic::exp: {
      double e = std::exp(x0), fact = 1.0;
      for (int k = 0; k <= order; ++k) {
        if (k > 0) fact *= k;
        s[k] = e / fact;
      }
      break;
    }
    case Analytic::log: {
      domain(x0 > 0.0, "log");
      s[0] = std::log(x0);
      double xk = 1.0;
      for (int k = 1; k <= order; ++k) {
        xk *= x0;
        s[k] = ((k % 2 == 1) ? 1.0 : -1.0) / (k * xk);
      }
      break;
    }
    case Analytic::sin:
    case Analytic::cos: {
      // derivatives cycle sin, cos, -sin, -cos
      const double sv = std::sin(x0), cv = std::cos(x0);
      double fact = 1.0;
      for (int k = 0; k <= order; ++k) {
        if (k > 0) fact *= k;
        const int phase = (k + (f == Analytic::cos ? 1 : 0)) % 4;
        const double val = phase == 0 ? sv : phase == 1 ? cv : phase == 2 ? -sv : -cv;
        s[k] = val / fact;
      }
      break;
    }
    case Analytic::sqrt:
      p = 0.5;
      [[fallthrough]];
    case Analytic::pow: {
      domain(x0 > 0.0, f == Analytic::sqrt ? "sqrt" : "pow");
      double base = std::pow(x0, p), binom = 1.0;
      for (int k = 0; k <= order; ++k) {
        if (k > 0) binom *= (p - (k - 1)) / k;
        s[k] = base * binom;
        base /= x0;
      }
      break;
    }
  }
  return s;
}

/// Integer power by repeated squaring; valid for any base when k >= 0.
inline Jet powi(const Jet& a, long k) {
  if (k < 0) return reciprocal(powi(a, -k));
  Jet result = Jet::constant(a.num_vars(), a.order(), 1.0);
  Jet base = a;
  while (k > 0) {
    if (k & 1) result = result * base;
    k >>= 1;
    if (k) base = base * base;
  }
  return result;
}

inline Jet apply(Analytic f, const Jet& a, double p = 1.0) {
  if (f == Analytic::pow && p == std::round(p) && std::abs(p) < 64) {
    if (p < 0 && a.value() == 0.0)
      throw Error(ErrorCode::evaluation, "pow: negative power of zero");
    return powi(a, static_cast<long>(p));
  }
  return compose(taylor_series(f, a.value(), a.order(), p), a);
}

inline Jet exp(const Jet& a) { return apply(Analytic::exp, a); }
inline Jet log(const Jet& a) { return apply(Analytic::log, a); }
inline Jet sin(const Jet& a) { return apply(Analytic::sin, a); }
inline Jet cos(const Jet& a) { return apply(Analytic::cos, a); }
inline Jet sqrt(const Jet& a) { return apply(Analytic::sqrt, a); }
inline Jet pow(const Jet& a, double p) { return apply(Analytic::pow, a, p); }

}  // namespace affinelab
