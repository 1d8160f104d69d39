// SPDX-License-Identifier: Apache-2.0
//
// Immersions written out by hand for tests. They are deliberately independent
// of the built-in family catalog.
#pragma once

#include <affinelab/dsl.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <string>

namespace affinelab::testing {

inline std::string header(int n) { return "n=" + std::to_string(n) + "; F = ("; }

/// Upper cap of the sphere x_1^2 + ... + x_{n+1}^2 = c^{-(n+2)/(n+1)}.
inline std::string sphere_graph(int n, double c) {
  const double r2 = std::pow(c, -(n + 2.0) / (n + 1.0));
  std::string s = header(n), sum;
  for (int k = 1; k <= n; ++k) {
    s += "u" + std::to_string(k) + ", ";
    sum += " - u" + std::to_string(k) + "^2";
  }
  return s + "(" + dsl::format_number(r2) + sum + ")^(1/2))";
}

inline std::string hyperboloid_graph(int n, double c) {
  const double a = std::pow(-c, -(n + 2.0) / (n + 1.0));
  std::string s = header(n), sum;
  for (int k = 1; k <= n; ++k) {
    s += "u" + std::to_string(k) + ", ";
    sum += " + u" + std::to_string(k) + "^2";
  }
  return s + "(" + dsl::format_number(a) + sum + ")^(1/2))";
}

inline std::string paraboloid(int n) {
  std::string s = header(n), sum;
  for (int k = 1; k <= n; ++k) {
    s += "u" + std::to_string(k) + ", ";
    sum += (k > 1 ? " + u" : "u") + std::to_string(k) + "^2";
  }
  return s + "(" + sum + ")/2)";
}

/// x_1 x_2 ... x_{n+1} = 1 in exponential coordinates.
inline std::string product_hypersurface(int n) {
  std::string s = header(n), sum;
  for (int k = 1; k <= n; ++k) {
    s += "exp(u" + std::to_string(k) + "), ";
    sum += " - u" + std::to_string(k);
  }
  return s + "exp(" + sum + "))";
}

/// (x_n^2 - x_1^2 - ... - x_{n-1}^2)^n x_{n+1}^2 = 1 with u_n the radial log.
inline std::string lorentz_hypersurface(int n) {
  std::string s = header(n), sum = "1";
  const std::string e = "exp(u" + std::to_string(n) + ")";
  for (int k = 1; k < n; ++k) {
    s += e + "*u" + std::to_string(k) + ", ";
    sum += " + u" + std::to_string(k) + "^2";
  }
  return s + e + "*(" + sum + ")^(1/2), exp(-" + std::to_string(n) + "*u" + std::to_string(n) + "))";
}

constexpr const char* kPerturbed = "n=3; F = (u1, u2, u3, (u1^2+u2^2+u3^2)/2 + u1^3*u2/10)";

inline ChartPoint random_point(std::mt19937& rng, int n, double lo = -0.8, double hi = 0.8) {
  std::uniform_real_distribution<double> u(lo, hi);
  ChartPoint p(static_cast<std::size_t>(n));
  for (auto& v : p) v = u(rng);
  return p;
}

inline Eigen::MatrixXd random_unimodular(std::mt19937& rng, int dim) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd m(dim, dim);
  do {
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) m(r, c) = g(rng) + (r == c ? 2.0 : 0.0);
  } while (std::abs(m.determinant()) < 0.1);
  m /= std::pow(std::abs(m.determinant()), 1.0 / dim);
  return m;
}

inline Mat<double> to_mat(const Eigen::MatrixXd& m) {
  Mat<double> out(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()), 0.0);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = m(r, c);
  return out;
}

}  // namespace affinelab::testing
