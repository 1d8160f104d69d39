// SPDX-License-Identifier: Apache-2.0
//
// Sample sets in the chart domain: shifted Sobol points and explicit point
// lists.
#pragma once

#include <affinelab/dsl.hpp>
#include <affinelab/error.hpp>

#include <boost/random/sobol.hpp>

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace affinelab {

inline constexpr Box kDefaultBox{-0.5, 0.5};

/// Per-variable sampling box: the spec's domain hints, `fallback` elsewhere.
inline std::vector<Box> sample_box(const ImmersionSpec& spec, Box fallback = kDefaultBox) {
  std::vector<Box> out(static_cast<std::size_t>(spec.chart_dim), fallback);
  for (std::size_t k = 0; k < spec.domain.size() && k < out.size(); ++k)
    if (spec.domain[k]) out[k] = *spec.domain[k];
  return out;
}

/// `count` Sobol points in the box with a Cranley-Patterson rotation drawn
/// from `seed`, so different seeds give different but equally uniform sets.
inline std::vector<ChartPoint> sobol_points(const std::vector<Box>& box, int count, std::uint64_t seed) {
  if (count <= 0) throw Error(ErrorCode::parameter, "sample count must be positive");
  const auto dim = static_cast<unsigned>(box.size());
  if (dim == 0) throw Error(ErrorCode::dimension, "empty sampling box");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<double> shift(dim);
  for (auto& s : shift) s = u01(rng);

  boost::random::sobol gen(dim);
  gen.discard(dim);  // the first point is the origin
  const double scale = std::ldexp(1.0, -64);
  std::vector<ChartPoint> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    ChartPoint p(dim);
    for (unsigned k = 0; k < dim; ++k) {
      double x = static_cast<double>(gen()) * scale + shift[k];
      x -= std::floor(x);
      p[k] = box[k].lo + (box[k].hi - box[k].lo) * x;
    }
    out.push_back(std::move(p));
  }
  return out;
}

/// Parses "0.1,0.2,0.3; 0.4,0.5,0.6".
inline std::vector<ChartPoint> parse_points(const std::string& text, int dim) {
  std::vector<ChartPoint> out;
  std::stringstream rows(text);
  std::string row;
  while (std::getline(rows, row, ';')) {
    if (row.find_first_not_of(" \t\n") == std::string::npos) continue;
    ChartPoint p;
    std::stringstream cols(row);
    std::string cell;
    while (std::getline(cols, cell, ',')) {
      try {
        std::size_t used = 0;
        p.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t\n", used) != std::string::npos) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw Error(ErrorCode::parameter, "bad coordinate '" + cell + "' in point list");
      }
    }
    if (static_cast<int>(p.size()) != dim)
      throw Error(ErrorCode::dimension, "point '" + row + "' has " + std::to_string(p.size()) +
                                            " coordinates, expected " + std::to_string(dim));
    out.push_back(std::move(p));
  }
  if (out.empty()) throw Error(ErrorCode::parameter, "empty point list");
  return out;
}

}  // namespace affinelab
