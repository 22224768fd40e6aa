#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "rbc/lattice.hpp"

using rbc::operator+;
using rbc::operator-;

namespace testutil {

inline rbc::NodeField randomNode(const rbc::LatticeBox& box, std::mt19937_64& rng, double lo = -1.0,
                                 double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  rbc::NodeField u(box);
  for (auto& v : u.values) v = dist(rng);
  return u;
}

/// Random values on existing edges, zero padding.
inline rbc::EdgeField randomEdge(const rbc::LatticeBox& box, std::mt19937_64& rng, double lo = -1.0,
                                 double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  rbc::EdgeField h(box);
  rbc::forEachEdge(box, [&](const rbc::Coord&, int k, std::size_t idx) { h.dir[k][idx] = dist(rng); });
  return h;
}

inline double maxAbs(const rbc::NodeField& u) {
  double m = 0.0;
  for (double v : u.values) m = std::max(m, std::abs(v));
  return m;
}

inline double maxAbsDiff(const rbc::NodeField& a, const rbc::NodeField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
  return m;
}

inline double relDiff(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

}  // namespace testutil
