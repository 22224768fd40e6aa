#include "rbc/kernels.hpp"

#include <cstddef>
#include <string>

namespace rbc {

void requirePositiveConductance(const EdgeField& a) {
  forEachEdge(a.box, [&](const Coord& n, int k, std::size_t idx) {
    const double v = a.dir[k][idx];
    if (!(v > 0.0))
      throw LatticeError("nonpositive conductance " + std::to_string(v) + " on edge at (" +
                         std::to_string(n[0]) + "," + std::to_string(n[1]) + "," +
                         std::to_string(n[2]) + ") direction " + std::to_string(k));
  });
}

void applyOperatorRaw(const EdgeField& a, double massTerm, const std::vector<double>& u,
                      std::vector<double>& out, BoundaryRows rows) {
  const LatticeBox& box = a.box;
  const int d = box.dim();
  const auto e0 = static_cast<std::ptrdiff_t>(box.extent(0));
  const auto e1 = static_cast<std::ptrdiff_t>(box.extent(1));
  const auto e2 = static_cast<std::ptrdiff_t>(box.extent(2));
  const std::size_t s0 = box.stride(0);
  const std::size_t s1 = box.stride(1);
  const double* a0 = a.dir[0].data();
  const double* a1 = a.dir[1].data();
  const double* a2 = d == 3 ? a.dir[2].data() : nullptr;
  const double* pu = u.data();
  double* po = out.data();
  const bool identity = rows == BoundaryRows::Identity;

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i0 = 0; i0 < e0; ++i0) {
    const bool face0 = i0 == 0 || i0 == e0 - 1;
    for (std::ptrdiff_t i1 = 0; i1 < e1; ++i1) {
      const bool face1 = face0 || i1 == 0 || i1 == e1 - 1;
      const std::size_t row = static_cast<std::size_t>(i0) * s0 + static_cast<std::size_t>(i1) * s1;
      if (d == 2) {
        const std::size_t idx = row;
        if (face1) {
          po[idx] = identity ? pu[idx] : 0.0;
          continue;
        }
        const double c = pu[idx];
        po[idx] = massTerm * c + a0[idx] * (c - pu[idx + s0]) + a0[idx - s0] * (c - pu[idx - s0]) +
                  a1[idx] * (c - pu[idx + s1]) + a1[idx - s1] * (c - pu[idx - s1]);
        continue;
      }
      if (face1) {
        for (std::ptrdiff_t i2 = 0; i2 < e2; ++i2) {
          const std::size_t idx = row + static_cast<std::size_t>(i2);
          po[idx] = identity ? pu[idx] : 0.0;
        }
        continue;
      }
      po[row] = identity ? pu[row] : 0.0;
      po[row + static_cast<std::size_t>(e2 - 1)] = identity ? pu[row + static_cast<std::size_t>(e2 - 1)] : 0.0;
      for (std::ptrdiff_t i2 = 1; i2 < e2 - 1; ++i2) {
        const std::size_t idx = row + static_cast<std::size_t>(i2);
        const double c = pu[idx];
        po[idx] = massTerm * c + a0[idx] * (c - pu[idx + s0]) + a0[idx - s0] * (c - pu[idx - s0]) +
                  a1[idx] * (c - pu[idx + s1]) + a1[idx - s1] * (c - pu[idx - s1]) +
                  a2[idx] * (c - pu[idx + 1]) + a2[idx - 1] * (c - pu[idx - 1]);
      }
    }
  }
}

NodeField applyOperator(const EdgeField& a, const NodeField& u, double massTerm) {
  if (!(a.box == u.box)) throw LatticeError("applyOperator: box mismatch");
  if (massTerm < 0.0) throw LatticeError("applyOperator: negative mass term");
  requirePositiveConductance(a);
  NodeField out(u.box);
  applyOperatorRaw(a, massTerm, u.values, out.values, BoundaryRows::Identity);
  return out;
}

NodeField applyOperatorReference(const EdgeField& a, const NodeField& u, double massTerm) {
  if (!(a.box == u.box)) throw LatticeError("applyOperatorReference: box mismatch");
  requirePositiveConductance(a);
  const LatticeBox& box = u.box;
  NodeField out(box);
  for (std::size_t idx = 0; idx < box.nodeCount(); ++idx) {
    const Coord n = box.coord(idx);
    if (box.onBoundary(n)) {
      out.values[idx] = u.values[idx];
      continue;
    }
    double v = massTerm * u.at(n);
    for (int k = 0; k < box.dim(); ++k) {
      const Coord up = n + unitVector(k);
      const Coord down = n - unitVector(k);
      v += a.at(n, k) * (u.at(n) - u.at(up));
      v += a.at(down, k) * (u.at(n) - u.at(down));
    }
    out.values[idx] = v;
  }
  return out;
}

std::vector<double> operatorDiagonal(const EdgeField& a, double massTerm) {
  const LatticeBox& box = a.box;
  std::vector<double> diag(box.nodeCount(), 1.0);
  const auto n = static_cast<std::ptrdiff_t>(box.nodeCount());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    const Coord c = box.coord(idx);
    if (box.onBoundary(c)) continue;
    double v = massTerm;
    for (int k = 0; k < box.dim(); ++k) v += a.dir[k][idx] + a.dir[k][idx - box.stride(k)];
    diag[idx] = v;
  }
  return diag;
}

}  // namespace rbc
