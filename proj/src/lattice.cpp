#include "rbc/lattice.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "rbc/parallel.hpp"

namespace rbc {

LatticeBox::LatticeBox(int d, std::int64_t L) : LatticeBox(d, Coord{L, L, L}) {}

LatticeBox::LatticeBox(int d, const Coord& halfWidths) : d_(d) {
  if (d != 2 && d != 3) throw LatticeError("lattice dimension must be 2 or 3, got " + std::to_string(d));
  for (int k = 0; k < 3; ++k) {
    if (k < d) {
      if (halfWidths[k] < 1) throw LatticeError("half width must be positive");
      half_[k] = halfWidths[k];
    } else {
      half_[k] = 0;
    }
  }
  stride_[2] = 1;
  stride_[1] = static_cast<std::size_t>(extent(2));
  stride_[0] = stride_[1] * static_cast<std::size_t>(extent(1));
  count_ = stride_[0] * static_cast<std::size_t>(extent(0));
}

std::int64_t LatticeBox::halfWidth() const {
  std::int64_t m = 0;
  for (int k = 0; k < d_; ++k) m = std::max(m, half_[k]);
  return m;
}

std::size_t LatticeBox::edgeCount() const {
  std::size_t total = 0;
  for (int k = 0; k < d_; ++k) {
    std::size_t c = static_cast<std::size_t>(extent(k) - 1);
    for (int j = 0; j < d_; ++j)
      if (j != k) c *= static_cast<std::size_t>(extent(j));
    total += c;
  }
  return total;
}

Coord LatticeBox::coord(std::size_t idx) const {
  Coord n;
  n[0] = static_cast<std::int64_t>(idx / stride_[0]) - half_[0];
  idx %= stride_[0];
  n[1] = static_cast<std::int64_t>(idx / stride_[1]) - half_[1];
  n[2] = static_cast<std::int64_t>(idx % stride_[1]) - half_[2];
  return n;
}

bool LatticeBox::contains(const Coord& n) const {
  for (int k = 0; k < 3; ++k)
    if (n[k] < -half_[k] || n[k] > half_[k]) return false;
  return true;
}

bool LatticeBox::onBoundary(const Coord& n) const {
  for (int k = 0; k < d_; ++k)
    if (n[k] == half_[k] || n[k] == -half_[k]) return true;
  return false;
}

bool LatticeBox::containsBox(const LatticeBox& other) const {
  if (other.d_ != d_) return false;
  for (int k = 0; k < 3; ++k)
    if (other.half_[k] > half_[k]) return false;
  return true;
}

std::vector<std::size_t> LatticeBox::boundaryNodes() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < count_; ++i)
    if (onBoundary(coord(i))) out.push_back(i);
  return out;
}

std::int64_t maxNorm(const Coord& n) {
  return std::max({std::abs(n[0]), std::abs(n[1]), std::abs(n[2])});
}

bool NodeField::allFinite() const {
  for (double v : values)
    if (!std::isfinite(v)) return false;
  return true;
}

EdgeField::EdgeField(const LatticeBox& b, double fill) : box(b) {
  for (int k = 0; k < 3; ++k) {
    if (k < b.dim()) {
      dir[k].assign(b.nodeCount(), fill);
    }
  }
  clearPadding();
}

void EdgeField::clearPadding() {
  for (int k = 0; k < box.dim(); ++k) {
    const std::size_t s = box.stride(k);
    const auto ext = static_cast<std::size_t>(box.extent(k));
    // Nodes with coordinate index ext-1 along axis k have no forward edge.
    for (std::size_t idx = 0; idx < box.nodeCount(); ++idx)
      if ((idx / s) % ext == ext - 1) dir[k][idx] = 0.0;
  }
}

bool EdgeField::allFinite() const {
  for (int k = 0; k < box.dim(); ++k)
    for (double v : dir[k])
      if (!std::isfinite(v)) return false;
  return true;
}

std::pair<double, double> EdgeField::range() const {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  forEachEdge(box, [&](const Coord&, int k, std::size_t idx) {
    lo = std::min(lo, dir[k][idx]);
    hi = std::max(hi, dir[k][idx]);
  });
  return {lo, hi};
}

EdgeField discreteGradient(const NodeField& u) {
  const LatticeBox& box = u.box;
  EdgeField g(box);
  const auto n0 = static_cast<std::ptrdiff_t>(box.extent(0));
  for (int k = 0; k < box.dim(); ++k) {
    const std::size_t s = box.stride(k);
    const auto ext = static_cast<std::size_t>(box.extent(k));
    auto& out = g.dir[k];
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i0 = 0; i0 < n0; ++i0) {
      const std::size_t lo = static_cast<std::size_t>(i0) * box.stride(0);
      const std::size_t hi = lo + box.stride(0);
      for (std::size_t idx = lo; idx < hi; ++idx)
        out[idx] = ((idx / s) % ext == ext - 1) ? 0.0 : u.values[idx + s] - u.values[idx];
    }
  }
  return g;
}

NodeField discreteDivergence(const EdgeField& h) {
  const LatticeBox& box = h.box;
  NodeField f(box);
  const auto n0 = static_cast<std::ptrdiff_t>(box.extent(0));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i0 = 0; i0 < n0; ++i0) {
    const std::size_t lo = static_cast<std::size_t>(i0) * box.stride(0);
    const std::size_t hi = lo + box.stride(0);
    for (std::size_t idx = lo; idx < hi; ++idx) {
      double v = 0.0;
      for (int k = 0; k < box.dim(); ++k) {
        const std::size_t s = box.stride(k);
        const auto ext = static_cast<std::size_t>(box.extent(k));
        const std::size_t pos = (idx / s) % ext;
        v += h.dir[k][idx];  // padding slots are zero
        if (pos > 0) v -= h.dir[k][idx - s];
      }
      f.values[idx] = v;
    }
  }
  return f;
}

EdgeField directionalField(const LatticeBox& box, int k, double value) {
  EdgeField e(box);
  std::fill(e.dir[k].begin(), e.dir[k].end(), value);
  e.clearPadding();
  return e;
}

namespace {

// Solves div h = f using the axes in `axes`,
// accumulating into h. Each line along the first axis is made neutral
// by moving its total to the node with coordinate 0; the collected totals form
// a neutral charge one dimension lower.
void sweepCharge(std::vector<double>& f, EdgeField& h, const std::vector<int>& axes) {
  const LatticeBox& box = h.box;
  const int axis = axes.front();
  const std::size_t s = box.stride(axis);
  const std::int64_t L = box.half(axis);
  for (std::size_t idx = 0; idx < box.nodeCount(); ++idx) {
    const Coord n = box.coord(idx);
    if (n[axis] != -L) continue;
    bool empty = true;
    double total = 0.0;
    for (std::int64_t t = 0; t <= 2 * L; ++t) {
      const double v = f[idx + static_cast<std::size_t>(t) * s];
      total += v;
      if (v != 0.0) empty = false;
    }
    if (empty) continue;
    const std::size_t centre = idx + static_cast<std::size_t>(L) * s;
    f[centre] -= total;
    double running = 0.0;
    for (std::int64_t t = 0; t < 2 * L; ++t) {
      const std::size_t j = idx + static_cast<std::size_t>(t) * s;
      running += f[j];
      h.dir[axis][j] += running;
      f[j] = 0.0;
    }
    f[idx + static_cast<std::size_t>(2 * L) * s] = 0.0;
    f[centre] = total;
  }
  // After the sweep the remaining charge sits on the hyperplane n[axis] = 0.
  if (axes.size() > 1) {
    std::vector<int> rest(axes.begin() + 1, axes.end());
    sweepCharge(f, h, rest);
  }
}

}  // namespace

EdgeField chargeToEdgeField(const NodeField& f) {
  const LatticeBox& src = f.box;
  Coord grown = src.halfWidths();
  for (int k = 0; k < src.dim(); ++k) grown[k] += 1;
  const LatticeBox box(src.dim(), grown);

  double total = 0.0;
  double scale = 0.0;
  for (double v : f.values) {
    total += v;
    scale += std::abs(v);
  }
  if (std::abs(total) > 1e-12 * std::max(1.0, scale))
    throw LatticeError("charge is not neutral (sum = " + std::to_string(total) + ")");

  std::vector<double> work = embedField(f, box).values;
  EdgeField h(box);
  std::vector<int> axes;
  for (int k = 0; k < src.dim(); ++k) axes.push_back(k);
  sweepCharge(work, h, axes);
  h.clearPadding();
  return h;
}

NodeField restrictField(const NodeField& u, const LatticeBox& target) {
  if (!u.box.containsBox(target)) throw LatticeError("restrict: target box is larger than source box");
  NodeField out(target);
  for (std::size_t i = 0; i < target.nodeCount(); ++i) out.values[i] = u.at(target.coord(i));
  return out;
}

EdgeField restrictField(const EdgeField& a, const LatticeBox& target) {
  if (!a.box.containsBox(target)) throw LatticeError("restrict: target box is larger than source box");
  EdgeField out(target);
  for (std::size_t i = 0; i < target.nodeCount(); ++i) {
    const Coord n = target.coord(i);
    const std::size_t j = a.box.index(n);
    for (int k = 0; k < target.dim(); ++k)
      if (target.hasEdge(n, k)) out.dir[k][i] = a.dir[k][j];
  }
  return out;
}

NodeField embedField(const NodeField& u, const LatticeBox& target) {
  if (!target.containsBox(u.box)) throw LatticeError("embed: target box is smaller than source box");
  NodeField out(target);
  for (std::size_t i = 0; i < u.box.nodeCount(); ++i) out.at(u.box.coord(i)) = u.values[i];
  return out;
}

EdgeField embedField(const EdgeField& h, const LatticeBox& target) {
  if (!target.containsBox(h.box)) throw LatticeError("embed: target box is smaller than source box");
  EdgeField out(target);
  forEachEdge(h.box, [&](const Coord& n, int k, std::size_t idx) { out.at(n, k) = h.dir[k][idx]; });
  return out;
}

double edgeInner(const EdgeField& a, const EdgeField& b) {
  if (!(a.box == b.box)) throw LatticeError("edgeInner: box mismatch");
  double total = 0.0;
  for (int k = 0; k < a.box.dim(); ++k) total += deterministicDot(a.dir[k], b.dir[k]);
  return total;
}

double nodeInner(const NodeField& a, const NodeField& b) {
  if (!(a.box == b.box)) throw LatticeError("nodeInner: box mismatch");
  return deterministicDot(a.values, b.values);
}

}  // namespace rbc
