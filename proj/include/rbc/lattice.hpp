#pragma once

// Discrete calculus on finite boxes of Z^d (d = 2 or 3).
//
// A box is the closed cube {n : |n_k| <= L_k} centred at the origin. Nodes are
// stored in row-major order (axis 0 slowest). For d = 2 the third axis is a
// dummy axis of extent 1, so kernels can loop over three axes uniformly.
//
// Edge fields use padded storage: direction k holds one slot per node, and the
// slot of node n carries the value on the edge (n, n + e_k). Slots of nodes on
// the upper face of axis k have no edge and are kept at zero.

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace rbc {

using Coord = std::array<std::int64_t, 3>;

class LatticeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class LatticeBox {
 public:
  LatticeBox() = default;
  /// Cube with half width L in every active axis.
  LatticeBox(int d, std::int64_t L);
  /// Box with per-axis half widths (only the first d entries are used).
  LatticeBox(int d, const Coord& halfWidths);

  int dim() const { return d_; }
  std::int64_t half(int k) const { return half_[k]; }
  const Coord& halfWidths() const { return half_; }
  /// Largest half width over the active axes.
  std::int64_t halfWidth() const;
  std::int64_t extent(int k) const { return 2 * half_[k] + 1; }
  std::size_t stride(int k) const { return stride_[k]; }
  std::size_t nodeCount() const { return count_; }
  std::size_t edgeCount() const;

  std::size_t index(const Coord& n) const {
    return static_cast<std::size_t>(n[0] + half_[0]) * stride_[0] +
           static_cast<std::size_t>(n[1] + half_[1]) * stride_[1] +
           static_cast<std::size_t>(n[2] + half_[2]);
  }
  Coord coord(std::size_t idx) const;

  bool contains(const Coord& n) const;
  bool onBoundary(const Coord& n) const;
  bool isInterior(const Coord& n) const { return contains(n) && !onBoundary(n); }
  /// True if the edge (n, n + e_k) lies in the box.
  bool hasEdge(const Coord& n, int k) const {
    return contains(n) && n[k] < half_[k];
  }
  /// Does this box contain every node of `other`?
  bool containsBox(const LatticeBox& other) const;

  bool operator==(const LatticeBox& o) const { return d_ == o.d_ && half_ == o.half_; }

  /// Node indices on the boundary, in increasing order.
  std::vector<std::size_t> boundaryNodes() const;

 private:
  int d_ = 0;
  Coord half_{0, 0, 0};
  std::array<std::size_t, 3> stride_{0, 0, 0};
  std::size_t count_ = 0;
};

inline Coord unitVector(int k) {
  Coord e{0, 0, 0};
  e[k] = 1;
  return e;
}
inline Coord operator+(Coord a, const Coord& b) {
  for (int k = 0; k < 3; ++k) a[k] += b[k];
  return a;
}
inline Coord operator-(Coord a, const Coord& b) {
  for (int k = 0; k < 3; ++k) a[k] -= b[k];
  return a;
}
std::int64_t maxNorm(const Coord& n);

struct NodeField {
  LatticeBox box;
  std::vector<double> values;

  NodeField() = default;
  explicit NodeField(const LatticeBox& b, double fill = 0.0)
      : box(b), values(b.nodeCount(), fill) {}

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  double& at(const Coord& n) { return values[box.index(n)]; }
  double at(const Coord& n) const { return values[box.index(n)]; }
  bool allFinite() const;
};

struct EdgeField {
  LatticeBox box;
  std::array<std::vector<double>, 3> dir;

  EdgeField() = default;
  explicit EdgeField(const LatticeBox& b, double fill = 0.0);

  double& at(const Coord& n, int k) { return dir[k][box.index(n)]; }
  double at(const Coord& n, int k) const { return dir[k][box.index(n)]; }
  /// Value on (n, n + e_k), or zero when the edge is outside the box.
  double valueOrZero(const Coord& n, int k) const {
    return box.hasEdge(n, k) ? dir[k][box.index(n)] : 0.0;
  }
  bool allFinite() const;
  /// Minimum and maximum over the existing edges.
  std::pair<double, double> range() const;
  /// Sets every non-existing slot to zero.
  void clearPadding();
};

/// Invokes fn(n, k) for every edge (n, n + e_k) of the box.
template <typename Fn>
void forEachEdge(const LatticeBox& box, Fn&& fn) {
  for (std::size_t idx = 0; idx < box.nodeCount(); ++idx) {
    const Coord n = box.coord(idx);
    for (int k = 0; k < box.dim(); ++k)
      if (n[k] < box.half(k)) fn(n, k, idx);
  }
}

// Forward gradient: (grad u)(n, n + e_k) = u(n + e_k) - u(n).
EdgeField discreteGradient(const NodeField& u);

// Backward divergence: (div h)(n) = sum_k h(n, n + e_k) - h(n - e_k, n), with
// missing edges taken as zero. This is the negative adjoint of the gradient.
NodeField discreteDivergence(const EdgeField& h);

/// Edge field equal to `value` on every direction-k edge and zero elsewhere.
EdgeField directionalField(const LatticeBox& box, int k, double value);

/// Given a neutral node charge f, returns h on the box one unit larger with
/// div h = f. Exact in integer arithmetic.
EdgeField chargeToEdgeField(const NodeField& f);

/// Copy of u on the smaller box `target` (must be contained in u.box).
NodeField restrictField(const NodeField& u, const LatticeBox& target);
EdgeField restrictField(const EdgeField& a, const LatticeBox& target);
/// Zero-padded copy of u on the larger box `target`.
NodeField embedField(const NodeField& u, const LatticeBox& target);
EdgeField embedField(const EdgeField& h, const LatticeBox& target);

/// Sum over edges of the product of two edge fields on the same box.
double edgeInner(const EdgeField& a, const EdgeField& b);
/// Sum over nodes of the product of two node fields on the same box.
double nodeInner(const NodeField& a, const NodeField& b);

}  // namespace rbc
