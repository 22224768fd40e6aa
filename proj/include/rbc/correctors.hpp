#pragma once

// Massive Dirichlet correctors on nested boxes:
//   phi1_i on Q_2L:        (1/M) phi - div a grad phi = div(a e_i)
//   q1_i = a (e_i + grad phi1_i)
//   aHom e_i = sum_n omega(n) q1_i(n)  (node-averaged fluxes, omega on Q_L)
//   sigma1_ijk on Q_[7L/4]: (1/M) s - lap s = d_j q1_ik - d_k q1_ij
//   phi2_ij on Q_[3L/2]:   (1/M) phi - div a grad phi = div((phi1_i a - sigma1_i) e_j)
// All with zero boundary values.

#include <array>
#include <cstdint>
#include <vector>

#include "rbc/lattice.hpp"
#include "rbc/solver.hpp"

namespace rbc {

using Matrix3 = std::array<std::array<double, 3>, 3>;

/// M = L^(2(1 - eps)), eps in (0, 1/2).
double setMass(std::int64_t L, double epsilon);

std::int64_t fluxCorrectorHalfWidth(std::int64_t L);
std::int64_t secondOrderHalfWidth(std::int64_t L);

enum class WeightKind { Bump, TriangularProduct };

/// Normalised weight on Q_L, zero on its boundary.
NodeField weightFunction(const LatticeBox& box, WeightKind kind = WeightKind::Bump);

struct HomogenizedModel {
  int d = 3;
  Matrix3 raw{};
  Matrix3 sym{};
  Matrix3 inv{};  ///< inverse of sym
  double det = 1.0;  ///< determinant of sym
  double asymmetry = 0.0;  ///< max |raw - raw^T|
  double minEigen = 0.0;
  double maxEigen = 0.0;

  /// Builds the symmetrised model; throws if sym is not positive definite.
  static HomogenizedModel fromMatrix(int d, const Matrix3& raw);
};

NodeField firstOrderCorrector(const EdgeField& a, double M, int i, const SolverConfig& cfg = {},
                              SolveDiagnostics* diag = nullptr);

/// q_i on (n, n + e_k) = a (delta_ik + (grad phi_i)_k).
EdgeField fluxField(const EdgeField& a, const NodeField& phi, int i);

/// Flux on node n in direction k, averaged over the two incident k-edges.
double nodeAveragedFlux(const EdgeField& q, const Coord& n, int k);

/// (aHom)_ki = sum_n omega(n) qbar_i,k(n). q[i] must cover omega's box.
HomogenizedModel homogenizedCoefficient(const std::vector<EdgeField>& q, const NodeField& omega);

/// Skew-symmetric sigma_ijk stored for j < k only.
struct FluxCorrector {
  LatticeBox box;
  int d = 3;
  /// components[i][pair] with pair enumerating (0,1), (0,2), (1,2).
  std::vector<std::vector<NodeField>> components;

  static int pairIndex(int j, int k);
  /// sigma_ijk at node index idx of `box`; zero for j == k.
  double value(int i, int j, int k, std::size_t idx) const;
  double value(int i, int j, int k, const Coord& n) const {
    return box.contains(n) ? value(i, j, k, box.index(n)) : 0.0;
  }
};

/// Right-hand side node field for sigma_ijk on `box`.
NodeField fluxCorrectorRhs(const EdgeField& qi, int j, int k, const LatticeBox& box);

FluxCorrector fluxCorrector(const std::vector<EdgeField>& q, double M, const LatticeBox& box,
                            const SolverConfig& cfg = {}, std::vector<SolveDiagnostics>* diag = nullptr);

/// Edge field (phi1_i a - sigma1_i) e_j on `box`, using endpoint averages.
EdgeField secondOrderSource(const EdgeField& a, const NodeField& phi1i, const FluxCorrector& sigma, int i,
                            int j, const LatticeBox& box);

NodeField secondOrderCorrector(const EdgeField& a, const NodeField& phi1i, const FluxCorrector& sigma,
                               double M, const LatticeBox& box, int i, int j, const SolverConfig& cfg = {},
                               SolveDiagnostics* diag = nullptr);

struct CorrectorOptions {
  double epsilon = 0.1;
  WeightKind weight = WeightKind::Bump;
  bool secondOrder = true;  ///< compute sigma1 and phi2 (needs d = 3)
  bool keepFluxes = true;
  SolverConfig solver;
};

struct CorrectorSet {
  std::int64_t L = 0;
  double M = 0.0;
  int d = 3;
  std::vector<NodeField> phi1;  ///< on Q_2L
  std::vector<EdgeField> q1;    ///< on Q_2L (empty unless keepFluxes)
  FluxCorrector sigma1;         ///< on Q_[7L/4] (empty unless secondOrder)
  std::vector<NodeField> phi2;  ///< phi2[i*d + j] on Q_[3L/2] (empty unless secondOrder)
  HomogenizedModel aHom;
  HomogenizedModel aHomAlternateWeight;  ///< same estimate with the other weight kind
  std::vector<SolveDiagnostics> diagnostics;

  bool hasSecondOrder() const { return !phi2.empty(); }
  const NodeField& phi2At(int i, int j) const { return phi2[static_cast<std::size_t>(i * d + j)]; }
};

/// Runs steps 1-5 of the boundary algorithm; `a` must be on Q_2L.
CorrectorSet computeCorrectors(const EdgeField& a, std::int64_t L, const CorrectorOptions& opts);

}  // namespace rbc
