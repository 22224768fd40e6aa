#pragma once

// The divergence-form operator (1/M) u - div(a grad u) on a lattice box.
//
// applyOperator is the OpenMP kernel used by the solvers. The *Reference
// variants are straightforward serial implementations kept as test oracles and
// as the baseline of the kernel benchmark.

#include <vector>

#include "rbc/lattice.hpp"

namespace rbc {

enum class BoundaryRows { Identity, Zero };

/// Throws LatticeError if any edge conductance is not strictly positive.
void requirePositiveConductance(const EdgeField& a);

/// Interior rows: (1/M) u(n) + sum_k a(n,n+e_k)(u(n)-u(n+e_k)) + a(n-e_k,n)(u(n)-u(n-e_k)).
/// Boundary rows pass u through unchanged.
NodeField applyOperator(const EdgeField& a, const NodeField& u, double massTerm);
NodeField applyOperatorReference(const EdgeField& a, const NodeField& u, double massTerm);

/// Raw kernel on value arrays laid out on a.box. `out` must be sized.
void applyOperatorRaw(const EdgeField& a, double massTerm, const std::vector<double>& u,
                      std::vector<double>& out, BoundaryRows rows);

/// Diagonal of the interior rows (1 on boundary rows).
std::vector<double> operatorDiagonal(const EdgeField& a, double massTerm);

}  // namespace rbc
