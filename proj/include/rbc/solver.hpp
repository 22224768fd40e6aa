#pragma once

// Dirichlet problems (1/M) u - div(a grad u) = rhs on the interior of a box,
// u = boundary values on its boundary. Jacobi-preconditioned conjugate
// gradients on the interior unknowns, plus a dense direct solve for tests.

#include <stdexcept>
#include <string>
#include <vector>

#include "rbc/lattice.hpp"

namespace rbc {

enum class Preconditioner { Jacobi, None };

struct SolverConfig {
  double relTolerance = 1e-9;
  /// 0 selects the default 50 (2L + 1) for the box being solved.
  int maxIterations = 0;
  Preconditioner preconditioner = Preconditioner::Jacobi;

  void validate() const;
  int iterationLimit(const LatticeBox& box) const;
};

struct DirichletProblem {
  const EdgeField& a;
  double massTerm = 0.0;
  /// Right-hand side at interior nodes; values at boundary nodes are ignored.
  const NodeField& rhs;
  /// Dirichlet data (read on boundary nodes only); nullptr means zero.
  const NodeField* boundary = nullptr;
};

struct SolveDiagnostics {
  int iterations = 0;
  /// ||b - A u|| / ||b|| over interior rows, b the effective interior rhs.
  double finalResidual = 0.0;
  double rhsNorm = 0.0;
  /// The CG energy functional decreased at every step (within round-off).
  bool energyMonotone = true;
  std::vector<double> residualHistory;
};

struct SolveResult {
  NodeField u;
  SolveDiagnostics diagnostics;
};

class SolverError : public std::runtime_error {
 public:
  enum class Kind { NotConverged, Indefinite };
  SolverError(Kind kind, const std::string& what, NodeField best, double residual)
      : std::runtime_error(what), kind_(kind), best_(std::move(best)), residual_(residual) {}
  Kind kind() const { return kind_; }
  const NodeField& bestIterate() const { return best_; }
  double residual() const { return residual_; }

 private:
  Kind kind_;
  NodeField best_;
  double residual_;
};

SolveResult solve(const DirichletProblem& problem, const SolverConfig& cfg = {});

/// Direct factorisation of the assembled interior matrix (at most 20000 unknowns).
NodeField denseOracleSolve(const DirichletProblem& problem);

/// Largest interior problem accepted by denseOracleSolve.
inline constexpr std::size_t kDenseOracleLimit = 20000;

}  // namespace rbc
