#include "rbc/solver.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <sstream>

#include "rbc/kernels.hpp"
#include "rbc/parallel.hpp"

namespace rbc {

void SolverConfig::validate() const {
  if (!(relTolerance > 0.0 && relTolerance < 1.0))
    throw std::invalid_argument("solver tolerance must lie in (0, 1)");
  if (maxIterations < 0) throw std::invalid_argument("maxIterations must be positive (0 = default)");
}

int SolverConfig::iterationLimit(const LatticeBox& box) const {
  if (maxIterations > 0) return maxIterations;
  return static_cast<int>(50 * (2 * box.halfWidth() + 1));
}

namespace {

void checkProblem(const DirichletProblem& p) {
  if (!(p.a.box == p.rhs.box)) throw LatticeError("solve: rhs and conductance boxes differ");
  if (p.boundary != nullptr && !(p.boundary->box == p.a.box))
    throw LatticeError("solve: boundary data box differs");
  if (p.massTerm < 0.0) throw LatticeError("solve: negative mass term");
  requirePositiveConductance(p.a);
}

// Dirichlet data on the boundary, zero inside.
NodeField boundaryExtension(const DirichletProblem& p) {
  NodeField g(p.a.box);
  if (p.boundary == nullptr) return g;
  for (std::size_t idx : p.a.box.boundaryNodes()) g.values[idx] = p.boundary->values[idx];
  return g;
}

std::vector<char> interiorMask(const LatticeBox& box) {
  std::vector<char> mask(box.nodeCount(), 0);
  for (std::size_t i = 0; i < box.nodeCount(); ++i) mask[i] = box.onBoundary(box.coord(i)) ? 0 : 1;
  return mask;
}

}  // namespace

SolveResult solve(const DirichletProblem& problem, const SolverConfig& cfg) {
  cfg.validate();
  checkProblem(problem);
  const LatticeBox& box = problem.a.box;
  const std::size_t n = box.nodeCount();
  const std::vector<char> mask = interiorMask(box);

  SolveResult result;
  result.u = boundaryExtension(problem);

  // b = rhs - A g on interior rows (g = boundary extension).
  std::vector<double> b(n, 0.0);
  {
    std::vector<double> ag(n, 0.0);
    applyOperatorRaw(problem.a, problem.massTerm, result.u.values, ag, BoundaryRows::Zero);
    for (std::size_t i = 0; i < n; ++i) b[i] = mask[i] ? problem.rhs.values[i] - ag[i] : 0.0;
  }
  const double bNorm = std::sqrt(deterministicDot(b, b));
  auto& diag = result.diagnostics;
  diag.rhsNorm = bNorm;
  if (bNorm == 0.0) return result;

  std::vector<double> invDiag(n, 1.0);
  if (cfg.preconditioner == Preconditioner::Jacobi) {
    const auto d = operatorDiagonal(problem.a, problem.massTerm);
    for (std::size_t i = 0; i < n; ++i) invDiag[i] = mask[i] ? 1.0 / d[i] : 0.0;
  } else {
    for (std::size_t i = 0; i < n; ++i) invDiag[i] = mask[i] ? 1.0 : 0.0;
  }

  const int limit = cfg.iterationLimit(box);
  const double target = cfg.relTolerance * bNorm;
  std::vector<double> x(n, 0.0), r = b, z(n), p(n), ap(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = invDiag[i] * r[i];
  p = z;
  double rz = deterministicDot(r, z);
  double rNorm = bNorm;
  double energy = 0.0;  // J(x) = 1/2 x.Ax - b.x = -1/2 x.(b + r)
  diag.residualHistory.push_back(1.0);

  std::vector<double> bestX = x;
  double bestNorm = rNorm;

  auto finish = [&](const std::vector<double>& sol) {
    for (std::size_t i = 0; i < n; ++i)
      if (mask[i]) result.u.values[i] = sol[i];
  };

  int it = 0;
  while (true) {
    if (it >= limit) {
      finish(bestX);
      std::ostringstream os;
      os << "CG did not converge in " << limit << " iterations (relative residual " << bestNorm / bNorm << ")";
      throw SolverError(SolverError::Kind::NotConverged, os.str(), result.u, bestNorm / bNorm);
    }
    applyOperatorRaw(problem.a, problem.massTerm, p, ap, BoundaryRows::Zero);
    const double pap = deterministicDot(p, ap);
    if (!(pap > 0.0)) {
      finish(bestX);
      throw SolverError(SolverError::Kind::Indefinite,
                        "negative curvature in CG: the coefficient field is not positive", result.u,
                        bestNorm / bNorm);
    }
    const double alpha = rz / pap;
    const double rr = deterministicSum(n, [&](std::size_t i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
      return r[i] * r[i];
    });
    ++it;
    rNorm = std::sqrt(rr);
    const double e = deterministicSum(n, [&](std::size_t i) { return -0.5 * x[i] * (b[i] + r[i]); });
    if (e > energy + 1e-12 * std::max(std::abs(e), std::abs(energy))) diag.energyMonotone = false;
    energy = e;
    diag.residualHistory.push_back(rNorm / bNorm);
    if (rNorm < bestNorm) {
      bestNorm = rNorm;
      bestX = x;
    }

    if (rNorm <= target) {
      // Guard against drift of the recursive residual.
      applyOperatorRaw(problem.a, problem.massTerm, x, ap, BoundaryRows::Zero);
      for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
      rNorm = std::sqrt(deterministicDot(r, r));
      if (rNorm <= target) break;
      for (std::size_t i = 0; i < n; ++i) z[i] = invDiag[i] * r[i];
      p = z;
      rz = deterministicDot(r, z);
      continue;
    }
    for (std::size_t i = 0; i < n; ++i) z[i] = invDiag[i] * r[i];
    const double rzNew = deterministicDot(r, z);
    const double beta = rzNew / rz;
    rz = rzNew;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }

  finish(x);
  diag.iterations = it;
  diag.finalResidual = rNorm / bNorm;
  return result;
}

NodeField denseOracleSolve(const DirichletProblem& problem) {
  checkProblem(problem);
  const LatticeBox& box = problem.a.box;
  std::vector<std::ptrdiff_t> unknown(box.nodeCount(), -1);
  std::vector<std::size_t> nodes;
  for (std::size_t i = 0; i < box.nodeCount(); ++i)
    if (!box.onBoundary(box.coord(i))) {
      unknown[i] = static_cast<std::ptrdiff_t>(nodes.size());
      nodes.push_back(i);
    }
  if (nodes.size() > kDenseOracleLimit)
    throw LatticeError("dense oracle limited to " + std::to_string(kDenseOracleLimit) + " unknowns");

  NodeField u = boundaryExtension(problem);
  const auto m = static_cast<Eigen::Index>(nodes.size());
  if (m == 0) return u;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd rhs(m);
  for (Eigen::Index row = 0; row < m; ++row) {
    const std::size_t idx = nodes[static_cast<std::size_t>(row)];
    const Coord c = box.coord(idx);
    double diag = problem.massTerm;
    double r = problem.rhs.values[idx];
    for (int k = 0; k < box.dim(); ++k) {
      for (int sgn : {+1, -1}) {
        const Coord nb = sgn > 0 ? c + unitVector(k) : c - unitVector(k);
        const double cond = sgn > 0 ? problem.a.at(c, k) : problem.a.at(nb, k);
        diag += cond;
        const std::size_t j = box.index(nb);
        if (unknown[j] >= 0)
          A(row, unknown[j]) -= cond;
        else
          r += cond * u.values[j];
      }
    }
    A(row, row) += diag;
    rhs(row) = r;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) throw LatticeError("dense oracle: matrix is not positive definite");
  const Eigen::VectorXd x = llt.solve(rhs);
  for (Eigen::Index row = 0; row < m; ++row) u.values[nodes[static_cast<std::size_t>(row)]] = x(row);
  return u;
}

}  // namespace rbc
