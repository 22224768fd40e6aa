#include "rbc/correctors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace rbc {

double setMass(std::int64_t L, double epsilon) {
  if (L < 2) throw std::invalid_argument("setMass: L must be at least 2");
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw std::invalid_argument("setMass: epsilon must lie in (0, 1/2)");
  return std::pow(static_cast<double>(L), 2.0 * (1.0 - epsilon));
}

std::int64_t fluxCorrectorHalfWidth(std::int64_t L) {
  // ceil(7L/4), kept strictly inside Q_2L so that fluxes are available one
  // unit around every node of the box.
  return std::min((7 * L + 3) / 4, 2 * L - 1);
}

std::int64_t secondOrderHalfWidth(std::int64_t L) {
  return std::min((3 * L + 1) / 2, fluxCorrectorHalfWidth(L));
}

NodeField weightFunction(const LatticeBox& box, WeightKind kind) {
  NodeField w(box);
  // extended precision keeps the normalised sum within one rounding of 1
  long double total = 0.0L;
  for (std::size_t idx = 0; idx < box.nodeCount(); ++idx) {
    const Coord n = box.coord(idx);
    if (box.onBoundary(n)) continue;
    double v = 1.0;
    for (int k = 0; k < box.dim(); ++k) {
      const double t = static_cast<double>(n[k]) / static_cast<double>(box.half(k));
      v *= kind == WeightKind::Bump ? std::exp(-1.0 / (1.0 - t * t)) : 1.0 - std::abs(t);
    }
    w.values[idx] = v;
    total += v;
  }
  const auto z = static_cast<double>(total);
  for (auto& v : w.values) v /= z;
  return w;
}

HomogenizedModel HomogenizedModel::fromMatrix(int d, const Matrix3& raw) {
  HomogenizedModel m;
  m.d = d;
  m.raw = raw;
  Eigen::Matrix3d s = Eigen::Matrix3d::Identity();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      m.sym[i][j] = 0.5 * (raw[i][j] + raw[j][i]);
      m.asymmetry = std::max(m.asymmetry, std::abs(raw[i][j] - raw[j][i]));
      s(i, j) = m.sym[i][j];
    }
  const Eigen::MatrixXd block = s.topLeftCorner(d, d);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(block);
  m.minEigen = es.eigenvalues().minCoeff();
  m.maxEigen = es.eigenvalues().maxCoeff();
  if (!(m.minEigen > 0.0)) throw std::runtime_error("homogenized coefficient is not positive definite");
  m.det = block.determinant();
  const Eigen::MatrixXd inv = block.inverse();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m.inv[i][j] = inv(i, j);
  return m;
}

NodeField firstOrderCorrector(const EdgeField& a, double M, int i, const SolverConfig& cfg,
                              SolveDiagnostics* diag) {
  if (i < 0 || i >= a.box.dim()) throw std::invalid_argument("firstOrderCorrector: bad direction");
  EdgeField ae(a.box);
  ae.dir[i] = a.dir[i];
  const NodeField rhs = discreteDivergence(ae);
  auto res = solve(DirichletProblem{a, 1.0 / M, rhs, nullptr}, cfg);
  if (diag != nullptr) *diag = res.diagnostics;
  return std::move(res.u);
}

EdgeField fluxField(const EdgeField& a, const NodeField& phi, int i) {
  if (!(a.box == phi.box)) throw LatticeError("fluxField: box mismatch");
  EdgeField q = discreteGradient(phi);
  for (int k = 0; k < a.box.dim(); ++k) {
    const double delta = k == i ? 1.0 : 0.0;
    auto& qk = q.dir[k];
    const auto& ak = a.dir[k];
    for (std::size_t idx = 0; idx < qk.size(); ++idx) qk[idx] = ak[idx] * (delta + qk[idx]);
  }
  return q;
}

double nodeAveragedFlux(const EdgeField& q, const Coord& n, int k) {
  return 0.5 * (q.valueOrZero(n, k) + q.valueOrZero(n - unitVector(k), k));
}

HomogenizedModel homogenizedCoefficient(const std::vector<EdgeField>& q, const NodeField& omega) {
  const int d = omega.box.dim();
  if (static_cast<int>(q.size()) != d) throw std::invalid_argument("homogenizedCoefficient: need d fluxes");
  Matrix3 raw{};
  for (int i = 0; i < d; ++i) {
    if (!q[static_cast<std::size_t>(i)].box.containsBox(omega.box))
      throw LatticeError("homogenizedCoefficient: flux does not cover the weight");
    for (int k = 0; k < d; ++k) {
      double s = 0.0;
      for (std::size_t idx = 0; idx < omega.box.nodeCount(); ++idx) {
        const double w = omega.values[idx];
        if (w == 0.0) continue;
        s += w * nodeAveragedFlux(q[static_cast<std::size_t>(i)], omega.box.coord(idx), k);
      }
      raw[k][i] = s;
    }
  }
  if (d == 2) raw[2][2] = 1.0;
  return HomogenizedModel::fromMatrix(d, raw);
}

int FluxCorrector::pairIndex(int j, int k) {
  if (j > k) std::swap(j, k);
  return j == 0 ? k - 1 : 2;
}

double FluxCorrector::value(int i, int j, int k, std::size_t idx) const {
  if (j == k) return 0.0;
  const double v = components[static_cast<std::size_t>(i)][static_cast<std::size_t>(pairIndex(j, k))].values[idx];
  return j < k ? v : -v;
}

namespace {

// Direction-m flux averaged onto the edge (n, n + e_j), j != m: mean of the
// node averages at both endpoints, i.e. of the four surrounding m-edges.
double fluxOnCrossEdge(const EdgeField& q, const Coord& n, int j, int m) {
  return 0.5 * (nodeAveragedFlux(q, n, m) + nodeAveragedFlux(q, n + unitVector(j), m));
}

}  // namespace

NodeField fluxCorrectorRhs(const EdgeField& qi, int j, int k, const LatticeBox& box) {
  if (!qi.box.containsBox(box)) throw LatticeError("fluxCorrectorRhs: flux does not cover the box");
  // F = q_ik e_j - q_ij e_k.
  EdgeField F(box);
  forEachEdge(box, [&](const Coord& n, int dir, std::size_t idx) {
    if (dir == j)
      F.dir[dir][idx] = fluxOnCrossEdge(qi, n, j, k);
    else if (dir == k)
      F.dir[dir][idx] = -fluxOnCrossEdge(qi, n, k, j);
  });
  return discreteDivergence(F);
}

FluxCorrector fluxCorrector(const std::vector<EdgeField>& q, double M, const LatticeBox& box,
                            const SolverConfig& cfg, std::vector<SolveDiagnostics>* diag) {
  const int d = box.dim();
  FluxCorrector s;
  s.box = box;
  s.d = d;
  const EdgeField unit(box, 1.0);
  s.components.resize(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    auto& comps = s.components[static_cast<std::size_t>(i)];
    comps.resize(d == 3 ? 3 : 1);
    for (int j = 0; j < d; ++j)
      for (int k = j + 1; k < d; ++k) {
        const NodeField rhs = fluxCorrectorRhs(q[static_cast<std::size_t>(i)], j, k, box);
        auto res = solve(DirichletProblem{unit, 1.0 / M, rhs, nullptr}, cfg);
        if (diag != nullptr) diag->push_back(res.diagnostics);
        comps[static_cast<std::size_t>(FluxCorrector::pairIndex(j, k))] = std::move(res.u);
      }
  }
  return s;
}

EdgeField secondOrderSource(const EdgeField& a, const NodeField& phi1i, const FluxCorrector& sigma, int i,
                            int j, const LatticeBox& box) {
  if (!a.box.containsBox(box) || !phi1i.box.containsBox(box) || !sigma.box.containsBox(box))
    throw LatticeError("secondOrderSource: inputs do not cover the box");
  // Component k of (phi1_i a - sigma1_i) e_j is phi1_i a delta_kj - sigma1_ikj
  // = phi1_i a delta_kj + sigma1_ijk.
  EdgeField F(box);
  forEachEdge(box, [&](const Coord& n, int k, std::size_t idx) {
    const Coord m = n + unitVector(k);
    double v = 0.5 * (sigma.value(i, j, k, n) + sigma.value(i, j, k, m));
    if (k == j) v += 0.5 * (phi1i.at(n) + phi1i.at(m)) * a.at(n, k);
    F.dir[k][idx] = v;
  });
  return F;
}

NodeField secondOrderCorrector(const EdgeField& a, const NodeField& phi1i, const FluxCorrector& sigma,
                               double M, const LatticeBox& box, int i, int j, const SolverConfig& cfg,
                               SolveDiagnostics* diag) {
  if (box.dim() != 3) throw std::invalid_argument("second-order correctors are only used for d = 3");
  const EdgeField aBox = restrictField(a, box);
  const NodeField rhs = discreteDivergence(secondOrderSource(a, phi1i, sigma, i, j, box));
  auto res = solve(DirichletProblem{aBox, 1.0 / M, rhs, nullptr}, cfg);
  if (diag != nullptr) *diag = res.diagnostics;
  return std::move(res.u);
}

CorrectorSet computeCorrectors(const EdgeField& a, std::int64_t L, const CorrectorOptions& opts) {
  const int d = a.box.dim();
  if (!(a.box == LatticeBox(d, 2 * L))) throw LatticeError("computeCorrectors: conductance must live on Q_2L");
  if (opts.secondOrder && d != 3) throw std::invalid_argument("second-order correctors need d = 3");

  CorrectorSet cs;
  cs.L = L;
  cs.d = d;
  cs.M = setMass(L, opts.epsilon);
  const double M = cs.M;

  std::vector<EdgeField> q;
  for (int i = 0; i < d; ++i) {
    SolveDiagnostics dg;
    cs.phi1.push_back(firstOrderCorrector(a, M, i, opts.solver, &dg));
    cs.diagnostics.push_back(dg);
    q.push_back(fluxField(a, cs.phi1.back(), i));
  }

  const LatticeBox qL(d, L);
  cs.aHom = homogenizedCoefficient(q, weightFunction(qL, opts.weight));
  const WeightKind other = opts.weight == WeightKind::Bump ? WeightKind::TriangularProduct : WeightKind::Bump;
  cs.aHomAlternateWeight = homogenizedCoefficient(q, weightFunction(qL, other));

  if (opts.secondOrder) {
    const LatticeBox sigmaBox(d, fluxCorrectorHalfWidth(L));
    cs.sigma1 = fluxCorrector(q, M, sigmaBox, opts.solver, &cs.diagnostics);
    const LatticeBox phi2Box(d, secondOrderHalfWidth(L));
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        SolveDiagnostics dg;
        cs.phi2.push_back(secondOrderCorrector(a, cs.phi1[static_cast<std::size_t>(i)], cs.sigma1, M, phi2Box,
                                               i, j, opts.solver, &dg));
        cs.diagnostics.push_back(dg);
      }
  }
  if (opts.keepFluxes) cs.q1 = std::move(q);
  return cs;
}

}  // namespace rbc
