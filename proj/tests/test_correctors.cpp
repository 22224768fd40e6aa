#include <doctest.h>

#include <cmath>
#include <random>

#include "rbc/correctors.hpp"
#include "rbc/gaussian_field.hpp"
#include "rbc/kernels.hpp"
#include "test_util.hpp"

using namespace rbc;
using testutil::maxAbs;
using testutil::maxAbsDiff;

namespace {

// Conductance 1 on even layers n_0, 4 on odd layers, in every direction.
EdgeField laminate(const LatticeBox& box, double lo = 1.0, double hi = 4.0) {
  EdgeField a(box);
  forEachEdge(box, [&](const Coord& n, int k, std::size_t idx) { a.dir[k][idx] = (n[0] % 2 == 0) ? lo : hi; });
  return a;
}

// Relative interior residual of (1/M) u - div(a grad u) = rhs.
double relativeResidual(const EdgeField& a, double mass, const NodeField& u, const NodeField& rhs) {
  const NodeField Au = applyOperator(a, u, mass);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < u.box.nodeCount(); ++i) {
    if (u.box.onBoundary(u.box.coord(i))) continue;
    num += (Au[i] - rhs[i]) * (Au[i] - rhs[i]);
    den += rhs[i] * rhs[i];
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

// a on direction-i edges, zero elsewhere
EdgeField directionalFieldOf(const EdgeField& a, int i) {
  EdgeField out(a.box);
  out.dir[i] = a.dir[i];
  return out;
}

EdgeField logisticSample(int d, std::int64_t L, std::uint64_t seed) {
  const FieldSample s = sampleField(CovarianceSpec::gaussian(8.0), LatticeBox(d, L), seed);
  return coefficientField(s.g, CoefficientMap::logistic());
}

}  // namespace

TEST_SUITE("correctors") {

TEST_CASE("mass examples") {
  CHECK(setMass(16, 0.5 - 1e-15) == doctest::Approx(16.0).epsilon(1e-12));
  CHECK(setMass(64, 0.1) == doctest::Approx(std::pow(64.0, 1.8)));
  CHECK(setMass(64, 0.1) == doctest::Approx(1782.9).epsilon(1e-4));
  CHECK(setMass(20, 1e-12) == doctest::Approx(400.0).epsilon(1e-9));
  CHECK_THROWS(setMass(16, 0.5));
  CHECK_THROWS(setMass(16, 0.0));
  CHECK_THROWS(setMass(1, 0.1));
}

TEST_CASE("nested box sizes round up") {
  CHECK(fluxCorrectorHalfWidth(16) == 28);
  CHECK(secondOrderHalfWidth(16) == 24);
  CHECK(fluxCorrectorHalfWidth(5) == 9);
  CHECK(secondOrderHalfWidth(5) == 8);
  for (std::int64_t L = 2; L < 40; ++L) {
    CHECK(L < secondOrderHalfWidth(L));
    CHECK(secondOrderHalfWidth(L) <= fluxCorrectorHalfWidth(L));
    CHECK(fluxCorrectorHalfWidth(L) < 2 * L);
  }
}

TEST_CASE("weight functions are normalised and vanish on the boundary") {
  for (WeightKind kind : {WeightKind::Bump, WeightKind::TriangularProduct})
    for (int d : {2, 3}) {
      const LatticeBox box(d, 9);
      const NodeField w = weightFunction(box, kind);
      long double sum = 0.0L;
      for (std::size_t i = 0; i < box.nodeCount(); ++i) {
        CHECK(w[i] >= 0.0);
        if (box.onBoundary(box.coord(i))) CHECK(w[i] == 0.0);
        sum += w[i];
      }
      CHECK(std::abs(static_cast<double>(sum - 1.0L)) <= 1e-15);
      CHECK(w.at({0, 0, 0}) > 0.0);
    }
}

TEST_CASE("constant coefficients collapse") {
  const std::int64_t L = 4;
  const EdgeField a(LatticeBox(3, 2 * L), 2.5);
  const CorrectorSet cs = computeCorrectors(a, L, {});
  for (const auto& p : cs.phi1) CHECK(maxAbs(p) <= 1e-9);
  for (const auto& p : cs.phi2) CHECK(maxAbs(p) <= 1e-9);
  for (const auto& comps : cs.sigma1.components)
    for (const auto& s : comps) CHECK(maxAbs(s) <= 1e-9);
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) CHECK(std::abs(cs.aHom.sym[i][k] - (i == k ? 2.5 : 0.0)) <= 1e-9);
  REQUIRE(cs.q1.size() == 3);
  forEachEdge(cs.q1[0].box, [&](const Coord&, int k, std::size_t idx) {
    CHECK(std::abs(cs.q1[1].dir[k][idx] - (k == 1 ? 2.5 : 0.0)) <= 1e-9);
  });
}

TEST_CASE("layered first-order corrector matches the dense oracle") {
  const LatticeBox box(2, 8);
  const EdgeField a = laminate(box);
  const double M = setMass(4, 0.1);
  // div(a e_0)(n) = a(n, n + e_0) - a(n - e_0, n)
  NodeField rhs(box);
  for (std::size_t i = 0; i < box.nodeCount(); ++i) {
    const Coord n = box.coord(i);
    if (box.isInterior(n)) rhs[i] = a.at(n, 0) - a.at(n - unitVector(0), 0);
  }
  const NodeField dense = denseOracleSolve({a, 1.0 / M, rhs, nullptr});
  const NodeField phi = firstOrderCorrector(a, M, 0);
  CHECK(maxAbsDiff(phi, dense) <= 1e-8 * maxAbs(dense));
  // no source across the layers
  CHECK(maxAbs(firstOrderCorrector(a, M, 1)) == 0.0);
}

TEST_CASE("layered flux is the harmonic mean") {
  // Rows decouple when the cross conductance is negligible; with zero boundary
  // values each row carries the constant flux N / sum(1 / a).
  const LatticeBox box(2, 8);
  EdgeField a = laminate(box);
  forEachEdge(box, [&](const Coord&, int k, std::size_t idx) {
    if (k == 1) a.dir[k][idx] = 1e-12;
  });
  SolverConfig cfg;
  cfg.relTolerance = 1e-12;
  const NodeField phi = firstOrderCorrector(a, 1e14, 0, cfg);
  const EdgeField q = fluxField(a, phi, 0);
  const double harmonic = 16.0 / (8.0 / 1.0 + 8.0 / 4.0);
  CHECK(harmonic == doctest::Approx(1.6));
  forEachEdge(box, [&](const Coord& n, int k, std::size_t idx) {
    if (k == 0 && box.isInterior(n) && std::abs(n[1]) < 8) CHECK(std::abs(q.dir[k][idx] - harmonic) <= 1e-6);
  });
}

TEST_CASE("laminate homogenized coefficient") {
  const std::int64_t L = 32;
  const EdgeField a = laminate(LatticeBox(2, 2 * L));
  CorrectorOptions opts;
  opts.secondOrder = false;
  const CorrectorSet cs = computeCorrectors(a, L, opts);
  MESSAGE("laminate aHom = [[" << cs.aHom.sym[0][0] << ", " << cs.aHom.sym[0][1] << "], [" << cs.aHom.sym[1][0]
                                << ", " << cs.aHom.sym[1][1] << "]]");
  CHECK(std::abs(cs.aHom.sym[0][0] - 1.6) <= 0.1);
  CHECK(std::abs(cs.aHom.sym[1][1] - 2.5) <= 0.1);
  CHECK(std::abs(cs.aHom.sym[0][1]) <= 0.1);
}

TEST_CASE("homogenized coefficient uses node-averaged fluxes") {
  std::mt19937_64 rng(6);
  const LatticeBox box(2, 5);
  std::vector<EdgeField> q{testutil::randomEdge(box, rng, -0.2, 0.2), testutil::randomEdge(box, rng, -0.2, 0.2)};
  for (int i = 0; i < 2; ++i)
    for (double& v : q[i].dir[i]) v += 1.0;
  for (int i = 0; i < 2; ++i) q[i].clearPadding();
  const NodeField w = weightFunction(LatticeBox(2, 4));
  Matrix3 expect{};
  for (std::size_t idx = 0; idx < w.box.nodeCount(); ++idx) {
    const Coord n = w.box.coord(idx);
    for (int i = 0; i < 2; ++i)
      for (int k = 0; k < 2; ++k)
        expect[k][i] += w[idx] * 0.5 * (q[i].at(n, k) + q[i].at(n - unitVector(k), k));
  }
  const HomogenizedModel m = homogenizedCoefficient(q, w);
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k) CHECK(m.raw[k][i] == doctest::Approx(expect[k][i]).epsilon(1e-14));
  CHECK(m.asymmetry == doctest::Approx(std::abs(expect[0][1] - expect[1][0])));
  CHECK(m.sym[0][1] == doctest::Approx(0.5 * (expect[0][1] + expect[1][0])));
}

TEST_CASE("first-order corrector residual and weak form on a random sample") {
  const std::int64_t L = 6;
  const EdgeField a = logisticSample(3, 2 * L, 41);
  const double M = setMass(L, 0.1);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 3; ++i) {
    const NodeField phi = firstOrderCorrector(a, M, i);
    const NodeField rhs = discreteDivergence(directionalFieldOf(a, i));
    CHECK(relativeResidual(a, 1.0 / M, phi, rhs) <= 1e-8);

    const EdgeField q = fluxField(a, phi, i);
    const NodeField psi = embedField(testutil::randomNode(LatticeBox(3, 2 * L - 1), rng), a.box);
    const EdgeField gpsi = discreteGradient(psi);
    double scale = 0.0;
    forEachEdge(a.box, [&](const Coord&, int k, std::size_t idx) { scale += std::abs(q.dir[k][idx] * gpsi.dir[k][idx]); });
    const double weak = nodeInner(phi, psi) / M + edgeInner(q, gpsi);
    CHECK(std::abs(weak) <= 1e-7 * scale);
  }
}

TEST_CASE("flux corrector: skew symmetry, residuals, dense oracle") {
  std::mt19937_64 rng(19);
  const LatticeBox big(2, 8), box(2, 6);
  const EdgeField a = testutil::randomEdge(big, rng, 1.0, 4.0);
  const double M = setMass(4, 0.1);
  std::vector<EdgeField> q;
  for (int i = 0; i < 2; ++i) q.push_back(fluxField(a, firstOrderCorrector(a, M, i), i));
  const FluxCorrector s = fluxCorrector(q, M, box);
  const EdgeField unit(box, 1.0);
  for (int i = 0; i < 2; ++i) {
    for (std::size_t idx = 0; idx < box.nodeCount(); ++idx) {
      CHECK(s.value(i, 0, 1, idx) == -s.value(i, 1, 0, idx));
      CHECK(s.value(i, 0, 0, idx) == 0.0);
      CHECK(s.value(i, 1, 1, idx) == 0.0);
    }
    const NodeField rhs = fluxCorrectorRhs(q[i], 0, 1, box);
    const NodeField dense = denseOracleSolve({unit, 1.0 / M, rhs, nullptr});
    const NodeField& comp = s.components[i][FluxCorrector::pairIndex(0, 1)];
    CHECK(maxAbsDiff(comp, dense) <= 1e-8 * std::max(1e-300, maxAbs(dense)));
    CHECK(relativeResidual(unit, 1.0 / M, comp, rhs) <= 1e-8);
  }
  // constant flux has no curl
  std::vector<EdgeField> qc{EdgeField(big, 2.0), EdgeField(big, 3.0)};
  const NodeField rc = fluxCorrectorRhs(qc[0], 0, 1, box);
  for (std::size_t idx = 0; idx < box.nodeCount(); ++idx)
    if (box.isInterior(box.coord(idx))) CHECK(rc[idx] == 0.0);
}

TEST_CASE("flux corrector source follows the curl of the flux") {
  // For a flux field that is smooth on the lattice scale the discrete source
  // approximates d_j q_ik - d_k q_ij at interior nodes.
  const LatticeBox big(3, 6), box(3, 4);
  EdgeField q(big);
  forEachEdge(big, [&](const Coord& n, int k, std::size_t idx) {
    // q_k = x_j for k = 1 with j = 0, zero otherwise: curl in (0,1) is d_0 q_1 = 1
    if (k == 1) q.dir[k][idx] = static_cast<double>(n[0]);
  });
  const NodeField rhs = fluxCorrectorRhs(q, 0, 1, box);
  for (std::size_t idx = 0; idx < box.nodeCount(); ++idx) {
    const Coord n = box.coord(idx);
    if (box.isInterior(n)) CHECK(rhs[idx] == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("second-order source and corrector against the dense oracle") {
  const std::int64_t L = 4;
  const EdgeField a = logisticSample(3, 2 * L, 5);
  const CorrectorSet cs = computeCorrectors(a, L, {});
  REQUIRE(cs.hasSecondOrder());
  const LatticeBox box(3, secondOrderHalfWidth(L));
  CHECK(cs.phi2At(0, 1).box == box);
  CHECK(cs.sigma1.box == LatticeBox(3, fluxCorrectorHalfWidth(L)));
  const EdgeField aBox = restrictField(a, box);
  for (auto [i, j] : {std::pair{0, 1}, std::pair{2, 2}}) {
    const EdgeField F = secondOrderSource(a, cs.phi1[i], cs.sigma1, i, j, box);
    forEachEdge(box, [&](const Coord& n, int k, std::size_t idx) {
      const Coord m = n + unitVector(k);
      double expect = -0.5 * (cs.sigma1.value(i, k, j, n) + cs.sigma1.value(i, k, j, m));
      if (k == j) expect += 0.5 * (cs.phi1[i].at(n) + cs.phi1[i].at(m)) * a.at(n, k);
      CHECK(F.dir[k][idx] == doctest::Approx(expect).epsilon(1e-14));
    });
    const NodeField rhs = discreteDivergence(F);
    const NodeField dense = denseOracleSolve({aBox, 1.0 / cs.M, rhs, nullptr});
    CHECK(maxAbsDiff(cs.phi2At(i, j), dense) <= 1e-8 * maxAbs(dense));
    CHECK(relativeResidual(aBox, 1.0 / cs.M, cs.phi2At(i, j), rhs) <= 1e-8);
  }
}

TEST_CASE("second order is rejected in two dimensions") {
  const EdgeField a(LatticeBox(2, 8), 1.0);
  CHECK_THROWS(computeCorrectors(a, 4, {}));
  CorrectorOptions opts;
  opts.secondOrder = false;
  CHECK_NOTHROW(computeCorrectors(a, 4, opts));
  CHECK_THROWS(computeCorrectors(a, 3, opts));
}

TEST_CASE("homogenized eigenvalues stay in the ellipticity range") {
  CorrectorOptions opts;
  opts.secondOrder = false;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const CorrectorSet cs = computeCorrectors(logisticSample(3, 12, seed), 6, opts);
    CHECK(cs.aHom.minEigen >= 1.0);
    CHECK(cs.aHom.maxEigen <= 4.0);
    CHECK(cs.aHomAlternateWeight.minEigen >= 1.0);
    CHECK(cs.aHomAlternateWeight.maxEigen <= 4.0);
    CHECK(cs.aHom.det > 0.0);
  }
}

TEST_CASE("first-order correctors grow sublinearly") {
  CorrectorOptions opts;
  opts.secondOrder = false;
  opts.keepFluxes = false;
  double prev = 1e300;
  for (std::int64_t L : {8, 16, 32}) {
    const CorrectorSet cs = computeCorrectors(logisticSample(2, 2 * L, 9), L, opts);
    const double ratio = std::max(maxAbs(cs.phi1[0]), maxAbs(cs.phi1[1])) / static_cast<double>(L);
    CHECK(ratio < prev);
    prev = ratio;
  }
}

}  // TEST_SUITE
