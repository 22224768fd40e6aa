// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.
// Arguments select a subset of criteria by number (default: all).

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "rbc/config.hpp"
#include "rbc/correctors.hpp"
#include "rbc/gaussian_field.hpp"
#include "rbc/harness.hpp"
#include "rbc/kernels.hpp"
#include "rbc/optimality.hpp"
#include "rbc/solver.hpp"

using namespace rbc;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double maxAbs(const NodeField& f) {
  double m = 0.0;
  for (double v : f.values) m = std::max(m, std::abs(v));
  return m;
}

// ||A u - rhs|| / ||rhs|| over interior nodes, recomputed from scratch.
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

EdgeField directional(const EdgeField& a, int i) {
  EdgeField out(a.box);
  out.dir[i] = a.dir[i];
  return out;
}

// 1. Constant coefficient a = 2.5 everywhere (logistic map at g = 0).
Outcome constantCoefficient() {
  const int d = 3;
  const std::int64_t L = 16;
  const EdgeField a = coefficientField(NodeField(LatticeBox(d, 2 * L)), CoefficientMap::logistic());
  const CorrectorSet cs = computeCorrectors(a, L, {});
  double ahomErr = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) ahomErr = std::max(ahomErr, std::abs(cs.aHom.raw[i][j] - (i == j ? 2.5 : 0.0)));
  double corr = 0.0;
  for (const auto& p : cs.phi1) corr = std::max(corr, maxAbs(p));
  for (const auto& p : cs.phi2) corr = std::max(corr, maxAbs(p));
  for (const auto& comp : cs.sigma1.components)
    for (const auto& s : comp) corr = std::max(corr, maxAbs(s));

  ExperimentConfig cfg = parseConfig(
      "d = 3\nL_grid = 16\nseeds = 1\ncoefficient = constant\ncoefficient_value = 2.5\nsolver_tolerance = 1e-12\n");
  double worst = 0.0, zero = 0.0;
  bool failed = false;
  for (const auto& r : runConvergence(cfg)) {
    failed = failed || r.failed;
    if (r.variant == Variant::Zero)
      zero = r.err;
    else
      worst = std::max(worst, r.err);
  }
  Outcome o;
  o.pass = ahomErr <= 1e-10 && corr <= 1e-9 && worst <= 1e-6 && !failed;
  o.detail = "|aHom - 2.5 Id| = " + fmt("%.2e", ahomErr) + ", max corrector = " + fmt("%.2e", corr) +
             ", err(L=16) multipole max " + fmt("%.2e", worst) + " vs zero " + fmt("%.2e", zero);
  return o;
}

// 2. Conjugate gradients against the dense factorisation.
Outcome solverOracle() {
  std::mt19937_64 rng(20260);
  std::uniform_real_distribution<double> cond(1.0, 4.0), val(-1.0, 1.0);
  double worst = 0.0;
  int trials = 0;
  for (int d : {2, 3})
    for (int t = 0; t < 50; ++t) {
      const LatticeBox box(d, d == 2 ? 6 : 3);
      EdgeField a(box);
      forEachEdge(box, [&](const Coord&, int k, std::size_t idx) { a.dir[k][idx] = cond(rng); });
      NodeField rhs(box), bc(box);
      for (auto& v : rhs.values) v = val(rng);
      for (auto& v : bc.values) v = val(rng);
      const DirichletProblem p{a, 0.0, rhs, &bc};
      const NodeField dense = denseOracleSolve(p);
      const NodeField it = solve(p, SolverConfig{1e-12, 0, Preconditioner::Jacobi}).u;
      double diff = 0.0;
      for (std::size_t i = 0; i < box.nodeCount(); ++i) diff = std::max(diff, std::abs(it[i] - dense[i]));
      worst = std::max(worst, diff / maxAbs(dense));
      ++trials;
    }
  return {worst <= 1e-8, std::to_string(trials) + " trials, max relative difference " + fmt("%.2e", worst)};
}

// 3. Corrector invariants on logistic samples.
Outcome correctorInvariants() {
  const int d = 3;
  const std::int64_t L = 16;
  const SolverConfig solverCfg;
  const double limit = 10.0 * solverCfg.relTolerance;
  const GaussianFieldSampler sampler(CovarianceSpec::gaussian(8.0), LatticeBox(d, 2 * L));
  double skew = 0.0, res1 = 0.0, resS = 0.0, res2 = 0.0, lo = 1e300, hi = -1e300;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const EdgeField a = coefficientField(sampler.sample(seed).g, CoefficientMap::logistic());
    const CorrectorSet cs = computeCorrectors(a, L, {});
    const double mass = 1.0 / cs.M;
    for (int i = 0; i < d; ++i) {
      res1 = std::max(res1, relativeResidual(a, mass, cs.phi1[i], discreteDivergence(directional(a, i))));
      const LatticeBox& sb = cs.sigma1.box;
      const EdgeField unit(sb, 1.0);
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) {
          for (std::size_t idx = 0; idx < sb.nodeCount(); ++idx)
            skew = std::max(skew, std::abs(cs.sigma1.value(i, j, k, idx) + cs.sigma1.value(i, k, j, idx)));
          if (j < k)
            resS = std::max(resS, relativeResidual(unit, mass, cs.sigma1.components[i][FluxCorrector::pairIndex(j, k)],
                                                   fluxCorrectorRhs(cs.q1[i], j, k, sb)));
        }
      const LatticeBox& pb = cs.phi2At(0, 0).box;
      const EdgeField aP = restrictField(a, pb);
      for (int j = 0; j < d; ++j) {
        const NodeField rhs = discreteDivergence(secondOrderSource(a, cs.phi1[i], cs.sigma1, i, j, pb));
        res2 = std::max(res2, relativeResidual(aP, mass, cs.phi2At(i, j), rhs));
      }
    }
    lo = std::min(lo, cs.aHom.minEigen);
    hi = std::max(hi, cs.aHom.maxEigen);
  }
  Outcome o;
  o.pass = skew == 0.0 && res1 <= limit && resS <= limit && res2 <= limit && lo >= 1.0 && hi <= 4.0;
  o.detail = "skew " + fmt("%.1e", skew) + ", residuals phi1 " + fmt("%.2e", res1) + " sigma1 " + fmt("%.2e", resS) +
             " phi2 " + fmt("%.2e", res2) + " (limit " + fmt("%.0e", limit) + "), aHom eigenvalues in [" +
             fmt("%.4f", lo) + ", " + fmt("%.4f", hi) + "]";
  return o;
}

// 4. Empirical covariance of the gaussian kernel.
Outcome covarianceFidelity() {
  const GaussianFieldSampler sampler(CovarianceSpec::gaussian(8.0), LatticeBox(3, 32));
  std::vector<FieldSample> samples;
  samples.reserve(200);
  for (std::uint64_t seed = 1; seed <= 200; ++seed) samples.push_back(sampler.sample(seed));
  const auto est = empiricalCovariance(samples, {{0, 0, 0}, {2, 0, 0}, {4, 0, 0}});
  const double target[] = {1.0, std::exp(-0.5), std::exp(-2.0)};
  bool pass = true;
  std::string detail;
  for (int i = 0; i < 3; ++i) {
    const double z = std::abs(est[i].value - target[i]) / est[i].standardError;
    pass = pass && z <= 3.0;
    detail += (i ? ", " : "") + std::string("c(") + std::to_string(2 * i) + ") = " + fmt("%.4f", est[i].value) +
              " (" + fmt("%.2f", z) + " se)";
  }
  return {pass, detail};
}

// 5. Rate ordering on the full benchmark grid.
Outcome rateOrdering() {
  const ExperimentConfig cfg = parseConfig(
      "d = 3\nL_grid = 8, 16, 32, 64\ncovariance = gaussian\ncovariance_theta = 8\nseed_count = 8\n"
      "output_dir = acceptance_bench\n");
  const auto records = runBenchmark(cfg);
  const auto fits = fitRates(records);
  std::map<Variant, double> slope;
  for (const auto& f : fits)
    if (f.included) slope[f.variant] = f.slope;
  if (slope.size() != 4) return {false, "a variant has no fitted rate"};
  const double full = slope[Variant::Full], dip = slope[Variant::Dipole], zero = slope[Variant::Zero];
  const bool pass = full <= dip && dip <= zero - 0.5 && full <= -3.5 && std::abs(full + 4.5) <= 1.0 &&
                    std::abs(dip + 4.0) <= 1.0 && std::abs(zero + 3.0) <= 1.0;
  return {pass, "slopes full " + fmt("%.2f", full) + ", dipole " + fmt("%.2f", dip) + ", zero " + fmt("%.2f", zero)};
}

// 6. Optimality scaling and the white-noise Monte Carlo check.
Outcome optimalityScaling() {
  const std::vector<std::int64_t> Ls{4, 6, 8, 12};
  const OptimalityStudy study = runOptimality(2, CorrelationModel::algebraic(20.0), 1, Ls);
  const int R = static_cast<int>(4 * Ls.back());
  const EdgeField h = optimalityCharge(2, 1);
  const LatticeGreenTable green = latticeGreen(2, R + 8);
  const double exact =
      conditionalVariance(CorrelationModel::deltaModel(), varianceKernel(green, h, R), Ls.front()).estimate;
  const double mc = monteCarloDeltaVariance(green, h, Ls.front(), R, 5000, 7);
  const double rel = std::abs(mc - exact) / exact;
  Outcome o;
  o.pass = std::abs(study.fit.slope + 3.0) <= 0.5 && rel <= 0.05;
  o.detail = "slope " + fmt("%.3f", study.fit.slope) + " +- " + fmt("%.3f", study.fit.standardError) +
             ", delta Monte Carlo relative difference " + fmt("%.3f", rel);
  return o;
}

// 7. Lattice Green function identities.
Outcome latticeGreenCheck() {
  double stencilErr = 0.0;
  for (int d : {2, 3}) {
    const LatticeGreenTable G = latticeGreen(d, 48);
    const Coord o{0, 0, 0};
    double s = 2.0 * d * G(o);
    for (int k = 0; k < d; ++k) s -= G(unitVector(k)) + G(Coord{0, 0, 0} - unitVector(k));
    stencilErr = std::max(stencilErr, std::abs(s - 1.0));
  }
  const LatticeGreenTable G3 = latticeGreen(3, 48);
  double lo = 1e300, hi = -1e300;
  for (const Coord& n : {Coord{40, 0, 0}, Coord{0, 0, -40}, Coord{24, 32, 0}, Coord{0, -24, 32}}) {
    const double r = std::sqrt(static_cast<double>(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]));
    const double v = 4.0 * std::numbers::pi * r * G3(n);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {stencilErr <= 1e-10 && lo >= 0.98 && hi <= 1.02,
          "stencil error " + fmt("%.2e", stencilErr) + ", 4 pi |n| G(n) at |n| = 40 in [" + fmt("%.5f", lo) + ", " +
              fmt("%.5f", hi) + "]"};
}

// 8. records.csv bytes across thread counts.
Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "rbc_acceptance_determinism";
  fs::remove_all(root);
  std::string bytes[2];
  const int threads[2] = {1, 4};
  const int saved = omp_get_max_threads();
  for (int r = 0; r < 2; ++r) {
    ExperimentConfig cfg = parseConfig("d = 3\nL_grid = 4, 6, 8\nseeds = 1, 2\n");
    cfg.outputDir = (root / std::to_string(r)).string();
    omp_set_num_threads(threads[r]);
    runBenchmark(cfg);
    std::ifstream in(fs::path(cfg.outputDir) / "records.csv", std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    bytes[r] = ss.str();
  }
  omp_set_num_threads(saved);
  fs::remove_all(root);
  const bool same = !bytes[0].empty() && bytes[0] == bytes[1];
  return {same, std::string(same ? "identical" : "different") + " records.csv (" + std::to_string(bytes[0].size()) +
                    " bytes) with 1 and 4 threads"};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    double budgetSeconds;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all{
      {1, "constant-coefficient exactness", 10, constantCoefficient},
      {2, "solver oracle equivalence", 30, solverOracle},
      {3, "corrector invariants", 0, correctorInvariants},
      {4, "covariance fidelity", 120, covarianceFidelity},
      {5, "rate ordering at desk scale", 4 * 3600, rateOrdering},
      {6, "optimality scaling", 900, optimalityScaling},
      {7, "lattice Green function", 60, latticeGreenCheck},
      {8, "determinism across thread counts", 0, determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : all) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string timing = fmt("%.1f s", secs);
    if (c.budgetSeconds > 0) timing += fmt(", budget %.0f s", c.budgetSeconds);
    std::printf("CRITERION %d %s: %s; %s (%s)\n", c.id, o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(),
                timing.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
