// rbc: artificial boundary conditions for random elliptic equations.
//
//   rbc sample      --config c.txt [--seed S] [--L L] [--out DIR]
//   rbc correctors  --config c.txt [--seed S] [--L L] [--out DIR]
//   rbc solve       --config c.txt [--seed S] [--L L] [--recipe R] [--out DIR]
//   rbc bench       --config c.txt [--seed S] [--L L] [--recipe R] [--out DIR]
//   rbc optimality  --config c.txt [--L L] [--out DIR]
//
// Exit codes: 0 success, 2 configuration error, 3 solver failure.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "rbc/config.hpp"
#include "rbc/correctors.hpp"
#include "rbc/crhf.hpp"
#include "rbc/gaussian_field.hpp"
#include "rbc/harness.hpp"
#include "rbc/multipole.hpp"
#include "rbc/optimality.hpp"

using rbc::operator+;

namespace {

constexpr int kConfigError = 2;
constexpr int kSolverError = 3;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> L;
  std::optional<std::string> recipe;
  std::optional<std::string> out;
};

void addCommon(CLI::App* sub, Overrides& o, bool withRecipe) {
  sub->add_option("--config", o.config, "configuration file (key = value)")->required();
  sub->add_option("--seed", o.seed, "use this single seed");
  sub->add_option("--L", o.L, "box half width (replaces the L grid)");
  if (withRecipe) sub->add_option("--recipe", o.recipe, "zero | nopole | dipole | full");
  sub->add_option("--out", o.out, "output directory");
}

rbc::ExperimentConfig load(const Overrides& o, bool optimality) {
  rbc::ExperimentConfig cfg = rbc::loadConfig(o.config);
  if (o.seed) cfg.seeds = {*o.seed};
  if (o.L) {
    if (optimality)
      cfg.optLgrid = {*o.L};
    else
      cfg.Lgrid = {*o.L};
  }
  if (o.recipe) {
    try {
      cfg.recipes = {rbc::parseVariant(*o.recipe)};
    } catch (const std::invalid_argument& e) {
      throw rbc::ConfigError(e.what());
    }
  }
  if (o.out) cfg.outputDir = *o.out;
  cfg.validate();
  return cfg;
}

std::filesystem::path outDir(const rbc::ExperimentConfig& cfg) {
  std::filesystem::path p(cfg.outputDir);
  std::filesystem::create_directories(p);
  return p;
}

void printMatrix(const char* name, const rbc::Matrix3& m, int d) {
  std::printf("%s =\n", name);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) std::printf(" %14.10f", m[i][j]);
    std::printf("\n");
  }
}

rbc::EdgeField sampleCoefficient(const rbc::ExperimentConfig& cfg, std::int64_t half) {
  const rbc::FieldSample s = rbc::sampleField(cfg.covariance, rbc::LatticeBox(cfg.d, half), cfg.seeds.front());
  return rbc::coefficientField(s.g, cfg.coefficient);
}

rbc::CorrectorOptions correctorOptions(const rbc::ExperimentConfig& cfg, bool second) {
  rbc::CorrectorOptions opts;
  opts.epsilon = cfg.epsilon;
  opts.weight = cfg.weight;
  opts.secondOrder = second;
  opts.keepFluxes = false;
  opts.solver = cfg.solver;
  return opts;
}

int runSample(const rbc::ExperimentConfig& cfg) {
  const std::int64_t L = cfg.Lgrid.front();
  const rbc::FieldSample s = rbc::sampleField(cfg.covariance, rbc::LatticeBox(cfg.d, L), cfg.seeds.front());
  const rbc::EdgeField a = rbc::coefficientField(s.g, cfg.coefficient);
  const auto dir = outDir(cfg);
  rbc::writeCrhf((dir / "g.crhf").string(), s.g);
  rbc::writeCrhf((dir / "a.crhf").string(), a);
  double mean = 0.0, var = 0.0;
  for (double v : s.g.values) mean += v;
  mean /= static_cast<double>(s.g.values.size());
  for (double v : s.g.values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(s.g.values.size());
  const auto [lo, hi] = a.range();
  std::printf("sampled %s on Q_%lld (seed %llu), torus %lld, clipped fraction %.3g\n", cfg.covariance.describe().c_str(),
              static_cast<long long>(L), static_cast<unsigned long long>(s.seed), static_cast<long long>(s.torus[0]),
              s.clippedFraction);
  std::printf("g: mean %.6f variance %.6f; a in [%.6f, %.6f]\n", mean, var, lo, hi);
  std::printf("wrote %s and %s\n", (dir / "g.crhf").c_str(), (dir / "a.crhf").c_str());
  return 0;
}

int runCorrectors(const rbc::ExperimentConfig& cfg) {
  const std::int64_t L = cfg.Lgrid.front();
  const bool second = cfg.d == 3 && cfg.regimeBeta() > 2.0;
  const rbc::EdgeField a = sampleCoefficient(cfg, 2 * L);
  const rbc::CorrectorSet cs = rbc::computeCorrectors(a, L, correctorOptions(cfg, second));
  const auto dir = outDir(cfg);
  for (int i = 0; i < cfg.d; ++i)
    rbc::writeCrhf((dir / ("phi1_" + std::to_string(i) + ".crhf")).string(), cs.phi1[static_cast<std::size_t>(i)]);
  if (cs.hasSecondOrder())
    for (int i = 0; i < cfg.d; ++i)
      for (int j = 0; j < cfg.d; ++j)
        rbc::writeCrhf((dir / ("phi2_" + std::to_string(i) + std::to_string(j) + ".crhf")).string(), cs.phi2At(i, j));
  std::printf("L = %lld, M = %.6g, %zu linear solves\n", static_cast<long long>(L), cs.M, cs.diagnostics.size());
  printMatrix("aHom (bump weight)", cs.aHom.raw, cfg.d);
  printMatrix("aHom (other weight)", cs.aHomAlternateWeight.raw, cfg.d);
  std::printf("asymmetry %.3g, eigenvalues [%.6f, %.6f]\n", cs.aHom.asymmetry, cs.aHom.minEigen, cs.aHom.maxEigen);
  std::ofstream ah(dir / "ahom.txt");
  ah.precision(17);
  for (int i = 0; i < cfg.d; ++i) {
    for (int j = 0; j < cfg.d; ++j) ah << (j ? " " : "") << cs.aHom.raw[i][j];
    ah << "\n";
  }
  return 0;
}

int runSolve(const rbc::ExperimentConfig& cfg, bool recipeGiven) {
  const std::int64_t L = cfg.Lgrid.front();
  const rbc::Variant variant = recipeGiven ? cfg.recipes.front() : rbc::Variant::Full;
  const rbc::BoundaryRecipe recipe =
      rbc::BoundaryRecipe::forRegime(variant, cfg.d, cfg.regimeBeta(), cfg.dipoleSign);
  const bool second = recipe.order == rbc::ExpansionOrder::Second;
  const rbc::EdgeField a = sampleCoefficient(cfg, 2 * L);
  const rbc::CorrectorSet cs = rbc::computeCorrectors(a, L, correctorOptions(cfg, second));
  const rbc::EdgeField h = cfg.charge.edgeField(cfg.d);
  const rbc::SolveResult res = rbc::runRecipe(a, cs, h, recipe, cfg.solver);
  const auto dir = outDir(cfg);
  rbc::writeCrhf((dir / "u.crhf").string(), res.u);
  const rbc::Coord n = rbc::evaluationPoint(cfg.d, L);
  std::printf("recipe %s (%s order), L = %lld: %d iterations, relative residual %.3g\n",
              rbc::variantName(variant).c_str(), second ? "second" : "first", static_cast<long long>(L),
              res.diagnostics.iterations, res.diagnostics.finalResidual);
  std::printf("grad u at (%lld,...):", static_cast<long long>(n[0]));
  for (int k = 0; k < cfg.d; ++k) std::printf(" %.12e", res.u.at(n + rbc::unitVector(k)) - res.u.at(n));
  std::printf("\nwrote %s\n", (dir / "u.crhf").c_str());
  return 0;
}

int runBench(const rbc::ExperimentConfig& cfg) {
  const auto records = rbc::runBenchmark(cfg);
  const auto fits = rbc::fitRates(records);
  std::size_t failed = 0;
  for (const auto& r : records) failed += r.failed ? 1 : 0;
  std::printf("%zu records (%zu failed) written to %s\n", records.size(), failed, cfg.outputDir.c_str());
  for (const auto& f : fits)
    if (f.included)
      std::printf("  %-7s slope %+.3f +- %.3f\n", rbc::variantName(f.variant).c_str(), f.slope, f.standardError);
  return 0;
}

int runOptimalityCmd(const rbc::ExperimentConfig& cfg) {
  const rbc::CorrelationModel model = rbc::CorrelationModel::algebraic(cfg.optBeta);
  const rbc::OptimalityStudy study = rbc::runOptimality(cfg.optDim, model, cfg.optEll, cfg.optLgrid);
  const auto dir = outDir(cfg);
  std::ofstream csv(dir / "optimality.csv");
  if (!csv) throw std::runtime_error("cannot write " + (dir / "optimality.csv").string());
  csv.precision(17);
  csv << "beta,L,ell,estimate,tail_bound,slope\n";
  for (std::size_t i = 0; i < study.rows.size(); ++i) {
    const auto& r = study.rows[i];
    csv << r.beta << ',' << r.L << ',' << r.ell << ',' << r.estimate << ',' << r.tailBound << ',';
    if (i + 1 == study.rows.size() && study.rows.size() >= 3) csv << study.fit.slope;
    csv << '\n';
    std::printf("L = %3lld  sqrt(var) = %.6e  tail bound %.3e%s\n", static_cast<long long>(r.L), r.estimate,
                r.tailBound, r.converged ? "" : "  (unconverged)");
  }
  if (study.rows.size() >= 3)
    std::printf("slope %.3f +- %.3f\n", study.fit.slope, study.fit.standardError);

  if (cfg.optMonteCarloSamples > 0) {
    const std::int64_t L = cfg.optLgrid.front();
    const int R = static_cast<int>(4 * cfg.optLgrid.back());
    const rbc::EdgeField h = rbc::optimalityCharge(cfg.optDim, cfg.optEll);
    const rbc::LatticeGreenTable green = rbc::latticeGreen(cfg.optDim, R + cfg.optEll + 4);
    const auto exact = rbc::conditionalVariance(rbc::CorrelationModel::deltaModel(),
                                                rbc::varianceKernel(green, h, R), L);
    const double mc = rbc::monteCarloDeltaVariance(green, h, L, R, cfg.optMonteCarloSamples, cfg.seeds.front());
    std::printf("delta check at L = %lld: quadratic form %.6e, Monte Carlo %.6e (%d samples)\n",
                static_cast<long long>(L), exact.estimate, mc, cfg.optMonteCarloSamples);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Artificial boundary conditions for random elliptic equations"};
  app.require_subcommand(1);
  Overrides oSample, oCorr, oSolve, oBench, oOpt;
  auto* sample = app.add_subcommand("sample", "sample a Gaussian field and its conductances");
  addCommon(sample, oSample, false);
  auto* corr = app.add_subcommand("correctors", "compute correctors and the homogenized coefficient");
  addCommon(corr, oCorr, false);
  auto* solveCmd = app.add_subcommand("solve", "solve on Q_L with one boundary recipe");
  addCommon(solveCmd, oSolve, true);
  auto* bench = app.add_subcommand("bench", "run the convergence benchmark");
  addCommon(bench, oBench, true);
  auto* opt = app.add_subcommand("optimality", "conditional-variance scaling study");
  addCommon(opt, oOpt, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (*sample) return runSample(load(oSample, false));
    if (*corr) return runCorrectors(load(oCorr, false));
    if (*solveCmd) return runSolve(load(oSolve, false), oSolve.recipe.has_value());
    if (*bench) return runBench(load(oBench, false));
    if (*opt) return runOptimalityCmd(load(oOpt, true));
  } catch (const rbc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const rbc::SolverError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kSolverError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
