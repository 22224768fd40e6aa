#include "rbc/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "rbc/optimality.hpp"

namespace rbc {

Coord evaluationPoint(int d, std::int64_t L) {
  Coord n{0, 0, 0};
  for (int k = 0; k < d; ++k) n[k] = L / 2;
  return n;
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsedMs(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct Cell {
  bool ok = false;
  int iterations = 0;
  double residual = 0.0;
  double ms = 0.0;
  std::string note;
  // gradient at the evaluation point of every grid L that uses this size
  std::map<std::int64_t, std::array<double, 3>> grad;
};

std::array<double, 3> gradientAt(const NodeField& u, const Coord& n) {
  std::array<double, 3> g{0.0, 0.0, 0.0};
  for (int k = 0; k < u.box.dim(); ++k) g[k] = u.at(n + unitVector(k)) - u.at(n);
  return g;
}

}  // namespace

std::vector<ConvergenceRecord> runConvergence(const ExperimentConfig& cfg, const RecordSink& sink) {
  cfg.validate();
  const int d = cfg.d;
  const std::int64_t Lmax = cfg.Lgrid.back();
  const EdgeField h = cfg.charge.edgeField(d);
  const double beta = cfg.regimeBeta();

  std::set<std::int64_t> sizes;
  for (auto L : cfg.Lgrid) {
    sizes.insert(L);
    sizes.insert(2 * L);
  }
  bool needSecond = false;
  for (Variant v : cfg.recipes)
    if (BoundaryRecipe::forRegime(v, d, beta).order == ExpansionOrder::Second) needSecond = true;

  CorrectorOptions opts;
  opts.epsilon = cfg.epsilon;
  opts.weight = cfg.weight;
  opts.secondOrder = needSecond;
  opts.keepFluxes = false;
  opts.solver = cfg.solver;

  // a constant map ignores the field, so no sampler is needed
  const LatticeBox outer(d, 4 * Lmax);
  const bool constant = cfg.coefficient.kind == CoefficientKind::Constant;
  std::optional<GaussianFieldSampler> sampler;
  if (!constant) sampler.emplace(cfg.covariance, outer);
  std::vector<ConvergenceRecord> records;

  for (std::uint64_t seed : cfg.seeds) {
    EdgeField a;
    if (constant) {
      a = EdgeField(outer, cfg.coefficient.constant);
      a.clearPadding();
    } else {
      a = coefficientField(sampler->sample(seed).g, cfg.coefficient);
    }
    std::map<std::pair<std::int64_t, Variant>, Cell> cells;

    for (std::int64_t s : sizes) {
      const auto t0 = Clock::now();
      const EdgeField aS = restrictField(a, LatticeBox(d, 2 * s));
      CorrectorSet cs;
      std::string failure;
      try {
        cs = computeCorrectors(aS, s, opts);
      } catch (const std::exception& e) {
        failure = std::string("correctors: ") + e.what();
      }
      const double correctorMs = elapsedMs(t0);
      for (Variant v : cfg.recipes) {
        Cell& cell = cells[{s, v}];
        if (!failure.empty()) {
          cell.note = failure;
          continue;
        }
        const auto t1 = Clock::now();
        try {
          const BoundaryRecipe recipe = BoundaryRecipe::forRegime(v, d, beta, cfg.dipoleSign);
          const SolveResult res = runRecipe(aS, cs, h, recipe, cfg.solver);
          cell.iterations = res.diagnostics.iterations;
          cell.residual = res.diagnostics.finalResidual;
          for (auto L : cfg.Lgrid)
            if (L == s || 2 * L == s) cell.grad[L] = gradientAt(res.u, evaluationPoint(d, L));
          cell.ok = true;
        } catch (const std::exception& e) {
          cell.note = e.what();
        }
        cell.ms = elapsedMs(t1) + correctorMs / static_cast<double>(cfg.recipes.size());
      }
    }

    for (auto L : cfg.Lgrid)
      for (Variant v : cfg.recipes) {
        const Cell& coarse = cells[{L, v}];
        const Cell& fine = cells[{2 * L, v}];
        ConvergenceRecord r;
        r.L = L;
        r.variant = v;
        r.seed = seed;
        r.iterations = std::max(coarse.iterations, fine.iterations);
        r.residual = std::max(coarse.residual, fine.residual);
        r.measuredMs = coarse.ms + fine.ms;
        r.wallMs = cfg.recordWallTime ? r.measuredMs : 0.0;
        if (coarse.ok && fine.ok) {
          const auto& gc = coarse.grad.at(L);
          const auto& gf = fine.grad.at(L);
          double e2 = 0.0;
          for (int k = 0; k < d; ++k) e2 += (gf[k] - gc[k]) * (gf[k] - gc[k]);
          r.err = std::sqrt(e2);
        } else {
          r.failed = true;
          r.err = std::numeric_limits<double>::quiet_NaN();
          r.note = !coarse.ok ? coarse.note : fine.note;
        }
        records.push_back(r);
        if (sink) sink(r);
      }
  }
  return records;
}

std::vector<RateFit> fitRates(const std::vector<ConvergenceRecord>& records) {
  std::vector<RateFit> fits;
  for (Variant v : {Variant::Zero, Variant::NoPole, Variant::Dipole, Variant::Full}) {
    std::map<std::int64_t, std::pair<double, int>> logSum;
    bool present = false;
    bool nonpositive = false;
    for (const auto& r : records) {
      if (r.variant != v) continue;
      present = true;
      if (r.failed || !std::isfinite(r.err)) continue;
      if (!(r.err > 0.0)) {
        nonpositive = true;
        continue;
      }
      auto& acc = logSum[r.L];
      acc.first += std::log(r.err);
      acc.second += 1;
    }
    if (!present) continue;
    RateFit fit;
    fit.variant = v;
    std::vector<std::pair<double, double>> pts;
    for (const auto& [L, acc] : logSum) pts.emplace_back(static_cast<double>(L), std::exp(acc.first / acc.second));
    if (nonpositive) {
      fit.included = false;
      fit.note = "nonpositive error in the seed average";
    } else if (pts.size() < 3) {
      fit.included = false;
      fit.note = "fewer than 3 distinct L values with valid errors";
    } else {
      const ScalingFit s = scalingFit(pts);
      fit.slope = s.slope;
      fit.standardError = s.standardError;
    }
    fits.push_back(fit);
  }
  return fits;
}

void sortRecords(std::vector<ConvergenceRecord>& records) {
  std::stable_sort(records.begin(), records.end(), [](const ConvergenceRecord& x, const ConvergenceRecord& y) {
    if (x.variant != y.variant) return static_cast<int>(x.variant) < static_cast<int>(y.variant);
    if (x.L != y.L) return x.L < y.L;
    return x.seed < y.seed;
  });
}

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmtMs(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

void writeFile(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << content;
  out.flush();
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace

std::string formatRecord(const ConvergenceRecord& r) {
  std::ostringstream os;
  os << r.L << ',' << variantName(r.variant) << ',' << r.seed << ',' << fmt(r.err) << ','
     << (r.failed ? -1 : r.iterations) << ',' << fmt(r.residual) << ',' << fmtMs(r.wallMs);
  return os.str();
}

std::string recordsCsv(std::vector<ConvergenceRecord> records) {
  sortRecords(records);
  std::string out = std::string(kRecordsHeader) + "\n";
  for (const auto& r : records) out += formatRecord(r) + "\n";
  return out;
}

std::string ratesCsv(const std::vector<RateFit>& fits) {
  std::string out = std::string(kRatesHeader) + "\n";
  for (const auto& f : fits)
    if (f.included) out += variantName(f.variant) + "," + fmt(f.slope) + "," + fmt(f.standardError) + "\n";
  return out;
}

std::string plotScript() {
  return R"(# gnuplot -p plot.gp
set datafile separator ','
set logscale xy
set key top right
set xlabel 'L'
set ylabel '|grad(u^(2L) - u^(L))(L/2)|'
set title 'Convergence of the artificial boundary conditions'
plot for [v in "zero nopole dipole full"] 'records.csv' \
       using 1:(strcol(2) eq v ? $4 : 1/0) with points title v, \
     x**-3 * 1e-1 with lines dashtype 2 title 'L^-3', \
     x**-4 * 1e0 with lines dashtype 3 title 'L^-4', \
     x**-4.5 * 1e0 with lines dashtype 4 title 'L^-4.5'
)";
}

void emitOutputs(const std::vector<ConvergenceRecord>& records, const std::vector<RateFit>& fits,
                 const std::string& dir, const ExperimentConfig& cfg) {
  const std::filesystem::path root(dir);
  std::error_code ec;
  std::filesystem::create_directories(root, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + dir + "': " + ec.message());
  writeFile(root / "records.csv", recordsCsv(records));
  writeFile(root / "rates.csv", ratesCsv(fits));
  std::vector<ConvergenceRecord> sorted = records;
  sortRecords(sorted);
  std::string timing = "L,variant,seed,wall_ms\n";
  for (const auto& r : sorted)
    timing += std::to_string(r.L) + "," + variantName(r.variant) + "," + std::to_string(r.seed) + "," +
              fmtMs(r.measuredMs) + "\n";
  writeFile(root / "timing.csv", timing);
  writeFile(root / "config.snapshot",
            "# averaging: geometric mean of err over seeds per (L, variant), then log-log least squares\n" +
                cfg.serialize());
  if (!records.empty()) writeFile(root / "plot.gp", plotScript());
}

std::vector<ConvergenceRecord> runBenchmark(const ExperimentConfig& cfg) {
  const std::filesystem::path root(cfg.outputDir);
  std::error_code ec;
  std::filesystem::create_directories(root, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + cfg.outputDir + "': " + ec.message());
  const auto partialPath = root / "records.csv.partial";
  std::ofstream partial(partialPath, std::ios::binary | std::ios::trunc);
  if (!partial) throw std::runtime_error("cannot write '" + partialPath.string() + "'");
  partial << kRecordsHeader << "\n" << std::flush;

  const auto records = runConvergence(cfg, [&](const ConvergenceRecord& r) {
    partial << formatRecord(r) << "\n" << std::flush;
    if (r.failed) std::cerr << "cell L=" << r.L << " " << variantName(r.variant) << " seed=" << r.seed
                            << " failed: " << r.note << "\n";
  });
  const auto fits = fitRates(records);
  for (const auto& f : fits)
    if (!f.included) std::cerr << "rate for " << variantName(f.variant) << " excluded: " << f.note << "\n";
  emitOutputs(records, fits, cfg.outputDir, cfg);
  partial.close();
  std::filesystem::remove(partialPath, ec);
  return records;
}

}  // namespace rbc
