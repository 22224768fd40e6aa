#pragma once

// Convergence benchmark: for every seed, one coefficient realization on
// Q_4Lmax; for each L of the grid, u^(L) and u^(2L) under each recipe; the
// error is |grad(u^(2L) - u^(L))| at n* = (floor(L/2), ...).

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rbc/config.hpp"
#include "rbc/multipole.hpp"

namespace rbc {

struct ConvergenceRecord {
  std::int64_t L = 0;
  Variant variant = Variant::Zero;
  std::uint64_t seed = 0;
  double err = 0.0;  ///< NaN for failed cells
  int iterations = 0;  ///< max over the two final solves
  double residual = 0.0;  ///< max over the two final solves
  double wallMs = 0.0;  ///< reported time (0 unless record_wall_time)
  double measuredMs = 0.0;  ///< always measured, written to timing.csv
  bool failed = false;
  std::string note;
};

/// records.csv header.
inline constexpr const char* kRecordsHeader = "L,variant,seed,err,iters,residual,wall_ms";
inline constexpr const char* kRatesHeader = "variant,slope,stderr";

/// Evaluation point (floor(L/2), ...) in the active axes.
Coord evaluationPoint(int d, std::int64_t L);

using RecordSink = std::function<void(const ConvergenceRecord&)>;

/// Runs the benchmark; every record is passed to `sink` as soon as it exists.
std::vector<ConvergenceRecord> runConvergence(const ExperimentConfig& cfg, const RecordSink& sink = {});

struct RateFit {
  Variant variant = Variant::Zero;
  double slope = 0.0;
  double standardError = 0.0;
  bool included = true;
  std::string note;
};

/// Geometric mean over seeds per (L, variant), then the log-log slope.
std::vector<RateFit> fitRates(const std::vector<ConvergenceRecord>& records);

/// Sorted by variant, L, seed.
void sortRecords(std::vector<ConvergenceRecord>& records);
std::string formatRecord(const ConvergenceRecord& r);
std::string recordsCsv(std::vector<ConvergenceRecord> records);
std::string ratesCsv(const std::vector<RateFit>& fits);
std::string plotScript();

/// Writes records.csv, rates.csv, timing.csv, config.snapshot and (for a
/// non-empty record list) plot.gp into `dir`.
void emitOutputs(const std::vector<ConvergenceRecord>& records, const std::vector<RateFit>& fits,
                 const std::string& dir, const ExperimentConfig& cfg);

/// runConvergence with crash-safe appends to dir/records.csv.partial,
/// followed by emitOutputs.
std::vector<ConvergenceRecord> runBenchmark(const ExperimentConfig& cfg);

}  // namespace rbc
