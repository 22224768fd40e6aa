#pragma once

// Experiment configuration: flat UTF-8 "key = value" text, '#' starts a
// comment. Unknown keys are errors.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "rbc/correctors.hpp"
#include "rbc/gaussian_field.hpp"
#include "rbc/lattice.hpp"
#include "rbc/multipole.hpp"
#include "rbc/solver.hpp"

namespace rbc {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ChargeSpec {
  enum class Kind { SingleEdgeDipole, NodeCharge };
  Kind kind = Kind::NodeCharge;
  int radius = 1;
  /// SingleEdgeDipole: unit weight on (0, e_direction).
  int direction = 0;
  /// NodeCharge: (node, value) pairs inside Q_radius.
  std::vector<std::pair<Coord, double>> nodes;

  /// Default charge on {-1, 0, 1}^d with nonzero dipole and quadrupole moments.
  static ChargeSpec standard(int d);
  NodeField nodeCharge(int d) const;
  /// h with div h equal to the charge, supported in Q_(radius + 1).
  EdgeField edgeField(int d) const;
  void validate(int d) const;
};

struct ExperimentConfig {
  int d = 3;
  std::vector<std::int64_t> Lgrid{4, 8, 16};
  double epsilon = 0.1;
  CovarianceSpec covariance = CovarianceSpec::gaussian(8.0);
  CoefficientMap coefficient = CoefficientMap::logistic();
  ChargeSpec charge = ChargeSpec::standard(3);
  std::vector<Variant> recipes{Variant::Zero, Variant::NoPole, Variant::Dipole, Variant::Full};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8};
  SolverConfig solver;
  WeightKind weight = WeightKind::Bump;
  double dipoleSign = 1.0;
  std::string outputDir = "out";
  bool recordWallTime = false;
  double memoryLimitMb = 4096.0;

  // optimality study
  int optDim = 2;
  double optBeta = 20.0;
  int optEll = 1;
  std::vector<std::int64_t> optLgrid{4, 6, 8, 12};
  int optMonteCarloSamples = 0;

  /// Throws ConfigError.
  void validate() const;
  /// Decay exponent used to select the expansion order.
  double regimeBeta() const { return covariance.decayExponent(); }
  /// Rough peak memory of the benchmark in MB.
  double estimatedMemoryMb() const;
  /// Canonical key = value rendering (parses back to the same config).
  std::string serialize() const;
};

ExperimentConfig parseConfig(const std::string& text);
ExperimentConfig loadConfig(const std::string& path);

}  // namespace rbc
