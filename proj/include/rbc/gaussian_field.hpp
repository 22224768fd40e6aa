#pragma once

// Stationary Gaussian fields on lattice boxes via circulant embedding, and the
// pointwise maps turning them into edge conductances.

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "rbc/lattice.hpp"

namespace rbc {

enum class CovarianceKind { Gaussian, Algebraic, Delta };

/// Isotropic covariance c(r) with c(0) = 1.
///   gaussian:  exp(-r^2 / theta)
///   algebraic: (1 + r / theta)^(-beta)
///   delta:     1 at r = 0, else 0
struct CovarianceSpec {
  CovarianceKind kind = CovarianceKind::Gaussian;
  double theta = 8.0;
  double beta = 0.0;

  static CovarianceSpec gaussian(double theta);
  static CovarianceSpec algebraic(double theta, double beta);
  static CovarianceSpec delta();

  double operator()(double r) const;
  /// Algebraic decay exponent; infinity for the gaussian and delta kinds.
  double decayExponent() const;
  /// Distance beyond which c is negligible, used to pad the embedding torus.
  double effectiveRange() const;
  std::string describe() const;
  void validate() const;
};

enum class CoefficientKind { Logistic, AffineSmallContrast, Constant };

/// Scalar conductance A(g).
///   logistic:              1 + 3 / (1 + exp(-g)), values in [1, 4]
///   affine-small-contrast: 1 + eta g clipped to [lambdaMin, lambdaMax]
///   constant:              c
struct CoefficientMap {
  CoefficientKind kind = CoefficientKind::Logistic;
  double eta = 0.1;
  double lambdaMin = 0.5;
  double lambdaMax = 1.5;
  double constant = 1.0;

  static CoefficientMap logistic();
  static CoefficientMap affine(double eta, double lambdaMin, double lambdaMax);
  static CoefficientMap constantValue(double c);

  double operator()(double g) const;
  double lowerBound() const;
  double upperBound() const;
  std::string describe() const;
};

class SamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Square roots of the nonnegative circulant eigenvalues on a torus, stored in
/// the half-complex layout of a real-to-complex FFT (last axis halved).
struct Spectrum {
  int d = 3;
  std::array<std::int64_t, 3> torus{1, 1, 1};
  std::vector<double> sqrtEigen;
  /// sum of |negative eigenvalues| / sum of positive eigenvalues.
  double clippedFraction = 0.0;
  double minEigen = 0.0;
};

/// Torus size used for a box: at least 2 x extent + max(range padding, 8) per
/// axis, rounded up to a 2-3-5 smooth length.
std::array<std::int64_t, 3> torusExtentFor(const CovarianceSpec& spec, const LatticeBox& box);

/// Throws SamplingError when the clipped fraction exceeds maxClippedFraction.
Spectrum buildSpectrum(const CovarianceSpec& spec, int d, const std::array<std::int64_t, 3>& torus,
                       double maxClippedFraction = 1e-3);

struct FieldSample {
  std::uint64_t seed = 0;
  CovarianceSpec covariance;
  std::array<std::int64_t, 3> torus{1, 1, 1};
  double clippedFraction = 0.0;
  NodeField g;
};

/// Counter-based standard normal keyed by (seed, counter).
double counterNormal(std::uint64_t seed, std::uint64_t counter);

/// Samples fields on a fixed box; the spectrum is computed once.
class GaussianFieldSampler {
 public:
  GaussianFieldSampler(const CovarianceSpec& spec, const LatticeBox& box,
                       double maxClippedFraction = 1e-3);
  GaussianFieldSampler(const CovarianceSpec& spec, const LatticeBox& box,
                       const std::array<std::int64_t, 3>& torus, double maxClippedFraction = 1e-3);

  FieldSample sample(std::uint64_t seed) const;
  const Spectrum& spectrum() const { return spectrum_; }
  const LatticeBox& box() const { return box_; }

 private:
  CovarianceSpec spec_;
  LatticeBox box_;
  Spectrum spectrum_;
};

FieldSample sampleField(const CovarianceSpec& spec, const LatticeBox& box, std::uint64_t seed);

/// Conductance on (n, n + e_k) = A((g(n) + g(n + e_k)) / 2).
EdgeField coefficientField(const NodeField& g, const CoefficientMap& map);

struct CovarianceEstimate {
  Coord lag{0, 0, 0};
  double value = 0.0;
  double standardError = 0.0;
};

/// Spatial and ensemble average of g(x) g(x + lag) with jackknife standard
/// errors over samples. lag and -lag give identical estimates.
std::vector<CovarianceEstimate> empiricalCovariance(const std::vector<FieldSample>& samples,
                                                    const std::vector<Coord>& lags);

}  // namespace rbc
