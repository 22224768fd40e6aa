#pragma once

// Conditional variance of the small-contrast gradient at the origin given the
// Gaussian field inside Q_L:
//   -lap ubar = div(g grad v),  -lap v = div h,
//   grad ubar(0) = sum_n g(n) w(n),  w(n) = K(n) grad v(n),
// with K the mixed second differences of the lattice Green function.

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "rbc/lattice.hpp"

namespace rbc {

/// Green function of -lap on Z^d for |n|_inf <= radius. For d = 2 it is
/// normalised by G(0) = 0 (only differences are meaningful).
struct LatticeGreenTable {
  int d = 3;
  int radius = 0;
  std::int64_t torus = 0;  ///< periodic torus used for the spectral inversion
  std::vector<double> values;  ///< indexed by (|n_0|, |n_1|, |n_2|), (radius + 1)^d entries

  double operator()(const Coord& n) const;
};

inline constexpr std::size_t kGreenMemoryGuard = std::size_t{1} << 30;

/// Spectral inversion on a torus of extent >= 8 radius with the zero mode
/// removed; throws LatticeError above the radius limits or the memory guard.
LatticeGreenTable latticeGreen(int d, int radius, std::size_t memoryGuardBytes = kGreenMemoryGuard);

/// c(r) = (1 + |r|)^(-beta), or the delta correlation.
struct CorrelationModel {
  double beta = 20.0;
  bool delta = false;

  static CorrelationModel algebraic(double beta);
  static CorrelationModel deltaModel();
  double operator()(const Coord& r) const;
  /// Upper bound for sum_n c(n) over Z^d, hence for the covariance operator norm.
  double rowSumBound(int d) const;
};

inline constexpr std::size_t kConditioningLimit = 4096;

/// Cholesky factorisation of C = {c(l - k)}_{l,k in Q_L}, shared across sites.
class ConditioningSystem {
 public:
  ConditioningSystem(const CorrelationModel& model, int d, std::int64_t L);
  ~ConditioningSystem();
  ConditioningSystem(ConditioningSystem&&) noexcept;
  ConditioningSystem& operator=(ConditioningSystem&&) noexcept;

  const LatticeBox& box() const { return box_; }
  /// Solves C x = b in place (b indexed like box()).
  void solveInPlace(std::vector<double>& b) const;

 private:
  struct Impl;
  CorrelationModel model_;
  LatticeBox box_;
  std::unique_ptr<Impl> impl_;
};

struct ConditionalCoefficients {
  std::vector<double> gamma;  ///< indexed like Q_L
  double residual = 0.0;      ///< ||C gamma - C_n||_inf
};

/// E[g_n | g on Q_L] = sum_k gamma_k g_k for |n|_inf > L.
ConditionalCoefficients conditionalCoefficients(const ConditioningSystem& sys, const CorrelationModel& model,
                                                const Coord& n);

/// Vector charge h_k = nu_k ell^d / (2 ell + 1)^d on the k-edges based in Q_ell.
EdgeField optimalityCharge(int d, int ell, const std::array<double, 3>& nu = {1.0, 0.0, 0.0});

/// w_i(n) on Q_R for the charge h.
struct VarianceKernel {
  LatticeBox box;
  std::vector<NodeField> w;  ///< one field per gradient component i
};

VarianceKernel varianceKernel(const LatticeGreenTable& green, const EdgeField& h, int R);

/// grad v at every node of Q_R, computed by convolution with the table.
std::vector<NodeField> potentialGradient(const LatticeGreenTable& green, const EdgeField& h, int R);

struct VarianceEstimate {
  std::int64_t L = 0;
  int truncationRadius = 0;
  double estimate = 0.0;
  double tailBound = 0.0;
  bool converged = true;  ///< tail bound within 10% of the estimate
};

VarianceEstimate conditionalVariance(const CorrelationModel& model, const VarianceKernel& kernel,
                                     std::int64_t L);

/// Monte Carlo E|grad ubar(0)|^2 for i.i.d. standard normal g outside Q_L and
/// inside Q_R, computed by explicit convolution with the Green table.
double monteCarloDeltaVariance(const LatticeGreenTable& green, const EdgeField& h, std::int64_t L, int R,
                               int samples, std::uint64_t seed);

struct ScalingFit {
  double slope = 0.0;
  double standardError = 0.0;
  double intercept = 0.0;
};

/// OLS of log(value) on log(L); needs >= 3 points and positive values.
ScalingFit scalingFit(const std::vector<std::pair<double, double>>& points);

struct OptimalityRow {
  double beta = 0.0;
  std::int64_t L = 0;
  int ell = 1;
  double estimate = 0.0;  ///< square root of the conditional variance
  double tailBound = 0.0;  ///< bound on the variance tail
  bool converged = true;
};

struct OptimalityStudy {
  std::vector<OptimalityRow> rows;
  ScalingFit fit;
};

/// Runs the conditional-variance computation over an L grid with a common
/// truncation radius 4 max(L).
OptimalityStudy runOptimality(int d, const CorrelationModel& model, int ell, const std::vector<std::int64_t>& Ls);

}  // namespace rbc
