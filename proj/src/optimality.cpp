#include "rbc/optimality.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "fftw_support.hpp"
#include "rbc/gaussian_field.hpp"
#include "rbc/parallel.hpp"

namespace rbc {

namespace {

bool isSmooth(std::int64_t n) {
  for (std::int64_t p : {2, 3, 5})
    while (n % p == 0) n /= p;
  return n == 1;
}

double euclidean(const Coord& n) {
  double s = 0.0;
  for (int k = 0; k < 3; ++k) s += static_cast<double>(n[k]) * static_cast<double>(n[k]);
  return std::sqrt(s);
}

std::size_t quadrantIndex(int d, int radius, const Coord& a) {
  const auto w = static_cast<std::size_t>(radius + 1);
  std::size_t idx = 0;
  for (int k = 0; k < d; ++k) idx = idx * w + static_cast<std::size_t>(a[k]);
  return idx;
}

}  // namespace

double LatticeGreenTable::operator()(const Coord& n) const {
  Coord a{0, 0, 0};
  for (int k = 0; k < d; ++k) {
    a[k] = n[k] < 0 ? -n[k] : n[k];
    if (a[k] > radius) throw LatticeError("lattice Green table queried outside its radius");
  }
  return values[quadrantIndex(d, radius, a)];
}

LatticeGreenTable latticeGreen(int d, int radius, std::size_t memoryGuardBytes) {
  if (d != 2 && d != 3) throw LatticeError("latticeGreen: d must be 2 or 3");
  if (radius < 1) throw LatticeError("latticeGreen: radius must be positive");
  if (radius > (d == 2 ? 256 : 64)) throw LatticeError("latticeGreen: radius above the supported limit");

  // Half torus (T / 2) is at least 4 radius and 2-3-5 smooth.
  std::int64_t half = std::max<std::int64_t>(4 * radius, 8);
  while (!isSmooth(half)) ++half;
  const std::int64_t T = 2 * half;
  const auto n = static_cast<std::size_t>(half + 1);
  std::size_t total = 1;
  for (int k = 0; k < d; ++k) total *= n;
  if (total * sizeof(double) > memoryGuardBytes) throw LatticeError("latticeGreen: torus exceeds the memory guard");

  auto buf = fftw::alloc<double>(total);
  std::vector<double> eig(n);
  for (std::size_t j = 0; j < n; ++j)
    eig[j] = 2.0 - 2.0 * std::cos(2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(T));
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rest = idx;
    double lam = 0.0;
    for (int k = d - 1; k >= 0; --k) {
      lam += eig[rest % n];
      rest /= n;
    }
    buf[idx] = idx == 0 ? 0.0 : 1.0 / lam;
  }

  // The even extension of the quadrant makes the size-T DFT a DCT-I of size T/2 + 1.
  {
    int dims[3] = {static_cast<int>(n), static_cast<int>(n), static_cast<int>(n)};
    fftw_r2r_kind kinds[3] = {FFTW_REDFT00, FFTW_REDFT00, FFTW_REDFT00};
    fftw::Plan plan;
    {
      std::lock_guard<std::mutex> lock(fftw::plannerMutex());
      plan.reset(fftw_plan_r2r(d, dims, buf.get(), buf.get(), kinds, FFTW_ESTIMATE));
    }
    if (!plan) throw LatticeError("latticeGreen: FFT planning failed");
    fftw_execute(plan.get());
  }

  const double N = std::pow(static_cast<double>(T), d);
  LatticeGreenTable tab;
  tab.d = d;
  tab.radius = radius;
  tab.torus = T;
  const auto w = static_cast<std::size_t>(radius + 1);
  std::size_t count = 1;
  for (int k = 0; k < d; ++k) count *= w;
  tab.values.assign(count, 0.0);
  std::vector<double> raw(count);
  for (std::size_t idx = 0; idx < count; ++idx) {
    std::size_t rest = idx;
    Coord a{0, 0, 0};
    for (int k = d - 1; k >= 0; --k) {
      a[k] = static_cast<std::int64_t>(rest % w);
      rest /= w;
    }
    std::size_t src = 0;
    double r2 = 0.0;
    for (int k = 0; k < d; ++k) {
      src = src * n + static_cast<std::size_t>(a[k]);
      r2 += static_cast<double>(a[k] * a[k]);
    }
    // Torus solution of -lap G = delta - 1/N, corrected by the quadratic
    // whose negative Laplacian is 1/N.
    raw[idx] = buf[src] / N - r2 / (2.0 * d * N);
  }

  // Average over axis permutations.
  std::array<int, 3> perm{0, 1, 2};
  int perms = 0;
  do {
    if (d == 2 && perm[2] != 2) continue;
    ++perms;
    for (std::size_t idx = 0; idx < count; ++idx) {
      std::size_t rest = idx;
      Coord a{0, 0, 0};
      for (int k = d - 1; k >= 0; --k) {
        a[k] = static_cast<std::int64_t>(rest % w);
        rest /= w;
      }
      Coord b{0, 0, 0};
      for (int k = 0; k < d; ++k) b[k] = a[perm[k]];
      tab.values[idx] += raw[quadrantIndex(d, radius, b)];
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  for (auto& v : tab.values) v /= perms;

  double shift = 0.0;
  if (d == 3) {
    // Match the 1 / (4 pi |n|) asymptote on the outer shell.
    double s = 0.0;
    std::size_t m = 0;
    for (std::size_t idx = 0; idx < count; ++idx) {
      std::size_t rest = idx;
      Coord a{0, 0, 0};
      for (int k = d - 1; k >= 0; --k) {
        a[k] = static_cast<std::int64_t>(rest % w);
        rest /= w;
      }
      if (maxNorm(a) != radius) continue;
      s += 1.0 / (4.0 * std::numbers::pi * euclidean(a)) - tab.values[idx];
      ++m;
    }
    shift = s / static_cast<double>(m);
  } else {
    shift = -tab.values[0];
  }
  for (auto& v : tab.values) v += shift;
  return tab;
}

CorrelationModel CorrelationModel::algebraic(double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("correlation exponent must be positive");
  CorrelationModel m;
  m.beta = beta;
  return m;
}

CorrelationModel CorrelationModel::deltaModel() {
  CorrelationModel m;
  m.delta = true;
  m.beta = std::numeric_limits<double>::infinity();
  return m;
}

double CorrelationModel::operator()(const Coord& r) const {
  if (delta) return (r[0] == 0 && r[1] == 0 && r[2] == 0) ? 1.0 : 0.0;
  return std::pow(1.0 + euclidean(r), -beta);
}

double CorrelationModel::rowSumBound(int d) const {
  if (delta) return 1.0;
  if (beta <= d) return std::numeric_limits<double>::infinity();
  const std::int64_t R = d == 2 ? 200 : 60;
  double s = 0.0;
  const LatticeBox box(d, R);
  for (std::size_t idx = 0; idx < box.nodeCount(); ++idx) s += (*this)(box.coord(idx));
  // Shells |n|_inf = r > R, using |n| >= r and the shell size bound 2d (2r + 1)^(d - 1).
  for (std::int64_t r = R + 1; r < 100 * R; ++r)
    s += 2.0 * d * std::pow(2.0 * r + 1.0, d - 1) * std::pow(1.0 + static_cast<double>(r), -beta);
  const double r0 = 100.0 * R;
  s += 2.0 * d * std::pow(3.0, d - 1) * std::pow(r0, d - beta) / (beta - d);
  return s;
}

struct ConditioningSystem::Impl {
  Eigen::LLT<Eigen::MatrixXd> llt;
};

ConditioningSystem::ConditioningSystem(const CorrelationModel& model, int d, std::int64_t L)
    : model_(model), box_(d, L), impl_(std::make_unique<Impl>()) {
  const std::size_t m = box_.nodeCount();
  if (m > kConditioningLimit)
    throw LatticeError("conditioning set has " + std::to_string(m) + " sites, above the dense limit");
  Eigen::MatrixXd C(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      C(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = model(box_.coord(i) - box_.coord(j));
  impl_->llt.compute(C);
  if (impl_->llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C, Eigen::EigenvaluesOnly);
    std::ostringstream os;
    os << "conditioning matrix is not positive definite (smallest eigenvalue " << es.eigenvalues().minCoeff() << ")";
    throw std::runtime_error(os.str());
  }
}

ConditioningSystem::~ConditioningSystem() = default;
ConditioningSystem::ConditioningSystem(ConditioningSystem&&) noexcept = default;
ConditioningSystem& ConditioningSystem::operator=(ConditioningSystem&&) noexcept = default;

void ConditioningSystem::solveInPlace(std::vector<double>& b) const {
  if (b.size() != box_.nodeCount()) throw std::invalid_argument("ConditioningSystem: size mismatch");
  Eigen::Map<Eigen::VectorXd> v(b.data(), static_cast<Eigen::Index>(b.size()));
  v = impl_->llt.solve(v).eval();
}

ConditionalCoefficients conditionalCoefficients(const ConditioningSystem& sys, const CorrelationModel& model,
                                                const Coord& n) {
  const LatticeBox& box = sys.box();
  if (box.contains(n)) throw std::invalid_argument("conditionalCoefficients: site lies inside the conditioning box");
  const std::size_t m = box.nodeCount();
  std::vector<double> rhs(m);
  for (std::size_t k = 0; k < m; ++k) rhs[k] = model(n - box.coord(k));
  ConditionalCoefficients out;
  out.gamma = rhs;
  sys.solveInPlace(out.gamma);
  for (std::size_t l = 0; l < m; ++l) {
    double s = 0.0;
    for (std::size_t k = 0; k < m; ++k) s += model(box.coord(l) - box.coord(k)) * out.gamma[k];
    out.residual = std::max(out.residual, std::abs(s - rhs[l]));
  }
  if (out.residual > 1e-10) throw std::runtime_error("conditioning solve residual above 1e-10");
  return out;
}

EdgeField optimalityCharge(int d, int ell, const std::array<double, 3>& nu) {
  if (ell < 1) throw std::invalid_argument("optimalityCharge: ell must be positive");
  const LatticeBox box(d, ell + 1);
  EdgeField h(box);
  const double scale = std::pow(static_cast<double>(ell), d) / std::pow(2.0 * ell + 1.0, d);
  for (std::size_t idx = 0; idx < box.nodeCount(); ++idx) {
    const Coord n = box.coord(idx);
    if (maxNorm(n) > ell) continue;
    for (int k = 0; k < d; ++k) h.dir[k][idx] = nu[k] * scale;
  }
  return h;
}

std::vector<NodeField> potentialGradient(const LatticeGreenTable& green, const EdgeField& h, int R) {
  const int d = h.box.dim();
  if (green.d != d) throw std::invalid_argument("potentialGradient: dimension mismatch");
  const NodeField f = discreteDivergence(h);
  std::vector<std::pair<Coord, double>> src;
  for (std::size_t idx = 0; idx < f.box.nodeCount(); ++idx)
    if (f.values[idx] != 0.0) src.emplace_back(f.box.coord(idx), f.values[idx]);

  const LatticeBox vbox(d, R + 1);
  NodeField v(vbox);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(vbox.nodeCount()); ++i) {
    const Coord n = vbox.coord(static_cast<std::size_t>(i));
    double s = 0.0;
    for (const auto& [m, fm] : src) s += green(n - m) * fm;
    v.values[static_cast<std::size_t>(i)] = s;
  }
  const LatticeBox box(d, R);
  std::vector<NodeField> grad(static_cast<std::size_t>(d), NodeField(box));
  for (std::size_t idx = 0; idx < box.nodeCount(); ++idx) {
    const Coord n = box.coord(idx);
    for (int k = 0; k < d; ++k) grad[static_cast<std::size_t>(k)].values[idx] = v.at(n + unitVector(k)) - v.at(n);
  }
  return grad;
}

VarianceKernel varianceKernel(const LatticeGreenTable& green, const EdgeField& h, int R) {
  const int d = h.box.dim();
  if (green.radius < R + h.box.halfWidth() + 2) throw LatticeError("varianceKernel: Green table radius too small");
  const auto gv = potentialGradient(green, h, R);
  VarianceKernel ker;
  ker.box = LatticeBox(d, R);
  ker.w.assign(static_cast<std::size_t>(d), NodeField(ker.box));
  for (std::size_t idx = 0; idx < ker.box.nodeCount(); ++idx) {
    const Coord y = ker.box.coord(idx);
    const Coord my{-y[0], -y[1], -y[2]};
    for (int i = 0; i < d; ++i) {
      double s = 0.0;
      for (int k = 0; k < d; ++k) {
        const double K = green(unitVector(i) + my) - green(unitVector(i) - unitVector(k) + my) - green(my) +
                         green(my - unitVector(k));
        s += K * gv[static_cast<std::size_t>(k)].values[idx];
      }
      ker.w[static_cast<std::size_t>(i)].values[idx] = s;
    }
  }
  return ker;
}

VarianceEstimate conditionalVariance(const CorrelationModel& model, const VarianceKernel& kernel, std::int64_t L) {
  const LatticeBox& box = kernel.box;
  const int d = box.dim();
  const int R = static_cast<int>(box.halfWidth());
  if (R < 4 * L) throw std::invalid_argument("conditionalVariance: truncation radius must be at least 4L");

  std::vector<std::size_t> outer;
  for (std::size_t idx = 0; idx < box.nodeCount(); ++idx)
    if (maxNorm(box.coord(idx)) > L) outer.push_back(idx);

  // c(n - n') for offsets in Q_2R.
  const LatticeBox offsets(d, 2 * static_cast<std::int64_t>(R));
  std::vector<double> ctab;
  if (!model.delta) {
    ctab.resize(offsets.nodeCount());
    for (std::size_t i = 0; i < ctab.size(); ++i) ctab[i] = model(offsets.coord(i));
  }
  auto corr = [&](const Coord& r) { return model.delta ? model(r) : ctab[offsets.index(r)]; };

  const ConditioningSystem sys(model, d, L);
  const LatticeBox& inner = sys.box();

  double quad = 0.0;
  double norm2 = 0.0;
  for (int i = 0; i < d; ++i) {
    const auto& w = kernel.w[static_cast<std::size_t>(i)].values;
    if (model.delta) {
      quad += deterministicSum(outer.size(), [&](std::size_t a) { return w[outer[a]] * w[outer[a]]; });
    } else {
      quad += deterministicSum(outer.size(), [&](std::size_t a) {
        const Coord n = box.coord(outer[a]);
        double s = 0.0;
        for (std::size_t b : outer) s += corr(n - box.coord(b)) * w[b];
        return w[outer[a]] * s;
      });
      std::vector<double> rhs(inner.nodeCount());
      for (std::size_t k = 0; k < rhs.size(); ++k) {
        const Coord m = inner.coord(k);
        double s = 0.0;
        for (std::size_t b : outer) s += corr(m - box.coord(b)) * w[b];
        rhs[k] = s;
      }
      std::vector<double> x = rhs;
      sys.solveInPlace(x);
      double q = 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) q += rhs[k] * x[k];
      quad -= q;
    }
    for (std::size_t b : outer) norm2 += w[b] * w[b];
  }

  // Tail majorant |w(n)| <= K |n|^(-2d), K fitted on the outer shell.
  double K = 0.0;
  for (std::size_t idx = 0; idx < box.nodeCount(); ++idx) {
    const Coord n = box.coord(idx);
    if (maxNorm(n) != R) continue;
    double a = 0.0;
    for (int i = 0; i < d; ++i) a += std::pow(kernel.w[static_cast<std::size_t>(i)].values[idx], 2);
    K = std::max(K, std::sqrt(a) * std::pow(euclidean(n), 2 * d));
  }
  double shellSum = 0.0;
  for (std::int64_t r = R + 1; r < 100 * static_cast<std::int64_t>(R); ++r)
    shellSum += (std::pow(2.0 * r + 1.0, d) - std::pow(2.0 * r - 1.0, d)) * std::pow(static_cast<double>(r), -4.0 * d);
  const double r0 = 100.0 * R;
  shellSum += 2.0 * d * std::pow(3.0, d - 1) * std::pow(r0, -3.0 * d) / (3.0 * d);
  const double tailNorm = K * std::sqrt(shellSum);

  VarianceEstimate est;
  est.L = L;
  est.truncationRadius = R;
  est.estimate = quad;
  est.tailBound = model.rowSumBound(d) * (2.0 * tailNorm * std::sqrt(norm2) + tailNorm * tailNorm);
  est.converged = est.tailBound <= 0.1 * std::abs(est.estimate);
  return est;
}

double monteCarloDeltaVariance(const LatticeGreenTable& green, const EdgeField& h, std::int64_t L, int R,
                               int samples, std::uint64_t seed) {
  const int d = h.box.dim();
  if (green.radius < R + h.box.halfWidth() + 3) throw LatticeError("monteCarloDeltaVariance: Green table too small");
  const auto gv = potentialGradient(green, h, R);
  const LatticeBox box(d, R);
  const LatticeBox fbox(d, R + 1);
  // D_i(m) = G(e_i - m) - G(-m): forward difference of y -> G(y - m) at 0.
  std::vector<std::vector<double>> D(static_cast<std::size_t>(d), std::vector<double>(fbox.nodeCount()));
  for (std::size_t idx = 0; idx < fbox.nodeCount(); ++idx) {
    const Coord m = fbox.coord(idx);
    const Coord mm{-m[0], -m[1], -m[2]};
    for (int i = 0; i < d; ++i) D[static_cast<std::size_t>(i)][idx] = green(unitVector(i) + mm) - green(mm);
  }

  double acc = 0.0;
  EdgeField q(fbox);
  for (int s = 0; s < samples; ++s) {
    for (int k = 0; k < d; ++k) std::fill(q.dir[k].begin(), q.dir[k].end(), 0.0);
    for (std::size_t idx = 0; idx < box.nodeCount(); ++idx) {
      const Coord n = box.coord(idx);
      if (maxNorm(n) <= L) continue;
      const double g = counterNormal(seed, static_cast<std::uint64_t>(s) * box.nodeCount() + idx);
      for (int k = 0; k < d; ++k) q.at(n, k) = g * gv[static_cast<std::size_t>(k)].values[idx];
    }
    const NodeField F = discreteDivergence(q);
    for (int i = 0; i < d; ++i) {
      double gi = 0.0;
      for (std::size_t idx = 0; idx < fbox.nodeCount(); ++idx) gi += D[static_cast<std::size_t>(i)][idx] * F.values[idx];
      acc += gi * gi;
    }
  }
  return acc / samples;
}

ScalingFit scalingFit(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw std::invalid_argument("scalingFit: need at least 3 points");
  std::vector<double> x, y;
  for (const auto& [L, v] : points) {
    if (!(L > 0.0) || !(v > 0.0)) throw std::invalid_argument("scalingFit: values must be positive");
    x.push_back(std::log(L));
    y.push_back(std::log(v));
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("scalingFit: need distinct L values");
  ScalingFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    ssr += r * r;
  }
  fit.standardError = x.size() > 2 ? std::sqrt(ssr / (n - 2.0) / sxx) : 0.0;
  return fit;
}

OptimalityStudy runOptimality(int d, const CorrelationModel& model, int ell, const std::vector<std::int64_t>& Ls) {
  if (Ls.empty()) throw std::invalid_argument("runOptimality: empty L grid");
  const std::int64_t Lmax = *std::max_element(Ls.begin(), Ls.end());
  const int R = static_cast<int>(4 * Lmax);
  const EdgeField h = optimalityCharge(d, ell);
  const LatticeGreenTable green = latticeGreen(d, R + ell + 4);
  const VarianceKernel kernel = varianceKernel(green, h, R);

  OptimalityStudy study;
  std::vector<std::pair<double, double>> pts;
  for (std::int64_t L : Ls) {
    const VarianceEstimate e = conditionalVariance(model, kernel, L);
    OptimalityRow row;
    row.beta = model.beta;
    row.L = L;
    row.ell = ell;
    row.estimate = std::sqrt(std::max(e.estimate, 0.0));
    row.tailBound = e.tailBound;
    row.converged = e.converged;
    study.rows.push_back(row);
    pts.emplace_back(static_cast<double>(L), row.estimate);
  }
  if (pts.size() >= 3) study.fit = scalingFit(pts);
  return study;
}

}  // namespace rbc
