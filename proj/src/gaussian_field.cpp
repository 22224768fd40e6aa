#include "rbc/gaussian_field.hpp"

#include "fftw_support.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>

namespace rbc {

namespace fftw {
std::mutex& plannerMutex() {
  static std::mutex m;
  return m;
}
}  // namespace fftw

namespace {

using fftw::plannerMutex;
using Plan = fftw::Plan;
template <typename T>
using FftwBuffer = fftw::Buffer<T>;

template <typename T>
FftwBuffer<T> fftwAlloc(std::size_t n) {
  try {
    return fftw::alloc<T>(n);
  } catch (const std::bad_alloc&) {
    throw SamplingError("FFT buffer allocation failed");
  }
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

bool isSmooth(std::int64_t n) {
  for (std::int64_t p : {2, 3, 5})
    while (n % p == 0) n /= p;
  return n == 1;
}

std::size_t realCount(int d, const std::array<std::int64_t, 3>& t) {
  std::size_t n = 1;
  for (int k = 0; k < d; ++k) n *= static_cast<std::size_t>(t[k]);
  return n;
}

std::size_t complexCount(int d, const std::array<std::int64_t, 3>& t) {
  std::size_t n = static_cast<std::size_t>(t[d - 1] / 2 + 1);
  for (int k = 0; k < d - 1; ++k) n *= static_cast<std::size_t>(t[k]);
  return n;
}

std::array<int, 3> dims(int d, const std::array<std::int64_t, 3>& t) {
  return {static_cast<int>(t[0]), static_cast<int>(t[1]), static_cast<int>(d == 3 ? t[2] : 1)};
}

}  // namespace

CovarianceSpec CovarianceSpec::gaussian(double theta) {
  CovarianceSpec s{CovarianceKind::Gaussian, theta, 0.0};
  s.validate();
  return s;
}

CovarianceSpec CovarianceSpec::algebraic(double theta, double beta) {
  CovarianceSpec s{CovarianceKind::Algebraic, theta, beta};
  s.validate();
  return s;
}

CovarianceSpec CovarianceSpec::delta() { return CovarianceSpec{CovarianceKind::Delta, 1.0, 0.0}; }

void CovarianceSpec::validate() const {
  if (kind != CovarianceKind::Delta && !(theta > 0.0))
    throw std::invalid_argument("covariance scale theta must be positive");
  if (kind == CovarianceKind::Algebraic && !(beta > 0.0))
    throw std::invalid_argument("algebraic covariance needs beta > 0");
}

double CovarianceSpec::operator()(double r) const {
  switch (kind) {
    case CovarianceKind::Gaussian:
      return std::exp(-r * r / theta);
    case CovarianceKind::Algebraic:
      return std::pow(1.0 + r / theta, -beta);
    case CovarianceKind::Delta:
      return r == 0.0 ? 1.0 : 0.0;
  }
  return 0.0;
}

double CovarianceSpec::decayExponent() const {
  return kind == CovarianceKind::Algebraic ? beta : std::numeric_limits<double>::infinity();
}

double CovarianceSpec::effectiveRange() const {
  switch (kind) {
    case CovarianceKind::Gaussian:
      return std::sqrt(theta * 16.0 * std::log(10.0));  // c < 1e-16
    case CovarianceKind::Algebraic:
      return theta * (std::pow(1e4, 1.0 / beta) - 1.0);  // c < 1e-4
    case CovarianceKind::Delta:
      return 0.0;
  }
  return 0.0;
}

std::string CovarianceSpec::describe() const {
  std::ostringstream os;
  switch (kind) {
    case CovarianceKind::Gaussian:
      os << "gaussian(theta=" << theta << ")";
      break;
    case CovarianceKind::Algebraic:
      os << "algebraic(theta=" << theta << ",beta=" << beta << ")";
      break;
    case CovarianceKind::Delta:
      os << "delta";
      break;
  }
  return os.str();
}

CoefficientMap CoefficientMap::logistic() { return CoefficientMap{}; }

CoefficientMap CoefficientMap::affine(double eta, double lambdaMin, double lambdaMax) {
  if (!(lambdaMin > 0.0) || lambdaMax < lambdaMin)
    throw std::invalid_argument("affine map needs 0 < lambdaMin <= lambdaMax");
  CoefficientMap m;
  m.kind = CoefficientKind::AffineSmallContrast;
  m.eta = eta;
  m.lambdaMin = lambdaMin;
  m.lambdaMax = lambdaMax;
  return m;
}

CoefficientMap CoefficientMap::constantValue(double c) {
  if (!(c > 0.0)) throw std::invalid_argument("constant conductance must be positive");
  CoefficientMap m;
  m.kind = CoefficientKind::Constant;
  m.constant = c;
  return m;
}

double CoefficientMap::operator()(double g) const {
  switch (kind) {
    case CoefficientKind::Logistic:
      return 1.0 + 3.0 / (1.0 + std::exp(-g));
    case CoefficientKind::AffineSmallContrast:
      return std::clamp(1.0 + eta * g, lambdaMin, lambdaMax);
    case CoefficientKind::Constant:
      return constant;
  }
  return constant;
}

double CoefficientMap::lowerBound() const {
  switch (kind) {
    case CoefficientKind::Logistic:
      return 1.0;
    case CoefficientKind::AffineSmallContrast:
      return lambdaMin;
    case CoefficientKind::Constant:
      return constant;
  }
  return constant;
}

double CoefficientMap::upperBound() const {
  switch (kind) {
    case CoefficientKind::Logistic:
      return 4.0;
    case CoefficientKind::AffineSmallContrast:
      return lambdaMax;
    case CoefficientKind::Constant:
      return constant;
  }
  return constant;
}

std::string CoefficientMap::describe() const {
  std::ostringstream os;
  switch (kind) {
    case CoefficientKind::Logistic:
      os << "logistic";
      break;
    case CoefficientKind::AffineSmallContrast:
      os << "affine(eta=" << eta << ",min=" << lambdaMin << ",max=" << lambdaMax << ")";
      break;
    case CoefficientKind::Constant:
      os << "constant(" << constant << ")";
      break;
  }
  return os.str();
}

std::array<std::int64_t, 3> torusExtentFor(const CovarianceSpec& spec, const LatticeBox& box) {
  std::array<std::int64_t, 3> t{1, 1, 1};
  const double range = spec.effectiveRange();
  for (int k = 0; k < box.dim(); ++k) {
    const std::int64_t ext = box.extent(k);
    // Covariances with very slow decay are truncated at the box scale; the
    // clipping check in buildSpectrum reports the consequence.
    const double padRange = std::min(range, static_cast<double>(2 * ext));
    std::int64_t n = 2 * ext + std::max<std::int64_t>(8, static_cast<std::int64_t>(std::ceil(padRange)));
    while (!isSmooth(n)) ++n;
    t[k] = n;
  }
  return t;
}

Spectrum buildSpectrum(const CovarianceSpec& spec, int d, const std::array<std::int64_t, 3>& torus,
                       double maxClippedFraction) {
  spec.validate();
  const std::size_t nReal = realCount(d, torus);
  const std::size_t nComplex = complexCount(d, torus);
  auto real = fftwAlloc<double>(nReal);
  auto freq = fftwAlloc<fftw_complex>(nComplex);
  const auto n = dims(d, torus);

  // Periodised covariance with minimum-image distances.
  for (std::size_t idx = 0; idx < nReal; ++idx) {
    std::size_t rest = idx;
    double r2 = 0.0;
    for (int k = d - 1; k >= 0; --k) {
      const auto tk = static_cast<std::size_t>(torus[k]);
      auto x = static_cast<std::int64_t>(rest % tk);
      rest /= tk;
      x = std::min(x, torus[k] - x);
      r2 += static_cast<double>(x * x);
    }
    real[idx] = spec(std::sqrt(r2));
  }

  Plan plan;
  {
    std::lock_guard<std::mutex> lock(plannerMutex());
    plan.reset(fftw_plan_dft_r2c(d, n.data(), real.get(), freq.get(), FFTW_ESTIMATE));
  }
  fftw_execute(plan.get());

  Spectrum s;
  s.d = d;
  s.torus = torus;
  s.sqrtEigen.resize(nComplex);
  double positive = 0.0;
  double negative = 0.0;
  double minEigen = std::numeric_limits<double>::infinity();
  // Count every eigenvalue with its multiplicity in the full spectrum: entries
  // of the halved axis other than 0 and the Nyquist index appear twice.
  const auto tl = static_cast<std::size_t>(torus[d - 1]);
  const std::size_t half = tl / 2 + 1;
  for (std::size_t i = 0; i < nComplex; ++i) {
    const double lambda = freq[i][0];
    const std::size_t j = i % half;
    const double mult = (j == 0 || (tl % 2 == 0 && j == tl / 2)) ? 1.0 : 2.0;
    minEigen = std::min(minEigen, lambda);
    if (lambda >= 0.0) {
      positive += mult * lambda;
      s.sqrtEigen[i] = std::sqrt(lambda);
    } else {
      negative += mult * -lambda;
      s.sqrtEigen[i] = 0.0;
    }
  }
  s.clippedFraction = positive > 0.0 ? negative / positive : 1.0;
  s.minEigen = minEigen;
  if (s.clippedFraction > maxClippedFraction) {
    std::ostringstream os;
    os << "covariance " << spec.describe() << " is not embeddable on this torus: clipped fraction "
       << s.clippedFraction << " > " << maxClippedFraction;
    throw SamplingError(os.str());
  }
  return s;
}

double counterNormal(std::uint64_t seed, std::uint64_t counter) {
  const std::uint64_t key = splitmix64(seed ^ 0x5DEECE66Dull);
  const std::uint64_t a = splitmix64(key + 2 * counter);
  const std::uint64_t b = splitmix64(key + 2 * counter + 1);
  const double u1 = (static_cast<double>(a >> 11) + 0.5) * 0x1.0p-53;
  const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

GaussianFieldSampler::GaussianFieldSampler(const CovarianceSpec& spec, const LatticeBox& box,
                                           double maxClippedFraction)
    : GaussianFieldSampler(spec, box, torusExtentFor(spec, box), maxClippedFraction) {}

GaussianFieldSampler::GaussianFieldSampler(const CovarianceSpec& spec, const LatticeBox& box,
                                           const std::array<std::int64_t, 3>& torus,
                                           double maxClippedFraction)
    : spec_(spec), box_(box) {
  for (int k = 0; k < box.dim(); ++k)
    if (torus[k] < 2 * box.extent(k))
      throw SamplingError("embedding torus too small for the requested box");
  spectrum_ = buildSpectrum(spec, box.dim(), torus, maxClippedFraction);
}

FieldSample GaussianFieldSampler::sample(std::uint64_t seed) const {
  const int d = box_.dim();
  const auto& torus = spectrum_.torus;
  const std::size_t nReal = realCount(d, torus);
  const std::size_t nComplex = complexCount(d, torus);
  auto real = fftwAlloc<double>(nReal);
  auto freq = fftwAlloc<fftw_complex>(nComplex);
  const auto n = dims(d, torus);

  Plan forward;
  Plan backward;
  {
    std::lock_guard<std::mutex> lock(plannerMutex());
    forward.reset(fftw_plan_dft_r2c(d, n.data(), real.get(), freq.get(), FFTW_ESTIMATE));
    backward.reset(fftw_plan_dft_c2r(d, n.data(), freq.get(), real.get(), FFTW_ESTIMATE));
  }

  const auto count = static_cast<std::ptrdiff_t>(nReal);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i)
    real[static_cast<std::size_t>(i)] = counterNormal(seed, static_cast<std::uint64_t>(i));

  fftw_execute(forward.get());
  const double scale = 1.0 / static_cast<double>(nReal);
  for (std::size_t i = 0; i < nComplex; ++i) {
    const double m = spectrum_.sqrtEigen[i] * scale;
    freq[i][0] *= m;
    freq[i][1] *= m;
  }
  fftw_execute(backward.get());

  FieldSample out;
  out.seed = seed;
  out.covariance = spec_;
  out.torus = torus;
  out.clippedFraction = spectrum_.clippedFraction;
  out.g = NodeField(box_);
  for (std::size_t idx = 0; idx < box_.nodeCount(); ++idx) {
    const Coord c = box_.coord(idx);
    std::size_t t = 0;
    for (int k = 0; k < d; ++k) {
      const std::int64_t wrapped = ((c[k] % torus[k]) + torus[k]) % torus[k];
      t = t * static_cast<std::size_t>(torus[k]) + static_cast<std::size_t>(wrapped);
    }
    out.g.values[idx] = real[t];
  }
  return out;
}

FieldSample sampleField(const CovarianceSpec& spec, const LatticeBox& box, std::uint64_t seed) {
  return GaussianFieldSampler(spec, box).sample(seed);
}

EdgeField coefficientField(const NodeField& g, const CoefficientMap& map) {
  const LatticeBox& box = g.box;
  EdgeField a(box);
  for (int k = 0; k < box.dim(); ++k) {
    const std::size_t s = box.stride(k);
    const auto ext = static_cast<std::size_t>(box.extent(k));
    const auto n = static_cast<std::ptrdiff_t>(box.nodeCount());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      if ((idx / s) % ext == ext - 1) continue;
      a.dir[k][idx] = map(0.5 * (g.values[idx] + g.values[idx + s]));
    }
  }
  const double lo = map.lowerBound();
  const double hi = map.upperBound();
  forEachEdge(box, [&](const Coord&, int k, std::size_t idx) {
    const double v = a.dir[k][idx];
    if (!(v >= lo && v <= hi)) throw LatticeError("conductance outside the map's ellipticity bounds");
  });
  return a;
}

std::vector<CovarianceEstimate> empiricalCovariance(const std::vector<FieldSample>& samples,
                                                    const std::vector<Coord>& lags) {
  if (lags.empty()) throw std::invalid_argument("empiricalCovariance: empty lag list");
  if (samples.size() < 2) throw std::invalid_argument("empiricalCovariance: need at least two samples");
  const LatticeBox& box = samples.front().g.box;
  for (const auto& s : samples)
    if (!(s.g.box == box)) throw std::invalid_argument("empiricalCovariance: samples on different boxes");

  std::vector<CovarianceEstimate> out;
  for (Coord lag : lags) {
    // Canonical representative of {lag, -lag}: first nonzero component positive.
    for (int k = 0; k < 3; ++k) {
      if (lag[k] == 0) continue;
      if (lag[k] < 0)
        for (auto& v : lag) v = -v;
      break;
    }
    std::vector<double> perSample;
    for (const auto& s : samples) {
      double sum = 0.0;
      std::size_t pairs = 0;
      for (std::size_t idx = 0; idx < box.nodeCount(); ++idx) {
        const Coord x = box.coord(idx);
        const Coord y = x + lag;
        if (!box.contains(y)) continue;
        sum += s.g.values[idx] * s.g.at(y);
        ++pairs;
      }
      if (pairs == 0) throw std::invalid_argument("empiricalCovariance: lag larger than the box");
      perSample.push_back(sum / static_cast<double>(pairs));
    }
    const auto m = static_cast<double>(perSample.size());
    double total = 0.0;
    for (double v : perSample) total += v;
    const double mean = total / m;
    double jk = 0.0;
    for (double v : perSample) {
      const double leaveOut = (total - v) / (m - 1.0);
      jk += (leaveOut - mean) * (leaveOut - mean);
    }
    CovarianceEstimate e;
    e.lag = lag;
    e.value = mean;
    e.standardError = std::sqrt((m - 1.0) / m * jk);
    out.push_back(e);
  }
  return out;
}

}  // namespace rbc
