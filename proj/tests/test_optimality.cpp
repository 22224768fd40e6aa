#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>

#include "rbc/optimality.hpp"
#include "test_util.hpp"

using namespace rbc;

namespace {

Coord neg(const Coord& n) { return {-n[0], -n[1], -n[2]}; }

double stencil(const LatticeGreenTable& G, const Coord& n) {
  double s = 2.0 * G.d * G(n);
  for (int k = 0; k < G.d; ++k) s -= G(n + unitVector(k)) + G(n - unitVector(k));
  return s;
}

}  // namespace

TEST_SUITE("optimality") {

TEST_CASE("lattice Green function: symmetry and stencil identity") {
  for (int d : {2, 3}) {
    const LatticeGreenTable G = latticeGreen(d, 12);
    CHECK(G(unitVector(0)) == G(unitVector(1)));
    CHECK(G(unitVector(0)) == G(neg(unitVector(0))));
    const Coord a{3, -5, d == 3 ? 2 : 0};
    const Coord b{-5, 3, d == 3 ? -2 : 0};
    CHECK(G(a) == G(b));
    CHECK(std::abs(stencil(G, {0, 0, 0}) - 1.0) <= 1e-10);
    for (const Coord& n : {Coord{1, 0, 0}, Coord{4, 7, 0}, Coord{-9, 2, d == 3 ? 5 : 0}})
      CHECK(std::abs(stencil(G, n)) <= 1e-10);
    CHECK_THROWS_AS(G(Coord{13, 0, 0}), LatticeError);
  }
  CHECK(latticeGreen(2, 12)(Coord{0, 0, 0}) == 0.0);
}

TEST_CASE("lattice Green function in three dimensions: asymptote and value at the origin") {
  const LatticeGreenTable G = latticeGreen(3, 48);
  for (const Coord& n : {Coord{40, 0, 0}, Coord{0, 40, 0}, Coord{24, 24, 20}}) {
    const double r = std::sqrt(static_cast<double>(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]));
    CHECK(std::abs(G(n) * 4.0 * std::numbers::pi * r - 1.0) <= 0.02);
  }
  // Watson's integral
  CHECK(G(Coord{0, 0, 0}) == doctest::Approx(0.2527310).epsilon(1e-4));
}

TEST_CASE("lattice Green function guards") {
  CHECK_THROWS_AS(latticeGreen(3, 65), LatticeError);
  CHECK_THROWS_AS(latticeGreen(2, 257), LatticeError);
  CHECK_THROWS_AS(latticeGreen(3, 8, 1024), LatticeError);
  CHECK_THROWS_AS(latticeGreen(4, 8), LatticeError);
}

TEST_CASE("correlation model") {
  const auto c = CorrelationModel::algebraic(3.0);
  CHECK(c(Coord{0, 0, 0}) == 1.0);
  CHECK(c(Coord{3, 4, 0}) == doctest::Approx(std::pow(6.0, -3.0)));
  const auto dl = CorrelationModel::deltaModel();
  CHECK(dl(Coord{1, 0, 0}) == 0.0);
  CHECK(dl.rowSumBound(3) == 1.0);
  CHECK_THROWS(CorrelationModel::algebraic(0.0));
  double partial = 0.0;
  const LatticeBox box(2, 50);
  for (std::size_t i = 0; i < box.nodeCount(); ++i) partial += c(box.coord(i));
  CHECK(c.rowSumBound(2) >= partial);
  CHECK(std::isinf(CorrelationModel::algebraic(1.5).rowSumBound(2)));
}

TEST_CASE("conditional coefficients: independence and positivity") {
  const auto dl = CorrelationModel::deltaModel();
  const ConditioningSystem sysD(dl, 2, 4);
  for (double g : conditionalCoefficients(sysD, dl, {5, 2, 0}).gamma) CHECK(g == 0.0);

  const auto c = CorrelationModel::algebraic(20.0);
  const ConditioningSystem sys(c, 2, 4);
  for (const Coord& n : {Coord{5, 0, 0}, Coord{5, 5, 0}, Coord{-7, 3, 0}, Coord{0, -12, 0}}) {
    const auto cc = conditionalCoefficients(sys, c, n);
    CHECK(cc.residual <= 1e-10);
    for (std::size_t k = 0; k < cc.gamma.size(); ++k) {
      CHECK(cc.gamma[k] >= -1e-12);
      CHECK(cc.gamma[k] <= c(n - sys.box().coord(k)) + 1e-12);
    }
  }
  CHECK_THROWS(conditionalCoefficients(sys, c, {1, 1, 0}));
  CHECK_THROWS_AS(ConditioningSystem(c, 3, 8), LatticeError);
}

TEST_CASE("conditional coefficients agree with multivariate-normal conditioning") {
  // E[G_n | G_I] = -P_nn^-1 P_nI G_I with P the precision of (G_I, G_n).
  const auto c = CorrelationModel::algebraic(2.5);
  const ConditioningSystem sys(c, 2, 1);
  const LatticeBox& I = sys.box();
  for (const Coord& n : {Coord{2, 0, 0}, Coord{3, -2, 0}}) {
    const int m = static_cast<int>(I.nodeCount());
    Eigen::MatrixXd S(m + 1, m + 1);
    auto site = [&](int a) { return a < m ? I.coord(static_cast<std::size_t>(a)) : n; };
    for (int a = 0; a <= m; ++a)
      for (int b = 0; b <= m; ++b) S(a, b) = c(site(a) - site(b));
    const Eigen::MatrixXd P = S.inverse();
    const auto cc = conditionalCoefficients(sys, c, n);
    for (int k = 0; k < m; ++k) CHECK(cc.gamma[static_cast<std::size_t>(k)] == doctest::Approx(-P(m, k) / P(m, m)).epsilon(1e-10));
  }
}

TEST_CASE("conditional cross-covariance is symmetric") {
  const auto c = CorrelationModel::algebraic(4.0);
  const ConditioningSystem sys(c, 2, 2);
  const LatticeBox& I = sys.box();
  const Coord n{4, 1, 0}, np{-3, 6, 0};
  const auto gn = conditionalCoefficients(sys, c, n).gamma;
  const auto gp = conditionalCoefficients(sys, c, np).gamma;
  double a = 0.0, b = 0.0, q = 0.0;
  for (std::size_t k = 0; k < I.nodeCount(); ++k) {
    a += gn[k] * c(np - I.coord(k));
    b += gp[k] * c(n - I.coord(k));
    for (std::size_t l = 0; l < I.nodeCount(); ++l) q += gn[k] * c(I.coord(k) - I.coord(l)) * gp[l];
  }
  CHECK(std::abs(a - b) <= 1e-8);
  CHECK(std::abs(a - q) <= 1e-8);
}

TEST_CASE("optimality charge") {
  const EdgeField h = optimalityCharge(2, 2, {1.0, 0.5, 0.0});
  double s0 = 0.0, s1 = 0.0;
  forEachEdge(h.box, [&](const Coord& n, int k, std::size_t idx) {
    if (maxNorm(n) > 2) CHECK(h.dir[k][idx] == 0.0);
    (k == 0 ? s0 : s1) += h.dir[k][idx];
  });
  CHECK(s0 == doctest::Approx(4.0));
  CHECK(s1 == doctest::Approx(2.0));
}

TEST_CASE("variance kernel matches explicit convolution") {
  // grad ubar(0) for -lap ubar = div(g grad v), by direct convolution.
  const int d = 2, R = 10;
  const LatticeGreenTable G = latticeGreen(d, R + 8);
  const EdgeField h = optimalityCharge(d, 1);
  const VarianceKernel ker = varianceKernel(G, h, R);

  // v by convolution, then its forward differences
  const NodeField f = discreteDivergence(h);
  auto v = [&](const Coord& x) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.box.nodeCount(); ++i) s += G(x - f.box.coord(i)) * f[i];
    return s;
  };
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  const LatticeBox gbox(d, Coord{7, 3, 0});
  EdgeField F(LatticeBox(d, 9));
  double viaKernel[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < gbox.nodeCount(); ++i) {
    const Coord y = gbox.coord(i) + Coord{0, 5, 0};
    const double g = normal(rng);
    for (int k = 0; k < d; ++k) F.at(y, k) = g * (v(y + unitVector(k)) - v(y));
    for (int c = 0; c < d; ++c) viaKernel[c] += g * ker.w[c].at(y);
  }
  const NodeField divF = discreteDivergence(F);
  auto ubar = [&](const Coord& x) {
    double s = 0.0;
    for (std::size_t i = 0; i < divF.box.nodeCount(); ++i) s += G(x - divF.box.coord(i)) * divF[i];
    return s;
  };
  for (int c = 0; c < d; ++c) CHECK(viaKernel[c] == doctest::Approx(ubar(unitVector(c)) - ubar({0, 0, 0})).epsilon(1e-10));
  CHECK_THROWS_AS(varianceKernel(G, h, R + 6), LatticeError);
}

TEST_CASE("conditional variance: zero charge and explicit double sum") {
  const int d = 2;
  const std::int64_t L = 2;
  const int R = 8;
  const LatticeGreenTable G = latticeGreen(d, R + 6);
  const auto c = CorrelationModel::algebraic(3.0);

  const VarianceKernel zero = varianceKernel(G, EdgeField(LatticeBox(d, 2)), R);
  CHECK(conditionalVariance(c, zero, L).estimate == 0.0);

  const VarianceKernel ker = varianceKernel(G, optimalityCharge(d, 1), R);
  const VarianceEstimate est = conditionalVariance(c, ker, L);
  // sum over n, n' outside Q_L of w(n) w(n') (c(n - n') - chat(n, n'))
  const ConditioningSystem sys(c, d, L);
  std::vector<Coord> outer;
  std::vector<std::vector<double>> gamma;
  for (std::size_t i = 0; i < ker.box.nodeCount(); ++i) {
    const Coord n = ker.box.coord(i);
    if (maxNorm(n) <= L) continue;
    outer.push_back(n);
    gamma.push_back(conditionalCoefficients(sys, c, n).gamma);
  }
  double total = 0.0;
  for (std::size_t a = 0; a < outer.size(); ++a)
    for (std::size_t b = 0; b < outer.size(); ++b) {
      double chat = 0.0;
      for (std::size_t k = 0; k < sys.box().nodeCount(); ++k) chat += gamma[a][k] * c(outer[b] - sys.box().coord(k));
      double ww = 0.0;
      for (int i = 0; i < d; ++i) ww += ker.w[i].at(outer[a]) * ker.w[i].at(outer[b]);
      total += ww * (c(outer[a] - outer[b]) - chat);
    }
  CHECK(est.estimate == doctest::Approx(total).epsilon(1e-9));
  CHECK(est.estimate >= -1e-10);
  CHECK(est.tailBound >= 0.0);
  CHECK_THROWS(conditionalVariance(c, ker, 3));
}

TEST_CASE("white-noise variance against Monte Carlo") {
  const int d = 2;
  const std::int64_t L = 4;
  const int R = 16;
  const LatticeGreenTable G = latticeGreen(d, R + 6);
  const EdgeField h = optimalityCharge(d, 1);
  const VarianceEstimate est = conditionalVariance(CorrelationModel::deltaModel(), varianceKernel(G, h, R), L);
  const double mc = monteCarloDeltaVariance(G, h, L, R, 2000, 42);
  MESSAGE("delta variance: quadrature " << est.estimate << ", Monte Carlo " << mc);
  // relative standard error of the mean of a chi-square with ~2 dof over 2000 samples is about 3%
  CHECK(std::abs(mc - est.estimate) <= 0.12 * est.estimate);
}

TEST_CASE("variance is nonnegative and nonincreasing in L") {
  const OptimalityStudy study = runOptimality(2, CorrelationModel::algebraic(20.0), 1, {4, 6, 8});
  REQUIRE(study.rows.size() == 3);
  for (std::size_t i = 0; i < study.rows.size(); ++i) {
    CHECK(study.rows[i].estimate >= 0.0);
    if (i > 0) CHECK(study.rows[i].estimate <= study.rows[i - 1].estimate);
  }
}

TEST_CASE("scaling fit examples") {
  std::vector<std::pair<double, double>> exact, five;
  for (double L : {4.0, 8.0, 16.0, 32.0}) {
    exact.emplace_back(L, std::pow(L, -3.0));
    five.emplace_back(L, 5.0 * std::pow(L, -2.0));
  }
  const ScalingFit a = scalingFit(exact);
  CHECK(a.slope == doctest::Approx(-3.0).epsilon(1e-12));
  CHECK(std::abs(a.standardError) <= 1e-12);
  const ScalingFit b = scalingFit(five);
  CHECK(b.slope == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(b.intercept == doctest::Approx(std::log(5.0)).epsilon(1e-12));

  std::mt19937_64 rng(77);
  std::normal_distribution<double> noise;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::pair<double, double>> pts;
    for (double L : {8.0, 16.0, 32.0, 64.0}) pts.emplace_back(L, std::pow(L, -4.5) * (1.0 + 0.05 * noise(rng)));
    CHECK(std::abs(scalingFit(pts).slope + 4.5) <= 0.15);
  }
  CHECK_THROWS(scalingFit({{1.0, 1.0}, {2.0, 0.5}}));
  CHECK_THROWS(scalingFit({{1.0, 1.0}, {2.0, 0.0}, {3.0, 0.1}}));
}

}  // TEST_SUITE
