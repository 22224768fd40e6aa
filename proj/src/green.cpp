#include "rbc/green.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rbc {

GreenEvaluator::GreenEvaluator(int d, const Matrix3& A) : d_(d) {
  if (d != 2 && d != 3) throw std::invalid_argument("GreenEvaluator: d must be 2 or 3");
  Eigen::MatrixXd m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = 0.5 * (A[i][j] + A[j][i]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (!(es.eigenvalues().minCoeff() > 0.0)) throw std::invalid_argument("GreenEvaluator: A must be positive definite");
  const Eigen::MatrixXd inv = m.inverse();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) B_[i][j] = inv(i, j);
  c_ = 1.0 / (4.0 * std::numbers::pi * std::sqrt(m.determinant()));
}

double GreenEvaluator::profileDerivative(double s, int m) const {
  if (d_ == 3) {
    // F(s) = c s^(-1/2)
    double coeff = c_;
    double p = -0.5;
    for (int q = 0; q < m; ++q) {
      coeff *= p;
      p -= 1.0;
    }
    return coeff * std::pow(s, -0.5 - m);
  }
  // F(s) = -c log s
  if (m == 0) return -c_ * std::log(s);
  double fact = 1.0;
  for (int q = 2; q < m; ++q) fact *= q;
  const double sign = (m % 2 == 1) ? -1.0 : 1.0;
  return sign * c_ * fact * std::pow(s, -m);
}

// With s = x.Bx and y = Bx, every derivative of F(s) is a sum over the
// partitions of the index list into singletons (factor 2 y_i) and pairs
// (factor 2 B_ij), weighted by F^(number of blocks)(s).
double GreenEvaluator::partitionSum(const int* idx, int m, const Point& y, double s, int blocks) const {
  if (m == 0) return profileDerivative(s, blocks);
  const int first = idx[0];
  double total = 2.0 * y[first] * partitionSum(idx + 1, m - 1, y, s, blocks + 1);
  if (m >= 2) {
    int rest[8];
    for (int p = 1; p < m; ++p) {
      const double b = B_[first][idx[p]];
      if (b == 0.0) continue;
      int r = 0;
      for (int q = 1; q < m; ++q)
        if (q != p) rest[r++] = idx[q];
      total += 2.0 * b * partitionSum(rest, m - 2, y, s, blocks + 1);
    }
  }
  return total;
}

double GreenEvaluator::derivative(const Point& x, const int* idx, int m) const {
  if (m > 8) throw std::invalid_argument("GreenEvaluator: derivative order too high");
  Point y{0.0, 0.0, 0.0};
  double s = 0.0;
  for (int i = 0; i < d_; ++i) {
    for (int j = 0; j < d_; ++j) y[i] += B_[i][j] * x[j];
    s += x[i] * y[i];
  }
  if (!(s > 0.0)) throw std::domain_error("GreenEvaluator: evaluation at the singularity");
  return partitionSum(idx, m, y, s, 0);
}

double GreenEvaluator::value(const Point& x) const { return derivative(x, nullptr, 0); }

Point GreenEvaluator::gradient(const Point& x) const {
  Point g{0.0, 0.0, 0.0};
  for (int i = 0; i < d_; ++i) g[i] = derivative(x, &i, 1);
  return g;
}

Matrix3 GreenEvaluator::hessian(const Point& x) const {
  Matrix3 h{};
  for (int i = 0; i < d_; ++i)
    for (int j = i; j < d_; ++j) {
      const int idx[2] = {i, j};
      h[i][j] = h[j][i] = derivative(x, idx, 2);
    }
  return h;
}

void GreenEvaluator::accumulateJet(const Point& x, const std::vector<int>& base, double weight, Jet& jet,
                                   int order) const {
  int idx[8];
  const int m = static_cast<int>(base.size());
  for (int q = 0; q < m; ++q) idx[q] = base[static_cast<std::size_t>(q)];
  jet.value += weight * derivative(x, idx, m);
  if (order < 1) return;
  for (int a = 0; a < d_; ++a) {
    idx[m] = a;
    jet.grad[a] += weight * derivative(x, idx, m + 1);
  }
  if (order < 2) return;
  for (int a = 0; a < d_; ++a)
    for (int b = a; b < d_; ++b) {
      idx[m] = a;
      idx[m + 1] = b;
      const double v = weight * derivative(x, idx, m + 2);
      jet.hess[a][b] += v;
      if (b != a) jet.hess[b][a] += v;
    }
}

}  // namespace rbc
