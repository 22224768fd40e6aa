#pragma once

// Whole-space Green function of -div(A grad) for a constant symmetric
// positive definite A, with closed-form derivatives of any order:
//   d = 3: G(x) = 1 / (4 pi sqrt(det A) sqrt(x.A^-1 x))
//   d = 2: G(x) = -log(x.A^-1 x) / (4 pi sqrt(det A))

#include <array>
#include <initializer_list>
#include <vector>

#include "rbc/correctors.hpp"

namespace rbc {

using Point = std::array<double, 3>;

/// Value, gradient and Hessian of a scalar function at a point.
struct Jet {
  double value = 0.0;
  Point grad{0.0, 0.0, 0.0};
  Matrix3 hess{};
};

class GreenEvaluator {
 public:
  GreenEvaluator(int d, const Matrix3& A);
  explicit GreenEvaluator(const HomogenizedModel& model) : GreenEvaluator(model.d, model.sym) {}

  int dim() const { return d_; }
  double value(const Point& x) const;
  /// Mixed partial derivative d^m G / dx_idx[0] ... dx_idx[m-1].
  double derivative(const Point& x, const int* idx, int m) const;
  double derivative(const Point& x, std::initializer_list<int> idx) const {
    return derivative(x, idx.begin(), static_cast<int>(idx.size()));
  }
  Point gradient(const Point& x) const;
  Matrix3 hessian(const Point& x) const;

  /// Adds weight * (d_base G, its gradient and, if order >= 2, its Hessian).
  void accumulateJet(const Point& x, const std::vector<int>& base, double weight, Jet& jet, int order) const;

 private:
  // m-th derivative of the radial profile F(s) with G = F(x.Bx).
  double profileDerivative(double s, int m) const;
  double partitionSum(const int* idx, int m, const Point& y, double s, int blocks) const;

  int d_;
  Matrix3 B_{};  // inverse of A
  double c_ = 0.0;
};

}  // namespace rbc
