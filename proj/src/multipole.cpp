#include "rbc/multipole.hpp"

#include <cmath>
#include <stdexcept>

namespace rbc {

Variant parseVariant(const std::string& name) {
  if (name == "zero") return Variant::Zero;
  if (name == "nopole") return Variant::NoPole;
  if (name == "dipole") return Variant::Dipole;
  if (name == "full") return Variant::Full;
  throw std::invalid_argument("unknown recipe '" + name + "' (expected zero, nopole, dipole or full)");
}

std::string variantName(Variant v) {
  switch (v) {
    case Variant::Zero: return "zero";
    case Variant::NoPole: return "nopole";
    case Variant::Dipole: return "dipole";
    case Variant::Full: return "full";
  }
  return "?";
}

BoundaryRecipe BoundaryRecipe::forRegime(Variant v, int d, double beta, double dipoleSign) {
  BoundaryRecipe r;
  r.variant = v;
  r.dipoleSign = dipoleSign;
  const bool second = d == 3 && beta > 2.0 && v != Variant::Dipole;
  r.order = second ? ExpansionOrder::Second : ExpansionOrder::First;
  return r;
}

ChargeSupport::ChargeSupport(const EdgeField& h) {
  forEachEdge(h.box, [&](const Coord& n, int k, std::size_t idx) {
    const double v = h.dir[k][idx];
    if (v == 0.0) return;
    Point mid{static_cast<double>(n[0]), static_cast<double>(n[1]), static_cast<double>(n[2])};
    mid[k] += 0.5;
    edges.push_back({n, k, v, mid});
  });
}

bool ChargeSupport::nearCharge(const Point& x) const {
  for (const auto& e : edges) {
    double dist = 0.0;
    for (int k = 0; k < 3; ++k) dist = std::max(dist, std::abs(x[k] - e.mid[k]));
    if (dist < 1.0) return true;
  }
  return false;
}

Jet uHomJet(const ChargeSupport& charge, const GreenEvaluator& green, const Point& x, int order) {
  if (order < 0 || order > 2) throw std::invalid_argument("uHomJet: order must be 0, 1 or 2");
  if (charge.nearCharge(x)) throw std::domain_error("u_hom evaluated inside the charge support");
  Jet jet;
  std::vector<int> base(1);
  for (const auto& e : charge.edges) {
    Point y = x;
    for (int k = 0; k < 3; ++k) y[k] -= e.mid[k];
    base[0] = e.k;
    green.accumulateJet(y, base, e.h, jet, order);
  }
  return jet;
}

Jet uHomJet(const EdgeField& h, const GreenEvaluator& green, const Point& x, int order) {
  return uHomJet(ChargeSupport(h), green, x, order);
}

double harmonicPolynomial(const Matrix3& A, int i, int j, const Point& x) {
  const double w = i == j ? 0.5 : 1.0;
  return w * (x[i] * x[j] - A[i][j] / A[0][0] * x[0] * x[0]);
}

Point harmonicPolynomialGradient(const Matrix3& A, int i, int j, const Point& x) {
  const double w = i == j ? 0.5 : 1.0;
  Point g{0.0, 0.0, 0.0};
  g[i] += w * x[j];
  g[j] += w * x[i];
  g[0] -= w * 2.0 * A[i][j] / A[0][0] * x[0];
  return g;
}

namespace {

void requireCovers(const ChargeSupport& charge, const LatticeBox& box, const char* what) {
  for (const auto& e : charge.edges)
    if (!box.hasEdge(e.n, e.k)) throw LatticeError(std::string(what) + ": field does not cover the charge support");
}

Point toPoint(const Coord& n) {
  return {static_cast<double>(n[0]), static_cast<double>(n[1]), static_cast<double>(n[2])};
}

}  // namespace

std::array<double, 3> dipoleCoefficients(const EdgeField& h, const std::vector<NodeField>& phi1) {
  const int d = h.box.dim();
  if (static_cast<int>(phi1.size()) != d) throw std::invalid_argument("dipoleCoefficients: need d correctors");
  const ChargeSupport charge(h);
  std::array<double, 3> xi{0.0, 0.0, 0.0};
  for (int i = 0; i < d; ++i) {
    const NodeField& phi = phi1[static_cast<std::size_t>(i)];
    requireCovers(charge, phi.box, "dipoleCoefficients");
    for (const auto& e : charge.edges) xi[i] += e.h * (phi.at(e.n + unitVector(e.k)) - phi.at(e.n));
  }
  return xi;
}

std::array<double, 5> quadrupoleCoefficients(const EdgeField& h, const std::vector<NodeField>& phi1,
                                             const std::vector<NodeField>& phi2, const Matrix3& A) {
  if (h.box.dim() != 3) throw std::invalid_argument("quadrupole moments are only used for d = 3");
  if (phi1.size() != 3 || phi2.size() != 9) throw std::invalid_argument("quadrupoleCoefficients: missing correctors");
  const ChargeSupport charge(h);
  for (const auto& p : phi1) requireCovers(charge, p.box, "quadrupoleCoefficients");
  for (const auto& p : phi2) requireCovers(charge, p.box, "quadrupoleCoefficients");

  std::array<double, 5> xi{};
  for (std::size_t q = 0; q < kQuadrupolePairs.size(); ++q) {
    const auto [i, j] = kQuadrupolePairs[q];
    const double ratio = A[i][j] / A[0][0];
    const double weight = i == j ? 1.0 : 2.0;
    const NodeField& p2ij = phi2[static_cast<std::size_t>(i * 3 + j)];
    const NodeField& p200 = phi2[0];
    auto psi = [&](const Coord& n) {
      const Point g = harmonicPolynomialGradient(A, i, j, toPoint(n));
      double v = 0.0;
      for (int k = 0; k < 3; ++k) v += phi1[static_cast<std::size_t>(k)].at(n) * g[k];
      return v + weight * (p2ij.at(n) - ratio * p200.at(n));
    };
    double s = 0.0;
    for (const auto& e : charge.edges) s += e.h * (psi(e.n + unitVector(e.k)) - psi(e.n));
    xi[q] = -s;
  }
  return xi;
}

MomentCoefficients momentCoefficients(const EdgeField& h, const CorrectorSet& cs, bool quadrupole) {
  MomentCoefficients m;
  m.xi1 = dipoleCoefficients(h, cs.phi1);
  if (quadrupole) {
    if (!cs.hasSecondOrder()) throw std::invalid_argument("quadrupole moments need second-order correctors");
    m.xi2 = quadrupoleCoefficients(h, cs.phi1, cs.phi2, cs.aHom.sym);
    m.hasQuadrupole = true;
  }
  return m;
}

NodeField assembleBoundary(const LatticeBox& box, const BoundaryRecipe& recipe, const CorrectorSet& cs,
                           const MomentCoefficients& moments, const GreenEvaluator& green, const EdgeField& h) {
  NodeField out(box);
  if (recipe.variant == Variant::Zero) return out;

  const int d = box.dim();
  const bool second = recipe.order == ExpansionOrder::Second;
  const bool withDipole = recipe.variant == Variant::Dipole || recipe.variant == Variant::Full;
  const bool withQuadrupole = recipe.variant == Variant::Full && second;
  if (second && !cs.hasSecondOrder()) throw std::invalid_argument("second-order boundary data needs phi2");
  if (withQuadrupole && !moments.hasQuadrupole) throw std::invalid_argument("full recipe needs quadrupole moments");
  for (const auto& p : cs.phi1)
    if (!p.box.containsBox(box)) throw LatticeError("assembleBoundary: phi1 does not cover the box");
  if (second)
    for (const auto& p : cs.phi2)
      if (!p.box.containsBox(box)) throw LatticeError("assembleBoundary: phi2 does not cover the box");

  const ChargeSupport charge(h);
  const int order = second ? 2 : 1;
  const std::vector<std::size_t> nodes = box.boundaryNodes();
  // Exceptions must not escape the parallel region.
  for (std::size_t idx : nodes)
    if (charge.nearCharge(toPoint(box.coord(idx)))) throw std::domain_error("boundary node inside the charge support");

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(nodes.size()); ++t) {
    const std::size_t idx = nodes[static_cast<std::size_t>(t)];
    const Coord n = box.coord(idx);
    const Point x = toPoint(n);
    Jet w = uHomJet(charge, green, x, order);
    std::vector<int> base;
    if (withDipole) {
      base.assign(1, 0);
      for (int i = 0; i < d; ++i) {
        base[0] = i;
        green.accumulateJet(x, base, recipe.dipoleSign * moments.xi1[i], w, order);
      }
    }
    if (withQuadrupole) {
      base.assign(2, 0);
      for (std::size_t q = 0; q < kQuadrupolePairs.size(); ++q) {
        base[0] = kQuadrupolePairs[q].first;
        base[1] = kQuadrupolePairs[q].second;
        green.accumulateJet(x, base, moments.xi2[q], w, order);
      }
    }
    double v = w.value;
    for (int i = 0; i < d; ++i) v += cs.phi1[static_cast<std::size_t>(i)].at(n) * w.grad[i];
    if (second)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) v += cs.phi2At(i, j).at(n) * w.hess[i][j];
    out.values[idx] = v;
  }
  return out;
}

SolveResult solveVariant(const EdgeField& a, const EdgeField& h, const NodeField& boundary, const SolverConfig& cfg) {
  const LatticeBox& box = a.box;
  const ChargeSupport charge(h);
  EdgeField hBox(box);
  for (const auto& e : charge.edges) {
    if (!box.hasEdge(e.n, e.k)) throw LatticeError("solveVariant: charge does not fit in the box");
    hBox.at(e.n, e.k) = e.h;
  }
  const NodeField rhs = discreteDivergence(hBox);
  return solve(DirichletProblem{a, 0.0, rhs, &boundary}, cfg);
}

SolveResult runRecipe(const EdgeField& aOn2L, const CorrectorSet& cs, const EdgeField& h,
                      const BoundaryRecipe& recipe, const SolverConfig& cfg) {
  const LatticeBox box(aOn2L.box.dim(), cs.L);
  const GreenEvaluator green(cs.aHom);
  const bool quadrupole = recipe.variant == Variant::Full && recipe.order == ExpansionOrder::Second;
  const MomentCoefficients moments =
      recipe.variant == Variant::Zero ? MomentCoefficients{} : momentCoefficients(h, cs, quadrupole);
  const NodeField boundary = assembleBoundary(box, recipe, cs, moments, green, h);
  return solveVariant(restrictField(aOn2L, box), h, boundary, cfg);
}

}  // namespace rbc
