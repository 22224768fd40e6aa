#pragma once

// Far-field boundary data: homogenized solution, harmonic polynomials,
// dipole and quadrupole moments, and the Dirichlet data for each recipe.

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "rbc/correctors.hpp"
#include "rbc/green.hpp"
#include "rbc/lattice.hpp"
#include "rbc/solver.hpp"

namespace rbc {

enum class Variant { Zero, NoPole, Dipole, Full };
enum class ExpansionOrder { First, Second };

Variant parseVariant(const std::string& name);  ///< zero | nopole | dipole | full
std::string variantName(Variant v);

struct BoundaryRecipe {
  Variant variant = Variant::Full;
  ExpansionOrder order = ExpansionOrder::Second;
  double dipoleSign = 1.0;  ///< sign of the dipole term

  /// Second order when d = 3 and beta > 2, except for the dipole baseline
  /// which is always first order.
  static BoundaryRecipe forRegime(Variant v, int d, double beta, double dipoleSign = 1.0);
};

/// Support edges of h with their midpoints.
struct ChargeSupport {
  struct Edge {
    Coord n;
    int k;
    double h;
    Point mid;
  };
  std::vector<Edge> edges;

  explicit ChargeSupport(const EdgeField& h);
  /// True if x lies within one lattice unit (max norm) of a support midpoint.
  bool nearCharge(const Point& x) const;
};

/// u_hom(x) = sum_e d_k G(x - mid_e) h_e and derivatives up to `order`.
/// Throws std::domain_error near the charge.
Jet uHomJet(const ChargeSupport& charge, const GreenEvaluator& green, const Point& x, int order);
Jet uHomJet(const EdgeField& h, const GreenEvaluator& green, const Point& x, int order);

/// v_ij(x) = (1 - delta_ij / 2) (x_i x_j - (A_ij / A_00) x_0^2) and its gradient.
double harmonicPolynomial(const Matrix3& A, int i, int j, const Point& x);
Point harmonicPolynomialGradient(const Matrix3& A, int i, int j, const Point& x);

/// Index pairs of the quadrupole moments (zero-based).
inline constexpr std::array<std::pair<int, int>, 5> kQuadrupolePairs{{{0, 1}, {0, 2}, {1, 2}, {1, 1}, {2, 2}}};

struct MomentCoefficients {
  std::array<double, 3> xi1{0.0, 0.0, 0.0};
  std::array<double, 5> xi2{0.0, 0.0, 0.0, 0.0, 0.0};
  bool hasQuadrupole = false;
};

/// xi1_i = sum_e h_e (grad phi1_i)_e.
std::array<double, 3> dipoleCoefficients(const EdgeField& h, const std::vector<NodeField>& phi1);

/// xi2_ij = -sum_e h_e (grad Psi_ij)_e with
/// Psi_ij = phi1_k d_k v_ij + (2 - delta_ij)(phi2_ij - (A_ij / A_00) phi2_00).
/// phi2[i * 3 + j]; d = 3 only.
std::array<double, 5> quadrupoleCoefficients(const EdgeField& h, const std::vector<NodeField>& phi1,
                                             const std::vector<NodeField>& phi2, const Matrix3& A);

MomentCoefficients momentCoefficients(const EdgeField& h, const CorrectorSet& cs, bool quadrupole);

/// Dirichlet data on the boundary of `box` (interior values are zero).
NodeField assembleBoundary(const LatticeBox& box, const BoundaryRecipe& recipe, const CorrectorSet& cs,
                           const MomentCoefficients& moments, const GreenEvaluator& green, const EdgeField& h);

/// Solves -div a grad u = div h in Q_L with the given boundary data.
/// `a` must live on Q_L; h is embedded (zero outside its box).
SolveResult solveVariant(const EdgeField& a, const EdgeField& h, const NodeField& boundary,
                         const SolverConfig& cfg = {});

/// Full pipeline for one recipe given precomputed correctors (a on Q_2L).
SolveResult runRecipe(const EdgeField& aOn2L, const CorrectorSet& cs, const EdgeField& h,
                      const BoundaryRecipe& recipe, const SolverConfig& cfg = {});

}  // namespace rbc
