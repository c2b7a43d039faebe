#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "kolmolab/grid_field.hpp"
#include "kolmolab/lie_group.hpp"

namespace kolmolab {

using ScalarField = std::function<double(const Vec& x, double t)>;

/// Omega = V x U with V a box in R^{m0} and U a box in R^{N-m0} (empty when kappa = 0).
struct ProductDomain {
  Vec v_lower;
  Vec v_upper;
  Vec u_lower;
  Vec u_upper;
  double T = 1.0;
};

void validate_domain(const ProductDomain& dom, const StructureMatrix& s);

/// Coefficients of
///   D_t u - <Bx, Du> = D_i(a^{ij} D_j u + b^i u) + c^i D_i u + d u + g + D_i f^i.
/// Empty fields are zero; `a` is m0 x m0 row-major.
struct CoefficientSet {
  std::vector<ScalarField> a;
  std::vector<ScalarField> b;
  std::vector<ScalarField> c;
  std::vector<ScalarField> f;
  ScalarField d;
  ScalarField g;
  double lambda = 1.0;
  double Lambda = 1.0;
  /// a and b do not depend on t; the implicit factorization is then reused.
  bool steady_operator = false;
};

/// a = identity, everything else zero.
CoefficientSet identity_coefficients(int m0);

struct BoundaryData {
  /// Values on the parabolic boundary: (dV x U x [0,T]) and Omega x {0}.
  ScalarField gamma_P;
  /// Inflow values on Gamma_K^+.
  ScalarField gamma_K_plus;
};

enum class NodeClass : std::uint8_t { Interior, GammaP, KPlus, KMinus };
enum class KSide { KPlus, KMinus };

/// Sign of <Bx, n> for x on V x dU; corners take the face with the larger
/// |<Bx, n>|, ties go to K_plus.
KSide classify_boundary(const ProductDomain& dom, const StructureMatrix& s, const Vec& x);

struct FdGrid {
  /// Cells per spatial axis (nodes = cells + 1, boundaries included).
  std::vector<int> cells;
  /// Time step; 0 picks cfl_safety times the largest stable step.
  double dt = 0.0;
  double cfl_safety = 0.9;
};

struct SolveResult {
  /// Nodal values; node (i, n) sits at lower + i h, time n dt.
  GridField u;
  std::vector<NodeClass> node_class;
  /// max(0, sup of the data over Gamma_K^+ and Gamma_P nodes).
  double M = 0.0;
  double dt = 0.0;
  int steps = 0;
  std::vector<double> h;
};

/// IMEX time marching: first-order upwind transport and explicit lower-order
/// terms, implicit diffusion and b-flux per V-fiber.
SolveResult solve(const ProductDomain& dom, const StructureMatrix& s, const CoefficientSet& coeffs,
                  const BoundaryData& data, const FdGrid& grid);

/// Flat indices into r.u of every entry that carries prescribed data: the
/// initial level and all levels of Gamma_P and Gamma_K^+ nodes.
std::vector<std::size_t> data_entries(const SolveResult& r);

/// Kolmogorov operator D_t u - <Bx, Du> - L u of a closed-form u by nested
/// fourth-order central differences; used to manufacture sources.
double apply_kolmogorov(const StructureMatrix& s, const CoefficientSet& coeffs, const ScalarField& u, const Vec& x,
                        double t, double step = 1e-3);

/// max |u|.
double sup_norm(const GridField& u);
/// max u.
double max_value(const GridField& u);
/// cell volume times #{u > k}.
double level_measure(const GridField& u, double k);
/// ||(u - M)_+||_2 over the grid measure.
double undercut_energy(const GridField& u, double M);

struct MaxPrincipleReport {
  double sup_interior = 0.0;
  double sup_K_minus = 0.0;
  double M = 0.0;
  /// max(0, max(sup_interior, sup_K_minus) - M).
  double excess = 0.0;
  bool has_K_minus = false;
};

/// Audits d <= 0, b spatially constant per time level and g = f = 0 on the
/// solution's nodes (HypothesisViolation otherwise), then measures the sup of
/// the solution off the data nodes against M.
MaxPrincipleReport check_max_principle(const SolveResult& r, const CoefficientSet& coeffs);

struct OrderEstimate {
  /// Least-squares slope of log(error) against log(h).
  double order = 0.0;
  /// Every error at or below the exactness threshold.
  bool exact = false;
};

OrderEstimate refinement_order(const std::vector<double>& h, const std::vector<double>& err,
                               double exact_threshold = 1e-12);

}  // namespace kolmolab
