#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kolmolab/grid_field.hpp"

namespace kolmolab {

struct TruncationParams {
  double k = 0.0;
  double l = 1.0;
};

/// Psi_{k,l}: 0 below k, 2(r-k) on (k,l), 2(l-k) above l.
double psi(const TruncationParams& p, double r);
/// Phi_{k,l}: the antiderivative of Psi with Phi(k) = 0.
double phi(const TruncationParams& p, double r);
/// Psi' (2 on (k,l), 0 elsewhere; the one-sided kinks are taken as 0).
double psi_prime(const TruncationParams& p, double r);

struct TruncationSuiteReport {
  std::size_t samples = 0;
  std::size_t psi_squared_failures = 0;
  std::size_t u_psi_failures = 0;
  std::size_t u_psi_prime_failures = 0;
  std::size_t convexity_failures = 0;
  double max_derivative_error = 0.0;
  bool passed = false;
};

/// Psi^2 <= 4 Phi, r Psi <= 2 Phi + k Psi, r Psi' <= Psi + 2k at every sample,
/// Phi convex on the sorted samples and Phi' = Psi by central differences
/// away from the kinks.
TruncationSuiteReport truncation_inequality_suite(const TruncationParams& p, std::span<const double> samples);

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const;
  friend bool operator==(const Rational&, const Rational&) = default;
};

Rational make_rational(std::int64_t num, std::int64_t den);

/// Exact exponents attached to the homogeneous dimension.
struct ExponentTable {
  int Q = 0;
  Rational p0;  // (Q+2)/Q
  Rational p1;  // (Q+2)/(Q+1)
  Rational q0;  // (Q+2)/2
};

ExponentTable exponent_table(int Q);

struct ExponentBundle {
  int Q = 0;
  double p0 = 0.0, q0 = 0.0, p1 = 0.0;
  double eps0 = 0.0, eps1 = 0.0;
  double p0_hat = 0.0, p1_hat = 0.0;
  double theta = 0.9;
  double q_prime = 0.0, q_dprime = 0.0;
  /// 1/q' - 1/p0_hat.
  double alpha = 0.0;
  double coupling1_residual = 0.0;
  double coupling2_residual = 0.0;
};

/// p1_hat = 2 p0_hat / (1 + p0_hat), q' = (1 - theta) + theta p0_hat.
ExponentBundle solve_exponents(int Q, double eps0, double theta = 0.9);

struct BootstrapSchedule {
  std::vector<double> rho;
  int tau = 0;
  double ratio_bound = 0.0;
  bool monotone = false;
  bool ratio_bound_holds = false;
};

/// rho_0 = 2, rho_l = rho q (Q+2) / ((rho + q)(Q+2) - 2 rho q) until rho >= 2 p0.
/// q_tilde = +infinity is allowed; a non-positive denominator means rho = infinity.
BootstrapSchedule bootstrap_exponents(int Q, double q_tilde);

struct IterationLemmaResult {
  double gamma = 0.0;
  /// C Y0^alpha gamma <= 1.
  bool criterion = false;
  std::vector<double> trajectory;
};

/// Extremal recursion Y_{n+1} = C b^n Y_n^{1+alpha}, n = 0..n_max-1.
IterationLemmaResult iteration_lemma(double C, double b, double alpha, double Y0, int n_max);

/// (u - k)_+ nodewise.
GridField undercut(const GridField& u, double k);

enum class IterationMode { L2ToLinf, DataBound };

struct LevelIterationOptions {
  IterationMode mode = IterationMode::L2ToLinf;
  int subintervals = 4;
  int max_doublings = 40;
  int chain_length = 60;
  /// Initial sigma of the data_bound search (h = sigma max(M, 1)).
  double sigma0 = 1.25;
  /// Flat field indices of data nodes; M must dominate u there.
  std::vector<std::size_t> boundary_nodes;
};

struct IterationState {
  double M = 0.0;
  double k = 0.0;
  double bound = 0.0;
  std::vector<double> schedule;
  std::vector<double> measures;
  std::vector<double> energies;
  double fitted_gamma = 0.0;
  double alpha = 0.0;
  double q_prime = 0.0;
  bool smallness = false;
  bool chain_terminated = false;
  bool converged = false;
  int trials = 0;
};

struct LevelIterationResult {
  std::vector<IterationState> intervals;
  double M = 0.0;
  double bound = 0.0;
  double measured_sup = 0.0;
};

/// De Giorgi level-set engine on a discrete field. The time range is split
/// into subintervals and M is propagated forward as the previous bound.
LevelIterationResult run_level_iteration(const GridField& u, double M, const ExponentBundle& bundle,
                                         const LevelIterationOptions& opts = {});

struct ChebyshevCheck {
  double measure = 0.0;
  double bound = 0.0;
};

/// |A_{k'}| against ||(u-k)_+||_2^2 / (k'-k)^2 for k < k'.
ChebyshevCheck chebyshev_check(const GridField& u, double k, double k_prime);

}  // namespace kolmolab
