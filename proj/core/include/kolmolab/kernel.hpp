#pragma once

#include <string_view>

#include "kolmolab/lie_group.hpp"
#include "kolmolab/numerics.hpp"

namespace kolmolab {

/// Precomputed data for evaluating the fundamental solution
///   K(x,t) = C_N t^{-Q/2} exp(-1/4 <C(1)^{-1} y, y>),  y = delta_N(1/sqrt t) x.
struct KernelContext {
  StructureMatrix s;
  Mat C1;
  Mat C1_inv;
  double detC1 = 0.0;
  double CN = 0.0;
  /// Symmetric square root of 2 C(1): L1 L1^T = 2 C(1).
  Mat L1;
  /// L1^{-T}.
  Mat L1_inv_T;
};

KernelContext kernel_context(const StructureMatrix& s);

/// Quadratic forms at or above this value make K underflow; eval_K returns 0.
inline constexpr double kQuadraticFormCutoff = 1400.0;

/// K(x,t); zero for t <= 0.
double eval_K(const KernelContext& ctx, const Vec& x, double t);

/// K((y,s)^{-1} o (x,t)).
double eval_K_two_point(const KernelContext& ctx, const GroupElement& z, const GroupElement& zeta);

/// D_i K for i = 0..m0-1. Throws NonPositiveTime for t <= 0.
Vec grad_K(const KernelContext& ctx, const Vec& x, double t);

/// The factor F with D_i K = -1/2 K t^{-1/2} F_i, i.e. F = (C(1)^{-1} delta_N(1/sqrt t) x)
/// restricted to the first m0 coordinates.
Vec grad_K_factor(const KernelContext& ctx, const Vec& x, double t);

enum class LpMethod { ClosedForm, Quadrature };

std::string_view to_string(LpMethod m) noexcept;

/// ||K||_{p, R^N x (t_min, T)} (or of D_i K).
struct LpReport {
  double p = 1.0;
  double T = 1.0;
  /// The norm; +infinity when divergent and no lower cutoff was requested.
  double value = 0.0;
  bool divergent = false;
  LpMethod method = LpMethod::ClosedForm;
  /// Exponent e in int |K(.,t)|^p dx = const * t^e.
  double time_exponent = 0.0;
  /// Estimated absolute error of value^p (quadrature only).
  double error_estimate = 0.0;
  /// Lower time cutoff actually used (0 means the integral reached t = 0).
  double t_min = 0.0;

  friend bool operator==(const LpReport&, const LpReport&) = default;
};

/// p0 = (Q+2)/Q.
double critical_exponent_K(int Q);
/// p1 = (Q+2)/(Q+1).
double critical_exponent_gradK(int Q);

LpReport lp_norm_closed_form(const KernelContext& ctx, double p, double T);

struct QuadratureSpec {
  /// Gauss-Legendre points per spatial axis; 0 picks a default by dimension.
  int spatial_order = 0;
  /// Half-width of the truncation box in standard deviations per axis.
  double box_sigmas = 8.0;
  /// Gauss-Legendre points per geometric time panel [T 2^{-k-1}, T 2^{-k}].
  int time_order = 12;
  /// Fixed lower time cutoff; 0 requests adaptive refinement toward t = 0.
  double t_min = 0.0;
  /// Requested relative accuracy of value^p.
  double tolerance = 1e-6;
  int max_panels = 400;
};

/// Tensor Gauss-Legendre quadrature of |K|^p over the truncation box times
/// (t_min, T), rescaling the box per time slice by delta_N(sqrt t).
LpReport lp_norm_quadrature(const KernelContext& ctx, double p, double T, const QuadratureSpec& spec = {});

/// Same for |D_i K|^p (i < m0).
LpReport lp_norm_grad_quadrature(const KernelContext& ctx, int i, double p, double T,
                                 const QuadratureSpec& spec = {});

/// int_{R^N} K(x,t) dx by tensor Gauss-Legendre quadrature over the truncation box.
double kernel_mass(const KernelContext& ctx, double t, const QuadratureSpec& spec = {});

}  // namespace kolmolab
