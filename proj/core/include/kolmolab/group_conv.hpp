#pragma once

#include <functional>
#include <vector>

#include "kolmolab/grid_field.hpp"
#include "kolmolab/kernel.hpp"
#include "kolmolab/lie_group.hpp"

namespace kolmolab {

/// A source given in closed form, extended by zero outside [t0, t1].
struct FunctionSource {
  std::function<double(const Vec& x, double t)> fn;
  double t0 = 0.0;
  double t1 = 1.0;
};

/// The kernel K (derivative < 0) or a first derivative in direction i < m0,
/// evaluated exactly inside a convolution.
///
/// With source_derivative = false the convolved function is D_i K itself, so
/// (D_i K) * g = D_i (K * g). With source_derivative = true the derivative
/// falls on the source point of K(z; zeta), which gives K * (D_i g); the two
/// differ when B != 0 because D_i does not commute with <Bx, D>.
struct KernelClosure {
  const KernelContext* ctx = nullptr;
  int derivative = -1;
  bool source_derivative = false;
};

inline KernelClosure kernel_closure(const KernelContext& ctx) { return {&ctx, -1, false}; }
inline KernelClosure gradient_closure(const KernelContext& ctx, int i) { return {&ctx, i, false}; }
inline KernelClosure source_gradient_closure(const KernelContext& ctx, int i) { return {&ctx, i, true}; }

/// Quadrature controls for kernel-closure convolutions. For every source time
/// slab the time lag tau = t - s is integrated with Gauss-Legendre (with the
/// substitution tau = v^2 on the slab touching tau = 0) and the spatial
/// integral with a tensor Gauss-Hermite rule in the Gaussian variable of K.
struct ConvolveOptions {
  int hermite_order = 6;
  int legendre_order = 4;
  /// Sub-panels per source time slab.
  int panels = 1;
};

/// f * g over g's cells by the midpoint rule, f sampled multilinearly, output on `out`.
GridField convolve(const GridField& f, const GridField& g, const StructureMatrix& s, const GridSpec& out);
/// f * g on g's grid; the time ranges of f and g must agree.
GridField convolve(const GridField& f, const GridField& g, const StructureMatrix& s);

/// K * g (or D_i K * g), g piecewise constant in time and multilinear in space.
GridField convolve(const KernelClosure& k, const GridField& g, const GridSpec& out,
                   const ConvolveOptions& opts = {});
GridField convolve(const KernelClosure& k, const GridField& g, const ConvolveOptions& opts = {});

double convolve_at(const KernelClosure& k, const GridField& g, const Vec& x, double t,
                   const ConvolveOptions& opts = {});
double convolve_at(const KernelClosure& k, const FunctionSource& g, const Vec& x, double t,
                   const ConvolveOptions& opts = {});

/// Bounding grid for f * g (f, g grid fields) with g's cell sizes.
GridSpec convolution_support(const GridSpec& f, const GridSpec& g, const StructureMatrix& s);
/// Bounding grid for K * g on (g.t0, t_end), widened by `sigmas` kernel standard deviations.
GridSpec kernel_support(const KernelContext& ctx, const GridSpec& g, double t_end, double sigmas = 5.0);

/// f_zeta(z) = f(zeta^{-1} o z), sampled on `out`.
GridField left_translate(const GridField& f, const GroupElement& zeta, const StructureMatrix& s,
                         const GridSpec& out);

struct YoungReport {
  double p = 1.0, q = 1.0, r = 1.0;
  double lhs = 0.0;
  double norm_f = 0.0;
  double norm_g = 0.0;
  double ratio = 0.0;
};

/// ||f*g||_r / (||f||_p ||g||_q) with 1/p + 1/q = 1/r + 1.
YoungReport young_check(const GridField& f, const GridField& g, const StructureMatrix& s, double p,
                        double q, double r);

struct EmbeddingReport {
  double p = 1.0;
  double q = 1.0;
  double lhs = 0.0;
  double bound = 0.0;
  double sigma = 0.0;
  double tolerance = 0.0;
  bool satisfied = false;

  friend bool operator==(const EmbeddingReport&, const EmbeddingReport&) = default;
};

struct EmbeddingOptions {
  ConvolveOptions convolve;
  /// Relative slack allowed on the bound.
  double tolerance = 0.05;
  double support_sigmas = 5.0;
  /// Known sigma_1 for embedding_grad; 0 computes it by quadrature.
  double sigma = 0.0;
};

/// ||K*u||_p <= sigma_0 ||u||_q, sigma_0 = ||K||_{p0 - eps0}, 1/p = 1/q + 1/(p0-eps0) - 1.
EmbeddingReport embedding_l1(const GridField& u, double q, double eps0, const KernelContext& ctx,
                             const EmbeddingOptions& opts = {});

/// ||D_i K*u||_p <= sigma_1 ||u||_q, sigma_1 = ||D_i K||_{p1 - eps1} by quadrature.
EmbeddingReport embedding_grad(const GridField& u, double q, double eps1, const KernelContext& ctx, int i,
                               const EmbeddingOptions& opts = {});

struct L2EmbeddingRatio {
  double p = 1.0;
  double q = 1.0;
  double lhs = 0.0;
  double norm_u = 0.0;
  double ratio = 0.0;
};

/// ||K*u||_p / ||u||_q with 1/p = 1/q - 2/(Q+2).
L2EmbeddingRatio embedding_l2_ratio(const GridField& u, double q, const KernelContext& ctx,
                                    const EmbeddingOptions& opts = {});

/// u = K*g + sum_i K*(D_i f^i) on `out`, the solution of K_0 u = g + D_i f^i
/// with the derivative moved onto the kernel's source point; all sources share one grid.
GridField solve_cauchy(const KernelContext& ctx, const GridField& g, const std::vector<GridField>& f,
                       const GridSpec& out, const ConvolveOptions& opts = {});

/// Point evaluation of the same representation for closed-form sources.
double solve_cauchy_at(const KernelContext& ctx, const FunctionSource& g, const std::vector<FunctionSource>& f,
                       const Vec& x, double t, const ConvolveOptions& opts = {});

}  // namespace kolmolab
