#pragma once

#include <cstdint>
#include <vector>

#include "kolmolab/grid_field.hpp"
#include "kolmolab/kernel.hpp"

namespace kolmolab {

// K(., t) is the density of N(0, 2C(t)): its exponent -1/4 <C(t)^{-1} x, x>
// equals -1/2 <Sigma^{-1} x, x> for Sigma = 2C(t), and the prefactor matches
// because det(2C(t)) = 2^N t^Q det C(1). The two-point kernel K(.,t; y,0) is
// therefore the law at time t of dZ = -BZ ds + sqrt(2) dW (W on the first m0
// coordinates) started at y, with mean E(t) y.

enum class SampleMethod { Exact, EulerMaruyama };

struct SampleBatch {
  std::vector<Vec> points;
  double t = 0.0;
  Vec start;
  std::uint64_t seed = 0;
  SampleMethod method = SampleMethod::Exact;
  /// Number of Euler-Maruyama steps (0 for exact sampling).
  int steps = 0;
};

/// Z = E(t) start + L xi with L L^T = 2C(t) (symmetric eigen factor).
SampleBatch exact_sample(const KernelContext& ctx, const Vec& start, double t, std::size_t n, std::uint64_t seed);

/// Z = mean + L xi with L L^T = cov; used for controlled fault injection.
SampleBatch sample_gaussian(const Vec& mean, const Mat& cov, double t, std::size_t n, std::uint64_t seed);

/// Z <- Z - dt B Z + sqrt(2 dt) (xi on the first m0 coordinates), dt = t / steps.
SampleBatch euler_maruyama(const StructureMatrix& s, const Vec& start, double t, int steps, std::size_t n,
                           std::uint64_t seed);

struct Moments {
  Vec mean;
  Mat cov;
};

/// Sample mean and (1/n-normalized) covariance, reduced in a fixed tree order.
Moments empirical_moments(const SampleBatch& batch);

/// Mean and covariance of the exact transition law.
Moments transition_moments(const KernelContext& ctx, const Vec& start, double t);

struct DensityReport {
  double l1 = 0.0;
  std::vector<double> ks;
  double ks_critical = 0.0;
  bool ks_pass = false;
  int bins = 0;
};

/// Histogram L1 distance (including the mass outside the histogram box) and
/// per-marginal Kolmogorov-Smirnov statistics against K(. - E(t) start, t).
/// `bins` per axis is reduced so that the total bin count stays below 1e6.
DensityReport density_error(const SampleBatch& batch, const KernelContext& ctx, int bins = 40,
                            double box_sigmas = 5.0);

/// Empirical density on the spatial part of `spec` (one time cell).
GridField histogram(const SampleBatch& batch, const GridSpec& spec);

}  // namespace kolmolab
