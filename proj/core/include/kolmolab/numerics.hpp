#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace kolmolab {

/// Largest ambient dimension N handled by the library.
inline constexpr int kMaxDim = 8;

/// Small dense vectors and matrices with inline storage (no heap traffic in
/// inner loops).
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Legendre rule on [-1, 1] (Golub-Welsch).
QuadratureRule gauss_legendre(int order);

/// Gauss-Legendre rule mapped to [a, b].
QuadratureRule gauss_legendre(int order, double a, double b);

/// Gauss-Hermite rule for the standard normal weight: sum w_i f(x_i) ~ E[f(xi)],
/// xi ~ N(0, 1). Weights sum to one.
QuadratureRule gauss_hermite_normal(int order);

/// Pairwise (tree) summation. The grouping depends only on the length, so the
/// result is reproducible no matter how the summands were produced.
double pairwise_sum(std::span<const double> values);

/// SplitMix64 finalizer; used to derive independent per-path seeds.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seed for substream `index` of the stream identified by `seed`.
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) noexcept;

}  // namespace kolmolab
