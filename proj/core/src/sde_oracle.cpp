#include "kolmolab/sde_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "kolmolab/error.hpp"

namespace kolmolab {

namespace {

Mat symmetric_factor(const Mat& cov) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(cov);
  if (eig.info() != Eigen::Success) throw Error(ErrorCode::FactorizationFailure, "eigendecomposition failed");
  const double scale = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
  if (eig.eigenvalues().minCoeff() < -1e-12 * scale) {
    throw Error(ErrorCode::FactorizationFailure, "covariance is not positive semidefinite");
  }
  const Vec root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Tree reduction of per-sample contributions, one coordinate at a time.
double tree_sum(std::size_t n, auto&& term) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = term(i);
  return pairwise_sum(v);
}

}  // namespace

SampleBatch sample_gaussian(const Vec& mean, const Mat& cov, double t, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw Error(ErrorCode::BadParameters, "sample count must be positive");
  const Mat L = symmetric_factor(cov);
  const int dim = static_cast<int>(mean.size());
  SampleBatch batch;
  batch.points.resize(n);
  batch.t = t;
  batch.seed = seed;
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    std::mt19937_64 rng(substream_seed(seed, i));
    std::normal_distribution<double> normal;
    Vec xi(dim);
    for (int a = 0; a < dim; ++a) xi(a) = normal(rng);
    batch.points[i] = mean + L * xi;
  }
  return batch;
}

SampleBatch exact_sample(const KernelContext& ctx, const Vec& start, double t, std::size_t n, std::uint64_t seed) {
  if (!(t > 0.0)) throw Error(ErrorCode::NonPositiveTime, "sampling time must be positive");
  if (start.size() != ctx.s.N()) throw Error(ErrorCode::ShapeMismatch, "start has the wrong dimension");
  const Moments m = transition_moments(ctx, start, t);
  SampleBatch batch = sample_gaussian(m.mean, m.cov, t, n, seed);
  batch.start = start;
  return batch;
}

SampleBatch euler_maruyama(const StructureMatrix& s, const Vec& start, double t, int steps, std::size_t n,
                           std::uint64_t seed) {
  if (steps < 1) throw Error(ErrorCode::BadParameters, "steps must be >= 1");
  if (n == 0) throw Error(ErrorCode::BadParameters, "sample count must be positive");
  if (!(t > 0.0)) throw Error(ErrorCode::NonPositiveTime, "simulation time must be positive");
  if (start.size() != s.N()) throw Error(ErrorCode::ShapeMismatch, "start has the wrong dimension");
  const int dim = s.N();
  const int m0 = s.m0();
  const double dt = t / steps;
  const double kick = std::sqrt(2.0 * dt);
  const Mat step = Mat::Identity(dim, dim) - dt * s.B();
  SampleBatch batch;
  batch.points.resize(n);
  batch.t = t;
  batch.start = start;
  batch.seed = seed;
  batch.method = SampleMethod::EulerMaruyama;
  batch.steps = steps;
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    std::mt19937_64 rng(substream_seed(seed, i));
    std::normal_distribution<double> normal;
    Vec z = start;
    for (int k = 0; k < steps; ++k) {
      z = step * z;
      for (int a = 0; a < m0; ++a) z(a) += kick * normal(rng);
    }
    batch.points[i] = z;
  }
  return batch;
}

Moments empirical_moments(const SampleBatch& batch) {
  const std::size_t n = batch.points.size();
  if (n == 0) throw Error(ErrorCode::BadParameters, "empty batch");
  const int dim = static_cast<int>(batch.points.front().size());
  Moments m;
  m.mean.resize(dim);
  m.cov.resize(dim, dim);
  for (int a = 0; a < dim; ++a) {
    m.mean(a) = tree_sum(n, [&](std::size_t i) { return batch.points[i](a); }) / static_cast<double>(n);
  }
  for (int a = 0; a < dim; ++a) {
    for (int b = a; b < dim; ++b) {
      const double c = tree_sum(n, [&](std::size_t i) {
                         return (batch.points[i](a) - m.mean(a)) * (batch.points[i](b) - m.mean(b));
                       }) /
                       static_cast<double>(n);
      m.cov(a, b) = c;
      m.cov(b, a) = c;
    }
  }
  return m;
}

Moments transition_moments(const KernelContext& ctx, const Vec& start, double t) {
  return {exp_neg_tB(ctx.s, t) * start, 2.0 * covariance(ctx.s, t)};
}

DensityReport density_error(const SampleBatch& batch, const KernelContext& ctx, int bins, double box_sigmas) {
  const std::size_t n = batch.points.size();
  if (n == 0) throw Error(ErrorCode::BadParameters, "empty batch");
  const int dim = ctx.s.N();
  const Vec start = batch.start.size() == dim ? batch.start : Vec::Zero(dim);
  const Moments model = transition_moments(ctx, start, batch.t);

  DensityReport rep;
  rep.ks.resize(dim);
  rep.ks_critical = 1.36 / std::sqrt(static_cast<double>(n));
  std::vector<double> col(n);
  for (int a = 0; a < dim; ++a) {
    for (std::size_t i = 0; i < n; ++i) col[i] = batch.points[i](a);
    std::sort(col.begin(), col.end());
    const double sd = std::sqrt(model.cov(a, a));
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double F = normal_cdf((col[i] - model.mean(a)) / sd);
      d = std::max({d, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
    }
    rep.ks[a] = d;
  }
  rep.ks_pass = *std::max_element(rep.ks.begin(), rep.ks.end()) < rep.ks_critical;

  // Histogram over a box of box_sigmas marginal standard deviations.
  int b = std::max(1, bins);
  while (std::pow(static_cast<double>(b), dim) > 1e6 && b > 1) --b;
  rep.bins = b;
  Vec lo(dim), width(dim);
  for (int a = 0; a < dim; ++a) {
    const double sd = std::sqrt(model.cov(a, a));
    lo(a) = model.mean(a) - box_sigmas * sd;
    width(a) = 2.0 * box_sigmas * sd / b;
  }
  const std::size_t cells = static_cast<std::size_t>(std::pow(b, dim));
  std::vector<double> counts(cells, 0.0);
  for (const auto& z : batch.points) {
    std::size_t flat = 0;
    bool inside = true;
    for (int a = 0; a < dim; ++a) {
      const double c = std::floor((z(a) - lo(a)) / width(a));
      if (c < 0 || c >= b) {
        inside = false;
        break;
      }
      flat = flat * b + static_cast<std::size_t>(c);
    }
    if (inside) counts[flat] += 1.0;
  }

  // Cell masses of K(. - mean, t) by a 3-point Gauss-Legendre rule per axis.
  const auto rule = gauss_legendre(3);
  const int qpts = static_cast<int>(std::pow(3, dim));
  const double cell_vol = width.prod();
  std::vector<double> diffs(cells);
  std::vector<double> masses(cells);
#pragma omp parallel for schedule(static)
  for (std::size_t c = 0; c < cells; ++c) {
    Vec centre(dim);
    std::size_t rest = c;
    for (int a = dim - 1; a >= 0; --a) {
      centre(a) = lo(a) + (static_cast<double>(rest % b) + 0.5) * width(a);
      rest /= b;
    }
    double mass = 0.0;
    for (int q = 0; q < qpts; ++q) {
      int r = q;
      double w = 1.0;
      Vec x = centre - model.mean;
      for (int a = 0; a < dim; ++a) {
        x(a) += 0.5 * width(a) * rule.nodes[r % 3];
        w *= 0.5 * rule.weights[r % 3];
        r /= 3;
      }
      mass += w * eval_K(ctx, x, batch.t);
    }
    mass *= cell_vol;
    masses[c] = mass;
    diffs[c] = std::abs(counts[c] / static_cast<double>(n) - mass);
  }
  const double model_inside = pairwise_sum(masses);
  const double emp_inside = pairwise_sum(counts) / static_cast<double>(n);
  rep.l1 = pairwise_sum(diffs) + std::abs((1.0 - emp_inside) - std::max(0.0, 1.0 - model_inside));
  return rep;
}

GridField histogram(const SampleBatch& batch, const GridSpec& spec) {
  validate_grid_spec(spec);
  GridField h(spec);
  const int dim = h.dim();
  const int nt = h.time_extent();
  for (const auto& z : batch.points) {
    if (z.size() != dim) throw Error(ErrorCode::ShapeMismatch, "sample dimension differs from the grid");
    std::size_t flat = 0;
    bool inside = true;
    for (int a = 0; a < dim; ++a) {
      const double c = std::floor((z(a) - spec.lower(a)) / h.spacing(a));
      if (c < 0 || c >= spec.shape[a]) {
        inside = false;
        break;
      }
      flat = flat * spec.shape[a] + static_cast<std::size_t>(c);
    }
    if (!inside) continue;
    for (int j = 0; j < nt; ++j) h[flat * nt + j] += 1.0;
  }
  const double scale = 1.0 / (static_cast<double>(batch.points.size()) * h.spatial_cell_volume());
  for (std::size_t i = 0; i < h.size(); ++i) h[i] *= scale;
  return h;
}

}  // namespace kolmolab
