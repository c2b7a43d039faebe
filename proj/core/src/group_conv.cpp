#include "kolmolab/group_conv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kolmolab/error.hpp"

namespace kolmolab {

namespace {

// One quadrature node in the time lag tau together with the Gauss-Hermite
// offsets: the source is sampled at y = E(-tau) x - offset_k.
struct LagNode {
  double weight = 0.0;
  double s = 0.0;  // source time t - tau
  int slab = 0;
  Mat einv;
  std::vector<Vec> offsets;
  std::vector<double> factors;  // Hermite weight times kernel factor
};

struct HermiteGrid {
  std::vector<Vec> xi;
  std::vector<double> weight;
};

HermiteGrid hermite_grid(int n, int order) {
  const auto rule = gauss_hermite_normal(order);
  HermiteGrid grid;
  const std::size_t count = static_cast<std::size_t>(std::pow(order, n));
  std::vector<int> idx(n, 0);
  for (std::size_t c = 0; c < count; ++c) {
    Vec xi(n);
    double w = 1.0;
    for (int a = 0; a < n; ++a) {
      xi(a) = rule.nodes[idx[a]];
      w *= rule.weights[idx[a]];
    }
    grid.xi.push_back(xi);
    grid.weight.push_back(w);
    for (int a = n - 1; a >= 0; --a) {
      if (++idx[a] < order) break;
      idx[a] = 0;
    }
  }
  return grid;
}

void append_lag_node(const KernelClosure& k, const HermiteGrid& hg, double tau, double weight, double t,
                     int slab, std::vector<LagNode>& out) {
  if (!(tau > 0.0) || weight == 0.0) return;
  const auto& ctx = *k.ctx;
  LagNode node;
  node.weight = weight;
  node.s = t - tau;
  node.slab = slab;
  node.einv = exp_neg_tB(ctx.s, -tau);
  const Vec dil = dilation_diagonal(ctx.s, std::sqrt(tau));
  const Mat transport = node.einv * dil.asDiagonal() * ctx.L1;
  Vec grad_row;
  if (k.derivative >= 0) {
    // D_x K(w, tau) = -K delta_N(1/sqrt tau) L1^{-T} xi at w = L(tau) xi; the source
    // derivative picks up E(tau)^T from w = x - E(tau) y and a sign from D_y.
    Mat g = dilation_diagonal(ctx.s, 1.0 / std::sqrt(tau)).asDiagonal() * ctx.L1_inv_T;
    if (k.source_derivative) g = exp_neg_tB(ctx.s, tau).transpose() * g;
    grad_row = g.row(k.derivative).transpose();
  }
  node.offsets.reserve(hg.xi.size());
  node.factors.reserve(hg.xi.size());
  for (std::size_t q = 0; q < hg.xi.size(); ++q) {
    node.offsets.push_back(transport * hg.xi[q]);
    double factor = hg.weight[q];
    if (k.derivative >= 0) factor *= -grad_row.dot(hg.xi[q]);
    node.factors.push_back(factor);
  }
  out.push_back(std::move(node));
}

// Lag nodes for the source time slab [a, b] seen from output time t.
void slab_lag_nodes(const KernelClosure& k, const HermiteGrid& hg, const ConvolveOptions& opts, double t,
                    double a, double b, int slab, std::vector<LagNode>& out) {
  const double hi_s = std::min(b, t);
  if (!(hi_s > a)) return;
  const double tau_lo = t - hi_s;
  const double tau_hi = t - a;
  const int panels = std::max(1, opts.panels);
  for (int p = 0; p < panels; ++p) {
    const double lo = tau_lo + (tau_hi - tau_lo) * p / panels;
    const double hi = tau_lo + (tau_hi - tau_lo) * (p + 1) / panels;
    if (lo == 0.0) {
      // tau = v^2 removes the square-root behaviour at zero lag.
      const auto rule = gauss_legendre(opts.legendre_order, 0.0, std::sqrt(hi));
      for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
        const double v = rule.nodes[q];
        append_lag_node(k, hg, v * v, rule.weights[q] * 2.0 * v, t, slab, out);
      }
    } else {
      const auto rule = gauss_legendre(opts.legendre_order, lo, hi);
      for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
        append_lag_node(k, hg, rule.nodes[q], rule.weights[q], t, slab, out);
      }
    }
  }
}

template <typename Sampler>
double accumulate(const std::vector<LagNode>& nodes, const Vec& x, Sampler&& sample) {
  std::vector<double> terms;
  terms.reserve(nodes.size());
  Vec y(x.size());
  for (const auto& node : nodes) {
    const Vec ex = node.einv * x;
    double acc = 0.0;
    for (std::size_t q = 0; q < node.offsets.size(); ++q) {
      y = ex - node.offsets[q];
      acc += node.factors[q] * sample(y, node);
    }
    terms.push_back(node.weight * acc);
  }
  return pairwise_sum(terms);
}

void check_closure(const KernelClosure& k) {
  if (k.ctx == nullptr) throw Error(ErrorCode::BadParameters, "kernel closure without context");
  if (k.derivative >= k.ctx->s.m0()) {
    throw Error(ErrorCode::BadParameters, "derivative index must be < m0");
  }
}

std::vector<LagNode> grid_lag_nodes(const KernelClosure& k, const HermiteGrid& hg, const GridField& g,
                                    double t, const ConvolveOptions& opts) {
  std::vector<LagNode> nodes;
  const double dt = g.spacing(g.dim());
  for (int j = 0; j < g.time_extent(); ++j) {
    const double a = g.spec().t0 + j * dt;
    if (!(a < t)) break;
    slab_lag_nodes(k, hg, opts, t, a, a + dt, j, nodes);
  }
  return nodes;
}

GridSpec with_time(GridSpec spec, double t0, double t1, int nt) {
  spec.t0 = t0;
  spec.t1 = t1;
  spec.shape.back() = nt;
  return spec;
}

}  // namespace

GridField convolve(const GridField& f, const GridField& g, const StructureMatrix& s, const GridSpec& out) {
  if (f.dim() != g.dim() || g.dim() != s.N() || static_cast<int>(out.lower.size()) != s.N()) {
    throw Error(ErrorCode::IncompatibleGrids, "grid dimensions do not match the structure matrix");
  }
  GridField result(out);
  const int n = s.N();
  const int nt_out = result.time_extent();
  const int nt_in = g.time_extent();
  const std::size_t spatial_out = result.size() / static_cast<std::size_t>(nt_out);
  const std::size_t spatial_in = g.size() / static_cast<std::size_t>(nt_in);
  const double vol = g.cell_volume();

  // Source centres are shared by all outputs.
  std::vector<Vec> centres(spatial_in);
  for (std::size_t c = 0; c < spatial_in; ++c) centres[c] = g.node_position(c * nt_in);

  for (int jt = 0; jt < nt_out; ++jt) {
    const double t = result.coord(n, jt);
    std::vector<int> lags;
    std::vector<Mat> transports;
    for (int js = 0; js < nt_in; ++js) {
      const double tau = t - g.coord(n, js);
      if (!(tau > 0.0)) continue;
      lags.push_back(js);
      transports.push_back(exp_neg_tB(s, tau));
    }
#pragma omp parallel for schedule(static)
    for (std::size_t c = 0; c < spatial_out; ++c) {
      const Vec x = result.node_position(c * nt_out);
      std::vector<double> terms;
      terms.reserve(lags.size());
      for (std::size_t l = 0; l < lags.size(); ++l) {
        const int js = lags[l];
        const double tau = t - g.coord(n, js);
        double acc = 0.0;
        for (std::size_t src = 0; src < spatial_in; ++src) {
          const double gv = g[src * nt_in + js];
          if (gv == 0.0) continue;
          const Vec z = x - transports[l] * centres[src];
          acc += f.sample(z, tau) * gv;
        }
        terms.push_back(acc);
      }
      result[c * nt_out + jt] = pairwise_sum(terms) * vol;
    }
  }
  return result;
}

GridField convolve(const GridField& f, const GridField& g, const StructureMatrix& s) {
  if (f.spec().t0 != g.spec().t0 || f.spec().t1 != g.spec().t1) {
    throw Error(ErrorCode::IncompatibleGrids, "time ranges of f and g differ");
  }
  return convolve(f, g, s, g.spec());
}

GridField convolve(const KernelClosure& k, const GridField& g, const GridSpec& out, const ConvolveOptions& opts) {
  check_closure(k);
  const int n = k.ctx->s.N();
  if (g.dim() != n || static_cast<int>(out.lower.size()) != n) {
    throw Error(ErrorCode::IncompatibleGrids, "grid dimensions do not match the kernel");
  }
  GridField result(out);
  const auto hg = hermite_grid(n, opts.hermite_order);
  const int nt_out = result.time_extent();
  const std::size_t spatial_out = result.size() / static_cast<std::size_t>(nt_out);
  for (int jt = 0; jt < nt_out; ++jt) {
    const double t = result.coord(n, jt);
    const auto nodes = grid_lag_nodes(k, hg, g, t, opts);
    if (nodes.empty()) continue;
#pragma omp parallel for schedule(static)
    for (std::size_t c = 0; c < spatial_out; ++c) {
      const Vec x = result.node_position(c * nt_out);
      result[c * nt_out + jt] =
          accumulate(nodes, x, [&](const Vec& y, const LagNode& node) { return g.sample_space(y, node.slab); });
    }
  }
  return result;
}

GridField convolve(const KernelClosure& k, const GridField& g, const ConvolveOptions& opts) {
  return convolve(k, g, g.spec(), opts);
}

double convolve_at(const KernelClosure& k, const GridField& g, const Vec& x, double t, const ConvolveOptions& opts) {
  check_closure(k);
  const auto hg = hermite_grid(k.ctx->s.N(), opts.hermite_order);
  const auto nodes = grid_lag_nodes(k, hg, g, t, opts);
  return accumulate(nodes, x, [&](const Vec& y, const LagNode& node) { return g.sample_space(y, node.slab); });
}

double convolve_at(const KernelClosure& k, const FunctionSource& g, const Vec& x, double t,
                   const ConvolveOptions& opts) {
  check_closure(k);
  const auto hg = hermite_grid(k.ctx->s.N(), opts.hermite_order);
  std::vector<LagNode> nodes;
  slab_lag_nodes(k, hg, opts, t, g.t0, g.t1, 0, nodes);
  return accumulate(nodes, x, [&](const Vec& y, const LagNode& node) { return g.fn(y, node.s); });
}

GridSpec convolution_support(const GridSpec& f, const GridSpec& g, const StructureMatrix& s) {
  const int n = s.N();
  Vec lo = Vec::Constant(n, std::numeric_limits<double>::infinity());
  Vec hi = -lo;
  constexpr int kSamples = 33;
  const int corners = 1 << n;
  for (int k = 0; k < kSamples; ++k) {
    const double tau = f.t0 + (f.t1 - f.t0) * k / (kSamples - 1);
    const Mat e = exp_neg_tB(s, tau);
    for (int c = 0; c < corners; ++c) {
      Vec y(n);
      for (int a = 0; a < n; ++a) y(a) = ((c >> a) & 1) ? g.upper(a) : g.lower(a);
      const Vec ey = e * y;
      lo = lo.cwiseMin(ey + f.lower);
      hi = hi.cwiseMax(ey + f.upper);
    }
  }
  GridSpec out;
  out.lower = lo;
  out.upper = hi;
  out.t0 = f.t0 + g.t0;
  out.t1 = f.t1 + g.t1;
  out.shape.resize(n + 1);
  for (int a = 0; a < n; ++a) {
    const double h = (g.upper(a) - g.lower(a)) / g.shape[a];
    out.shape[a] = std::max(1, static_cast<int>(std::ceil((hi(a) - lo(a)) / h - 1e-9)));
    out.upper(a) = lo(a) + out.shape[a] * h;
  }
  const double dt = (g.t1 - g.t0) / g.shape.back();
  out.shape[n] = std::max(1, static_cast<int>(std::ceil((out.t1 - out.t0) / dt - 1e-9)));
  out.t1 = out.t0 + out.shape[n] * dt;
  return out;
}

GridSpec kernel_support(const KernelContext& ctx, const GridSpec& g, double t_end, double sigmas) {
  const int n = ctx.s.N();
  Vec lo = Vec::Constant(n, std::numeric_limits<double>::infinity());
  Vec hi = -lo;
  const double span = t_end - g.t0;
  if (!(span > 0.0)) throw Error(ErrorCode::IncompatibleGrids, "output horizon precedes the source");
  constexpr int kSamples = 33;
  const int corners = 1 << n;
  for (int k = 0; k < kSamples; ++k) {
    const double tau = span * k / (kSamples - 1);
    const Mat e = exp_neg_tB(ctx.s, tau);
    Vec spread = Vec::Zero(n);
    if (tau > 0.0) {
      const Mat c = covariance(ctx.s, tau);
      for (int a = 0; a < n; ++a) spread(a) = sigmas * std::sqrt(2.0 * c(a, a));
    }
    for (int c = 0; c < corners; ++c) {
      Vec y(n);
      for (int a = 0; a < n; ++a) y(a) = ((c >> a) & 1) ? g.upper(a) : g.lower(a);
      const Vec ey = e * y;
      lo = lo.cwiseMin(ey - spread);
      hi = hi.cwiseMax(ey + spread);
    }
  }
  GridSpec out;
  out.lower = lo;
  out.upper = hi;
  out.shape.resize(n + 1);
  for (int a = 0; a < n; ++a) {
    const double h = (g.upper(a) - g.lower(a)) / g.shape[a];
    out.shape[a] = std::max(1, static_cast<int>(std::ceil((hi(a) - lo(a)) / h - 1e-9)));
    out.upper(a) = lo(a) + out.shape[a] * h;
  }
  const double dt = (g.t1 - g.t0) / g.shape.back();
  const int nt = std::max(1, static_cast<int>(std::ceil(span / dt - 1e-9)));
  return with_time(out, g.t0, g.t0 + nt * dt, nt);
}

GridField left_translate(const GridField& f, const GroupElement& zeta, const StructureMatrix& s,
                         const GridSpec& out) {
  GridField result(out);
  const auto inv = group_inverse(zeta, s);
  const int nt = result.time_extent();
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < result.size(); ++i) {
    const GroupElement z{result.node_position(i), result.coord(s.N(), static_cast<int>(i % nt))};
    const auto w = group_op(inv, z, s);
    result[i] = f.sample(w.x, w.t);
  }
  return result;
}

YoungReport young_check(const GridField& f, const GridField& g, const StructureMatrix& s, double p, double q,
                        double r) {
  if (!(p >= 1.0 && q >= 1.0 && r >= 1.0) || std::abs(1.0 / p + 1.0 / q - 1.0 / r - 1.0) > 1e-12) {
    throw Error(ErrorCode::ExponentMismatch, "Young exponents must satisfy 1/p + 1/q = 1/r + 1");
  }
  YoungReport rep{p, q, r, 0.0, lp_norm(f, p), lp_norm(g, q), 0.0};
  if (rep.norm_f == 0.0 || rep.norm_g == 0.0) return rep;
  const auto out = convolution_support(f.spec(), g.spec(), s);
  rep.lhs = lp_norm(convolve(f, g, s, out), r);
  rep.ratio = rep.lhs / (rep.norm_f * rep.norm_g);
  return rep;
}

namespace {

double exponent_from_young(double q, double kernel_exponent) {
  const double inv_p = 1.0 / q + 1.0 / kernel_exponent - 1.0;
  if (!(inv_p > 0.0) || inv_p > 1.0) {
    throw Error(ErrorCode::ExponentOutOfRange, "resulting exponent p must satisfy 1 <= p < infinity");
  }
  return 1.0 / inv_p;
}

EmbeddingReport finish(double p, double q, double lhs, double sigma, double norm_u, double tol) {
  EmbeddingReport r;
  r.p = p;
  r.q = q;
  r.lhs = lhs;
  r.sigma = sigma;
  r.bound = sigma * norm_u;
  r.tolerance = tol;
  r.satisfied = lhs <= r.bound * (1.0 + tol);
  return r;
}

}  // namespace

EmbeddingReport embedding_l1(const GridField& u, double q, double eps0, const KernelContext& ctx,
                             const EmbeddingOptions& opts) {
  const double p0 = critical_exponent_K(ctx.s.Q());
  if (!(eps0 > 0.0 && eps0 <= p0 - 1.0 + 1e-15)) {
    throw Error(ErrorCode::ExponentOutOfRange, "eps0 must lie in (0, p0 - 1]");
  }
  if (!(q >= 1.0)) throw Error(ErrorCode::ExponentOutOfRange, "q must be >= 1");
  const double pk = p0 - eps0;
  const double p = exponent_from_young(q, pk);
  const double T = u.spec().t1;
  const double sigma = lp_norm_closed_form(ctx, pk, T).value;
  const double norm_u = lp_norm(u, q);
  if (norm_u == 0.0) return finish(p, q, 0.0, sigma, 0.0, opts.tolerance);
  const auto out = kernel_support(ctx, u.spec(), T, opts.support_sigmas);
  const double lhs = lp_norm(convolve(kernel_closure(ctx), u, out, opts.convolve), p);
  return finish(p, q, lhs, sigma, norm_u, opts.tolerance);
}

EmbeddingReport embedding_grad(const GridField& u, double q, double eps1, const KernelContext& ctx, int i,
                               const EmbeddingOptions& opts) {
  const double p1 = critical_exponent_gradK(ctx.s.Q());
  if (!(eps1 > 0.0 && eps1 <= p1 - 1.0 + 1e-15)) {
    throw Error(ErrorCode::ExponentOutOfRange, "eps1 must lie in (0, p1 - 1]");
  }
  if (i < 0 || i >= ctx.s.m0()) throw Error(ErrorCode::BadParameters, "gradient index must be < m0");
  if (!(q >= 1.0)) throw Error(ErrorCode::ExponentOutOfRange, "q must be >= 1");
  const double pk = p1 - eps1;
  const double p = exponent_from_young(q, pk);
  const double T = u.spec().t1;
  const double sigma = opts.sigma > 0.0 ? opts.sigma : lp_norm_grad_quadrature(ctx, i, pk, T).value;
  const double norm_u = lp_norm(u, q);
  if (norm_u == 0.0) return finish(p, q, 0.0, sigma, 0.0, opts.tolerance);
  const auto out = kernel_support(ctx, u.spec(), T, opts.support_sigmas);
  const double lhs = lp_norm(convolve(gradient_closure(ctx, i), u, out, opts.convolve), p);
  return finish(p, q, lhs, sigma, norm_u, opts.tolerance);
}

L2EmbeddingRatio embedding_l2_ratio(const GridField& u, double q, const KernelContext& ctx,
                                    const EmbeddingOptions& opts) {
  const double inv_p = 1.0 / q - 2.0 / (ctx.s.Q() + 2.0);
  if (!(q > 1.0) || !(inv_p > 0.0) || inv_p > 1.0) {
    throw Error(ErrorCode::ExponentOutOfRange, "need q > 1 and 1/q - 2/(Q+2) in (0, 1]");
  }
  L2EmbeddingRatio r;
  r.p = 1.0 / inv_p;
  r.q = q;
  r.norm_u = lp_norm(u, q);
  if (r.norm_u == 0.0) return r;
  const auto out = kernel_support(ctx, u.spec(), u.spec().t1, opts.support_sigmas);
  r.lhs = lp_norm(convolve(kernel_closure(ctx), u, out, opts.convolve), r.p);
  r.ratio = r.lhs / r.norm_u;
  return r;
}

GridField solve_cauchy(const KernelContext& ctx, const GridField& g, const std::vector<GridField>& f,
                       const GridSpec& out, const ConvolveOptions& opts) {
  if (static_cast<int>(f.size()) > ctx.s.m0()) {
    throw Error(ErrorCode::IncompatibleGrids, "at most m0 divergence sources");
  }
  for (const auto& fi : f) {
    if (!(fi.spec() == g.spec())) throw Error(ErrorCode::IncompatibleGrids, "sources must share one grid");
  }
  GridField u = convolve(kernel_closure(ctx), g, out, opts);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto term = convolve(source_gradient_closure(ctx, static_cast<int>(i)), f[i], out, opts);
    for (std::size_t k = 0; k < u.size(); ++k) u[k] += term[k];
  }
  return u;
}

double solve_cauchy_at(const KernelContext& ctx, const FunctionSource& g, const std::vector<FunctionSource>& f,
                       const Vec& x, double t, const ConvolveOptions& opts) {
  if (static_cast<int>(f.size()) > ctx.s.m0()) {
    throw Error(ErrorCode::IncompatibleGrids, "at most m0 divergence sources");
  }
  double u = convolve_at(kernel_closure(ctx), g, x, t, opts);
  for (std::size_t i = 0; i < f.size(); ++i) {
    u += convolve_at(source_gradient_closure(ctx, static_cast<int>(i)), f[i], x, t, opts);
  }
  return u;
}

}  // namespace kolmolab
