#include "kolmolab/kernel.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "kolmolab/error.hpp"

namespace kolmolab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int default_spatial_order(int n) {
  switch (n) {
    case 1: return 64;
    case 2: return 56;
    case 3: return 40;
    case 4: return 16;
    case 5: return 8;
    default: return 6;
  }
}

// Tensor Gauss-Legendre integral over the box
//   x = delta_N(sqrt t) y,  |y_i| <= half_width_i,
// of integrand(x). Returns the integral in x (Jacobian t^{Q/2} included).
template <typename Integrand>
double box_integral(const KernelContext& ctx, double t, const Vec& half_width, int order,
                    Integrand&& integrand) {
  const int n = ctx.s.N();
  const auto base = gauss_legendre(order);
  const Vec scale = dilation_diagonal(ctx.s, std::sqrt(t));
  std::vector<int> idx(n, 0);
  Vec x(n);
  const std::size_t count = static_cast<std::size_t>(std::pow(order, n));
  std::vector<double> vals(count);
  for (std::size_t flat = 0; flat < count; ++flat) {
    double w = 1.0;
    for (int a = 0; a < n; ++a) {
      x(a) = scale(a) * half_width(a) * base.nodes[idx[a]];
      w *= half_width(a) * base.weights[idx[a]];
    }
    vals[flat] = w * integrand(x);
    for (int a = n - 1; a >= 0; --a) {
      if (++idx[a] < order) break;
      idx[a] = 0;
    }
  }
  const double total = pairwise_sum(vals);
  return total * std::pow(t, 0.5 * ctx.s.Q());
}

// Integral over x = delta_N(sqrt t) A eta, |eta_i| <= half_width, with the
// first eta axis split at zero (the integrand may have a kink there).
template <typename Integrand>
double mapped_integral(const KernelContext& ctx, double t, const Mat& A, double half_width, int order,
                       Integrand&& integrand) {
  const int n = ctx.s.N();
  const auto base = gauss_legendre(order);
  const auto half = gauss_legendre(order, 0.0, half_width);
  QuadratureRule first;
  for (std::size_t q = 0; q < half.nodes.size(); ++q) {
    first.nodes.push_back(-half.nodes[q]);
    first.weights.push_back(half.weights[q]);
    first.nodes.push_back(half.nodes[q]);
    first.weights.push_back(half.weights[q]);
  }
  const Vec scale = dilation_diagonal(ctx.s, std::sqrt(t));
  std::vector<int> extent(n, order);
  extent[0] = static_cast<int>(first.nodes.size());
  std::size_t count = 1;
  for (int e : extent) count *= static_cast<std::size_t>(e);
  std::vector<double> vals(count);
  std::vector<int> idx(n, 0);
  Vec eta(n);
  for (std::size_t flat = 0; flat < count; ++flat) {
    double w = first.weights[idx[0]];
    eta(0) = first.nodes[idx[0]];
    for (int a = 1; a < n; ++a) {
      eta(a) = half_width * base.nodes[idx[a]];
      w *= half_width * base.weights[idx[a]];
    }
    const Vec x = scale.asDiagonal() * (A * eta);
    vals[flat] = w * integrand(x);
    for (int a = n - 1; a >= 0; --a) {
      if (++idx[a] < extent[a]) break;
      idx[a] = 0;
    }
  }
  return pairwise_sum(vals) * std::abs(A.determinant()) * std::pow(t, 0.5 * ctx.s.Q());
}

// Box half-widths (rescaled coordinates) for the Gaussian exp(-p/4 <C1^{-1} y, y>),
// whose covariance is 2 C1 / p.
Vec truncation_box(const KernelContext& ctx, double p, double sigmas) {
  Vec h(ctx.s.N());
  for (int i = 0; i < ctx.s.N(); ++i) h(i) = sigmas * std::sqrt(2.0 * ctx.C1(i, i) / p);
  return h;
}

// slice(t, order) integrates the spatial integrand at time t with the given rule order.
template <typename Slice>
LpReport lp_quadrature_impl(const KernelContext& ctx, double p, double T, const QuadratureSpec& spec,
                            double time_exponent, bool divergent, Slice&& slice) {
  if (!(p >= 1.0)) throw Error(ErrorCode::ExponentOutOfRange, "L^p norm requires p >= 1");
  if (!(T > 0.0)) throw Error(ErrorCode::NonPositiveTime, "L^p norm requires T > 0");

  LpReport r;
  r.p = p;
  r.T = T;
  r.method = LpMethod::Quadrature;
  r.time_exponent = time_exponent;
  r.divergent = divergent;

  const int order = spec.spatial_order > 0 ? spec.spatial_order : default_spatial_order(ctx.s.N());
  if (divergent && !(spec.t_min > 0.0)) {
    r.value = kInf;
    r.error_estimate = kInf;
    return r;
  }

  // Spatial error of the rule in use, against a finer rule at the top of the interval.
  const double used_top = slice(T, order);
  const double fine_top = slice(T, order + std::max(4, order / 4));
  const double spatial_rel = fine_top != 0.0 ? std::abs(fine_top - used_top) / std::abs(fine_top) : 0.0;

  std::vector<double> panels;
  double hi = T;
  double tail = 0.0;
  double tail_change = kInf;
  bool reached_cutoff = false;
  for (int k = 0; k < spec.max_panels; ++k) {
    double lo = 0.5 * hi;
    if (spec.t_min > 0.0 && lo <= spec.t_min) {
      lo = spec.t_min;
      reached_cutoff = true;
    }
    const auto rule = gauss_legendre(spec.time_order, lo, hi);
    std::vector<double> vals(rule.nodes.size());
#pragma omp parallel for schedule(static)
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      vals[q] = rule.weights[q] * slice(rule.nodes[q], order);
    }
    panels.push_back(pairwise_sum(vals));
    hi = lo;
    if (reached_cutoff) {
      tail = 0.0;
      tail_change = 0.0;
      break;
    }
    if (panels.size() >= 3) {
      // Remaining panels [0, hi] extrapolated as a geometric series.
      const double c1 = panels[panels.size() - 1];
      const double c0 = panels[panels.size() - 2];
      const double ratio = c0 > 0.0 ? c1 / c0 : 0.0;
      if (ratio < 1.0) {
        const double next = c1 * ratio / (1.0 - ratio);
        tail_change = std::abs(next - tail);
        tail = next;
        double sum = 0.0;
        for (double v : panels) sum += v;
        if (panels.size() >= 4 && tail_change <= 0.1 * spec.tolerance * (sum + tail)) break;
      } else {
        tail = kInf;
      }
    }
  }
  // Sum smallest contributions first.
  double total = tail;
  for (auto it = panels.rbegin(); it != panels.rend(); ++it) total += *it;

  r.t_min = reached_cutoff ? spec.t_min : 0.0;
  r.error_estimate = tail_change + spatial_rel * total;
  if (!(r.error_estimate <= spec.tolerance * total)) {
    throw Error(ErrorCode::GridTooCoarse,
                "quadrature error estimate " + std::to_string(r.error_estimate) + " exceeds tolerance " +
                    std::to_string(spec.tolerance * total));
  }
  r.value = std::pow(total, 1.0 / p);
  return r;
}

}  // namespace

KernelContext kernel_context(const StructureMatrix& s) {
  KernelContext ctx{s, covariance(s, 1.0), {}, 0.0, 0.0, {}, {}};
  Eigen::LLT<Mat> llt(ctx.C1);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularCovariance, "C(1) is not positive definite");
  }
  const int n = s.N();
  ctx.C1_inv = llt.solve(Mat::Identity(n, n));
  ctx.C1_inv = 0.5 * (ctx.C1_inv + ctx.C1_inv.transpose()).eval();
  const auto& l = llt.matrixL();
  double det = 1.0;
  for (int i = 0; i < n; ++i) det *= l(i, i) * l(i, i);
  ctx.detC1 = det;
  if (!(det > 0.0) || !std::isfinite(det)) {
    throw Error(ErrorCode::SingularCovariance, "det C(1) is not positive");
  }
  ctx.CN = std::pow(4.0 * std::numbers::pi, -0.5 * n) / std::sqrt(det);

  Eigen::SelfAdjointEigenSolver<Mat> eig(2.0 * ctx.C1);
  const Vec lambda = eig.eigenvalues();
  if (!(lambda.minCoeff() > 0.0)) {
    throw Error(ErrorCode::SingularCovariance, "2C(1) has a non-positive eigenvalue");
  }
  const Mat& v = eig.eigenvectors();
  ctx.L1 = v * lambda.cwiseSqrt().asDiagonal() * v.transpose();
  ctx.L1_inv_T = v * lambda.cwiseSqrt().cwiseInverse().asDiagonal() * v.transpose();
  return ctx;
}

double eval_K(const KernelContext& ctx, const Vec& x, double t) {
  if (!(t > 0.0)) return 0.0;
  const int n = ctx.s.N();
  const double rt = 1.0 / std::sqrt(t);
  Vec y(n);
  for (int i = 0; i < n; ++i) y(i) = std::pow(rt, ctx.s.weight(i)) * x(i);
  const double q = y.dot(ctx.C1_inv * y);
  if (!(q < kQuadraticFormCutoff)) return 0.0;
  return ctx.CN * std::pow(t, -0.5 * ctx.s.Q()) * std::exp(-0.25 * q);
}

double eval_K_two_point(const KernelContext& ctx, const GroupElement& z, const GroupElement& zeta) {
  const auto w = group_op(group_inverse(zeta, ctx.s), z, ctx.s);
  return eval_K(ctx, w.x, w.t);
}

Vec grad_K_factor(const KernelContext& ctx, const Vec& x, double t) {
  if (!(t > 0.0)) throw Error(ErrorCode::NonPositiveTime, "grad_K requires t > 0");
  const int n = ctx.s.N();
  const double rt = 1.0 / std::sqrt(t);
  Vec y(n);
  for (int i = 0; i < n; ++i) y(i) = std::pow(rt, ctx.s.weight(i)) * x(i);
  const Vec cy = ctx.C1_inv * y;
  return cy.head(ctx.s.m0());
}

Vec grad_K(const KernelContext& ctx, const Vec& x, double t) {
  const Vec factor = grad_K_factor(ctx, x, t);
  const double k = eval_K(ctx, x, t);
  // D_i acts on x_i with dilation weight t^{-1/2} (i < m0).
  return (-0.5 * k / std::sqrt(t)) * factor;
}

std::string_view to_string(LpMethod m) noexcept {
  return m == LpMethod::ClosedForm ? "closed_form" : "quadrature";
}

double critical_exponent_K(int Q) { return static_cast<double>(Q + 2) / Q; }
double critical_exponent_gradK(int Q) { return static_cast<double>(Q + 2) / (Q + 1); }

LpReport lp_norm_closed_form(const KernelContext& ctx, double p, double T) {
  if (!(p >= 1.0)) throw Error(ErrorCode::ExponentOutOfRange, "L^p norm requires p >= 1");
  if (!(T > 0.0)) throw Error(ErrorCode::NonPositiveTime, "L^p norm requires T > 0");
  const int n = ctx.s.N();
  const double q = ctx.s.Q();
  LpReport r;
  r.p = p;
  r.T = T;
  r.method = LpMethod::ClosedForm;
  r.time_exponent = -0.5 * q * p + 0.5 * q;
  r.divergent = !(p < critical_exponent_K(ctx.s.Q()));
  if (r.divergent) {
    r.value = kInf;
    return r;
  }
  const double gaussian = std::pow(4.0 * std::numbers::pi / p, 0.5 * n) * std::sqrt(ctx.detC1);
  const double e1 = 1.0 + r.time_exponent;
  const double integral = std::pow(ctx.CN, p) * gaussian * std::pow(T, e1) / e1;
  r.value = std::pow(integral, 1.0 / p);
  return r;
}

LpReport lp_norm_quadrature(const KernelContext& ctx, double p, double T, const QuadratureSpec& spec) {
  const double q = ctx.s.Q();
  const double e = -0.5 * q * p + 0.5 * q;
  const bool divergent = !(p < critical_exponent_K(ctx.s.Q()));
  const Vec box = truncation_box(ctx, p, spec.box_sigmas);
  return lp_quadrature_impl(ctx, p, T, spec, e, divergent, [&](double t, int order) {
    return box_integral(ctx, t, box, order, [&](const Vec& x) {
      const double k = eval_K(ctx, x, t);
      return p == 1.0 ? k : std::pow(k, p);
    });
  });
}

LpReport lp_norm_grad_quadrature(const KernelContext& ctx, int i, double p, double T,
                                 const QuadratureSpec& spec) {
  if (i < 0 || i >= ctx.s.m0()) {
    throw Error(ErrorCode::BadParameters, "gradient index must be < m0");
  }
  const double q = ctx.s.Q();
  const double e = -0.5 * q * p - 0.5 * p + 0.5 * q;
  const bool divergent = !(p < critical_exponent_gradK(ctx.s.Q()));
  // Whitened coordinates y = L1 R eta / sqrt(p): the weight becomes exp(-|eta|^2 / 2) and
  // R turns eta_0 into the direction of (C(1)^{-1} y)_i, whose zero set is the kink of |D_i K|^p.
  const int n = ctx.s.N();
  const Vec v = ctx.L1_inv_T.row(i).transpose();
  Mat basis = Mat::Identity(n, n);
  basis.col(0) = v.normalized();
  // The Householder Q is orthogonal with first column parallel to v.
  Eigen::HouseholderQR<Mat> qr(basis);
  Mat R = qr.householderQ() * Mat::Identity(n, n);
  if (R.col(0).dot(v) < 0.0) R.col(0) = -R.col(0);
  const Mat A = ctx.L1 * R / std::sqrt(p);
  return lp_quadrature_impl(ctx, p, T, spec, e, divergent, [&](double t, int order) {
    return mapped_integral(ctx, t, A, spec.box_sigmas, order,
                           [&](const Vec& x) { return std::pow(std::abs(grad_K(ctx, x, t)(i)), p); });
  });
}

double kernel_mass(const KernelContext& ctx, double t, const QuadratureSpec& spec) {
  if (!(t > 0.0)) throw Error(ErrorCode::NonPositiveTime, "kernel mass requires t > 0");
  const int order = spec.spatial_order > 0 ? spec.spatial_order : default_spatial_order(ctx.s.N());
  const Vec box = truncation_box(ctx, 1.0, spec.box_sigmas);
  return box_integral(ctx, t, box, order, [&](const Vec& x) { return eval_K(ctx, x, t); });
}

}  // namespace kolmolab
