// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "instances.hpp"
#include "kolmolab/degiorgi.hpp"
#include "kolmolab/error.hpp"
#include "kolmolab/fd_solver.hpp"
#include "kolmolab/group_conv.hpp"
#include "kolmolab/kernel.hpp"
#include "kolmolab/lie_group.hpp"
#include "kolmolab/numerics.hpp"
#include "kolmolab/sde_oracle.hpp"

using namespace kolmolab;
using kolmolab::test::vec;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

const StructureMatrix& kinetic() {
  static const StructureMatrix s = validate_structure(test::kinetic_spec());
  return s;
}

const KernelContext& kinetic_ctx() {
  static const KernelContext ctx = kernel_context(kinetic());
  return ctx;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), std::numeric_limits<double>::min()); }

ProductDomain unit_kinetic_domain(double T) {
  return {Vec::Constant(1, -1.0), Vec::Constant(1, 1.0), Vec::Constant(1, -1.0), Vec::Constant(1, 1.0), T};
}

void c1_exponent_table(Verdict& v) {
  const ExponentTable t = exponent_table(kinetic().Q());
  v.require(t.Q == 4, "Q");
  v.require(t.p0 == make_rational(3, 2) && t.p1 == make_rational(6, 5) && t.q0 == make_rational(3, 1), "kinetic table");
  v.detail << "kinetic Q=" << t.Q << " p0=" << t.p0.str() << " p1=" << t.p1.str() << " q0=" << t.q0.str() << "; ";
  for (int n = 1; n <= 6; ++n) {
    const StructureMatrix s = validate_structure(test::parabolic_spec(n));
    const ExponentTable p = exponent_table(s.Q());
    v.require(s.Q() == n && p.q0 == make_rational(n + 2, 2), "parabolic N=" + std::to_string(n));
  }
  v.detail << "parabolic Q=N and q0=(N+2)/2 for N=1..6";
}

void c2_kernel_mass(Verdict& v) {
  double worst = 0.0;
  for (double t : {0.1, 1.0, 10.0}) worst = std::max(worst, std::abs(kernel_mass(kinetic_ctx(), t) - 1.0));
  v.require(worst <= 1e-6, "mass");
  v.detail << "max |mass-1| = " << worst;
}

void c3_scaling(Verdict& v) {
  const auto& ctx = kinetic_ctx();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ux(-2.0, 2.0), ut(0.1, 2.0), ur(0.25, 4.0);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const Vec x = vec({ux(rng), ux(rng)});
    const double t = ut(rng), r = ur(rng);
    const double lhs = eval_K(ctx, dilation(kinetic(), r) * x, r * r * t);
    const double rhs = std::pow(r, -kinetic().Q()) * eval_K(ctx, x, t);
    if (rhs > 0.0) worst = std::max(worst, rel(lhs, rhs));
  }
  v.require(worst <= 1e-12, "scaling");
  v.detail << "max rel err over 1000 points = " << worst;
}

void c4_norms(Verdict& v) {
  const auto& ctx = kinetic_ctx();
  double worst = 0.0;
  for (double p : {1.0, 1.2, 1.4}) {
    const LpReport c = lp_norm_closed_form(ctx, p, 1.0);
    const LpReport q = lp_norm_quadrature(ctx, p, 1.0);
    v.require(!c.divergent && !q.divergent, "finite at p=" + std::to_string(p));
    worst = std::max(worst, rel(q.value, c.value));
  }
  v.require(worst <= 1e-3, "closed form vs quadrature");
  v.detail << "max rel err p in {1,1.2,1.4} = " << worst << "; ";
  v.require(lp_norm_closed_form(ctx, 1.5, 1.0).divergent, "divergence flag at p=1.5");
  std::vector<double> probes;
  for (double tm : {1e-2, 1e-3, 1e-4}) {
    QuadratureSpec qs;
    qs.t_min = tm;
    probes.push_back(lp_norm_quadrature(ctx, 1.5, 1.0, qs).value);
  }
  v.require(probes[0] < probes[1] && probes[1] < probes[2], "monotone growth as t_min shrinks");
  v.detail << "p=1.5 flagged, probes " << probes[0] << " < " << probes[1] << " < " << probes[2];
}

void c5_chapman_kolmogorov(Verdict& v) {
  const auto& ctx = kinetic_ctx();
  const double t = 0.5, s = 0.5;
  // K(., s) is the law of the process started at the origin; integrate against it with a tensor rule.
  const Moments law = transition_moments(ctx, Vec::Zero(2), s);
  const Mat L = law.cov.llt().matrixL();
  const QuadratureRule gh = gauss_hermite_normal(40);
  const SampleBatch pts = exact_sample(ctx, Vec::Zero(2), t + s, 20, 5);
  double worst = 0.0;
  for (const Vec& x : pts.points) {
    double sum = 0.0;
    for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
      for (std::size_t j = 0; j < gh.nodes.size(); ++j) {
        const Vec y = law.mean + L * vec({gh.nodes[i], gh.nodes[j]});
        sum += gh.weights[i] * gh.weights[j] * eval_K_two_point(ctx, {x, t + s}, {y, s});
      }
    }
    worst = std::max(worst, rel(sum, eval_K(ctx, x, t + s)));
  }
  v.require(worst <= 1e-3, "Chapman-Kolmogorov");
  v.detail << "max rel err over 20 points = " << worst;
}

void c6_gradient(Verdict& v) {
  const auto& ctx = kinetic_ctx();
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> ux(-1.5, 1.5), ut(0.2, 2.0);
  double identity = 0.0, fd = 0.0;
  for (int k = 0; k < 100;) {
    const Vec x = vec({ux(rng), ux(rng)});
    const double t = ut(rng);
    const double K = eval_K(ctx, x, t);
    if (K == 0.0) continue;
    ++k;
    const Vec g = grad_K(ctx, x, t);
    const Vec F = grad_K_factor(ctx, x, t);
    for (int i = 0; i < g.size(); ++i) {
      identity = std::max(identity, std::abs(std::abs(g(i)) * std::sqrt(t) / K - 0.5 * std::abs(F(i))) /
                                        std::max(1.0, 0.5 * std::abs(F(i))));
      const double h = 1e-5;
      const Vec e = Vec::Unit(2, i) * h;
      const double d = (eval_K(ctx, x + e, t) - eval_K(ctx, x - e, t)) / (2 * h);
      fd = std::max(fd, std::abs(d - g(i)) / g.norm());
    }
  }
  v.require(identity <= 1e-12, "factor identity");
  v.require(fd <= 1e-6, "finite differences");
  v.detail << "factor identity err = " << identity << ", FD rel err = " << fd;
}

void c7_monte_carlo(Verdict& v) {
  const auto& ctx = kinetic_ctx();
  const Vec start = vec({0.5, -0.25});
  const std::size_t n = 100000;
  const SampleBatch batch = exact_sample(ctx, start, 1.0, n, 2024);
  const Moments emp = empirical_moments(batch);
  const Moments ref = transition_moments(ctx, start, 1.0);
  double worst_z = 0.0;
  for (int a = 0; a < 2; ++a) {
    worst_z = std::max(worst_z, std::abs(emp.mean(a) - ref.mean(a)) / std::sqrt(ref.cov(a, a) / n));
    for (int b = a; b < 2; ++b) {
      const double se = std::sqrt((ref.cov(a, a) * ref.cov(b, b) + ref.cov(a, b) * ref.cov(a, b)) / n);
      worst_z = std::max(worst_z, std::abs(emp.cov(a, b) - ref.cov(a, b)) / se);
    }
  }
  v.require(worst_z <= 3.0, "moments within 3 SE");
  const DensityReport d = density_error(batch, ctx);
  v.require(d.ks_pass, "KS 95%");
  const SampleBatch wrong = sample_gaussian(ref.mean, Mat::Identity(2, 2), 1.0, n, 2024);
  const DensityReport dw = density_error(wrong, ctx);
  v.require(!dw.ks_pass, "negative control rejected");

  const StructureMatrix chain = validate_structure(test::chain3_spec());
  const Vec s3 = vec({1, 0, 0});
  const Vec exact = exp_neg_tB(chain, 1.0) * s3;
  auto bias = [&](int steps) {
    return (empirical_moments(euler_maruyama(chain, s3, 1.0, steps, n, 2024)).mean - exact).norm();
  };
  const double ratio = bias(8) / bias(16);
  v.require(ratio >= 1.7 && ratio <= 2.3, "Euler-Maruyama bias ratio");
  v.detail << "max z = " << worst_z << ", KS " << d.ks[0] << "/" << d.ks[1] << " crit " << d.ks_critical
           << ", control KS " << dw.ks[0] << "/" << dw.ks[1] << ", EM bias ratio " << ratio;
}

void c8_young(Verdict& v) {
  const GridSpec sp{Vec::Constant(2, -1.0), Vec::Constant(2, 1.0), 0.0, 1.0, {12, 12, 12}};
  const double triples[3][3] = {{1.0, 2.0, 2.0}, {2.0, 1.0, 2.0}, {1.5, 1.5, 3.0}};
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const auto& tr = triples[k % 3];
    const GridField f = random_bump_field(sp, 3, substream_seed(8, 2 * k));
    const GridField g = random_bump_field(sp, 3, substream_seed(8, 2 * k + 1));
    worst = std::max(worst, young_check(f, g, kinetic(), tr[0], tr[1], tr[2]).ratio);
  }
  v.require(worst <= 1.05, "Young ratio");
  v.detail << "max ratio over 100 pairs = " << worst;
}

void c9_embeddings(Verdict& v) {
  const auto& ctx = kinetic_ctx();
  const GridSpec box{Vec::Constant(2, -1.0), Vec::Constant(2, 1.0), 0.0, 1.0, {10, 10, 8}};
  auto worst_ratio = [&](auto&& check) {
    double worst = 0.0;
    bool all = true;
    for (int k = 0; k < 50; ++k) {
      const EmbeddingReport r = check(random_bump_field(box, 3, substream_seed(9, k)));
      all = all && r.satisfied;
      worst = std::max(worst, r.lhs / r.bound);
    }
    return std::pair{all, worst};
  };
  for (double q : {1.0, 2.0}) {
    const auto [ok, w] = worst_ratio([&](const GridField& u) { return embedding_l1(u, q, 0.25, ctx); });
    v.require(ok, "L1 embedding q=" + std::to_string(q));
    v.detail << "l1 q=" << q << " max lhs/bound " << w << "; ";
  }
  EmbeddingOptions opts;
  opts.sigma = lp_norm_grad_quadrature(ctx, 0, critical_exponent_gradK(kinetic().Q()) - 0.05, 1.0).value;
  const auto [ok, w] = worst_ratio([&](const GridField& u) { return embedding_grad(u, 2.0, 0.05, ctx, 0, opts); });
  v.require(ok, "gradient embedding");
  v.detail << "grad q=2 max lhs/bound " << w;
}

void c10_cauchy_residual(Verdict& v) {
  const auto& ctx = kinetic_ctx();
  auto gf = [](const Vec& x, double t) { return std::exp(-x.squaredNorm() / 8.0) * std::sin(3 * t) * (1 + 0.3 * x(0)); };
  auto ff = [](const Vec& x, double t) { return std::exp(-x.squaredNorm() / 8.0) * (1 + t) * std::cos(x(1)); };
  const FunctionSource g{gf, 0.0, 2.0}, f{ff, 0.0, 2.0};
  const ConvolveOptions o{16, 16, 4};
  const Vec x = vec({0.3, -0.2});
  const double t = 0.5;
  auto u = [&](const Vec& y, double tt) { return solve_cauchy_at(ctx, g, {f}, y, tt, o); };
  std::vector<double> hs, res;
  for (double h : {0.2, 0.1, 0.05}) {
    const Vec e1 = Vec::Unit(2, 0) * h, e2 = Vec::Unit(2, 1) * h;
    const double ut = (u(x, t + h) - u(x, t - h)) / (2 * h);
    const double u2 = (u(x + e2, t) - u(x - e2, t)) / (2 * h);
    const double u11 = (u(x + e1, t) - 2 * u(x, t) + u(x - e1, t)) / (h * h);
    const double df = (ff(x + e1, t) - ff(x - e1, t)) / (2 * h);
    hs.push_back(h);
    res.push_back(std::abs(ut - x(0) * u2 - u11 - gf(x, t) - df));
  }
  const double order = refinement_order(hs, res).order;
  v.require(order >= 1.8, "residual order");
  v.detail << "residuals " << res[0] << ", " << res[1] << ", " << res[2] << "; order " << order;
}

void c11_max_principle(Verdict& v) {
  const auto& s = kinetic();
  const ProductDomain dom = unit_kinetic_domain(0.5);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const double w1 = 1 + 3 * U(rng), w2 = 1 + 3 * U(rng), ph = 6 * U(rng), amp = 0.9 * U(rng);
    const double b = 4 * U(rng) - 2, d = -U(rng);
    CoefficientSet co = identity_coefficients(1);
    co.a = {[=](const Vec& x, double) {
      return std::sin(w1 * std::numbers::pi * x(0)) * std::sin(w2 * std::numbers::pi * x(1)) > 0 ? 1.0 : 0.3;
    }};
    co.b = {[=](const Vec&, double) { return b; }};
    co.d = [=](const Vec&, double) { return d; };
    co.lambda = 0.3;
    co.steady_operator = true;
    const ScalarField data = [=](const Vec& x, double t) { return amp * std::sin(ph + 3 * x(0) + 2 * x(1) + t); };
    FdGrid grid;
    grid.cells = {12 + 4 * trial, 12 + 4 * trial};
    const SolveResult r = solve(dom, s, co, BoundaryData{data, data}, grid);
    worst = std::max(worst, check_max_principle(r, co).excess);
  }
  v.require(worst <= 1e-12, "core scheme excess");
  v.detail << "core max excess over 10 configs = " << worst << "; ";

  std::vector<double> hs, excess;
  for (int n : {8, 16, 32, 64}) {
    CoefficientSet co = identity_coefficients(1);
    co.b = {[](const Vec&, double) { return 30.0; }};
    co.c = {[](const Vec& x, double) { return 10.0 * std::cos(2 * x(1)); }};
    co.d = [](const Vec&, double) { return -0.5; };
    const ScalarField data = [](const Vec& x, double t) {
      return std::min(1.0, std::max(-1.0, 4 * x(0))) * std::cos(x(1)) * (1 - t);
    };
    FdGrid grid;
    grid.cells = {n, n};
    const SolveResult r = solve(dom, s, co, BoundaryData{data, data}, grid);
    const MaxPrincipleReport mp = check_max_principle(r, co);
    hs.push_back(*std::max_element(r.h.begin(), r.h.end()));
    excess.push_back(mp.excess);
  }
  const OrderEstimate o = refinement_order(hs, excess);
  v.require(o.exact || o.order >= 0.8, "excess convergence order");
  v.detail << "drift-dominated excess " << excess[0] << " -> " << excess.back() << ", order " << o.order;
}

void c12_manufactured(Verdict& v) {
  const double pi = std::numbers::pi;
  const ScalarField exact = [pi](const Vec& x, double t) { return std::sin(pi * x(0)) * (1 + x(1)) * std::exp(-t); };
  auto study = [&](const StructureMatrix& s, const ProductDomain& dom, bool parabolic) {
    CoefficientSet co = identity_coefficients(s.m0());
    const CoefficientSet op = co;
    co.g = [&s, op, exact](const Vec& x, double t) { return apply_kolmogorov(s, op, exact, x, t); };
    std::vector<double> hs, errs;
    for (int n : {8, 16, 32, 64}) {
      FdGrid grid;
      grid.cells = {n, n};
      const double h = 2.0 / n;
      if (parabolic) grid.dt = 0.25 * h * h;
      const SolveResult r = solve(dom, s, co, BoundaryData{exact, exact}, grid);
      double err = 0.0;
      for (std::size_t k = 0; k < r.u.size(); ++k) {
        err = std::max(err, std::abs(r.u[k] - exact(r.u.node_position(k), r.u.node_time(k))));
      }
      hs.push_back(h);
      errs.push_back(err);
    }
    return refinement_order(hs, errs).order;
  };
  const double kin = study(kinetic(), unit_kinetic_domain(0.5), false);
  const StructureMatrix heat = validate_structure(test::parabolic_spec(2));
  const ProductDomain hdom{Vec::Constant(2, -1.0), Vec::Constant(2, 1.0), Vec(0), Vec(0), 0.5};
  const double par = study(heat, hdom, true);
  v.require(kin >= 1.0, "kinetic order");
  v.require(par >= 1.8, "parabolic order");
  v.detail << "kinetic order " << kin << ", parabolic order " << par;
}

void c13_truncation(Verdict& v) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> uk(0.0, 5.0), uw(0.01, 4.0), ur(-2.0, 12.0);
  std::size_t samples = 0, failures = 0;
  double deriv = 0.0;
  bool passed = true;
  for (int trial = 0; trial < 100; ++trial) {
    TruncationParams p{uk(rng), 0.0};
    p.l = p.k + uw(rng);
    std::vector<double> r(100);
    for (auto& x : r) x = ur(rng);
    const TruncationSuiteReport rep = truncation_inequality_suite(p, r);
    samples += rep.samples;
    failures += rep.psi_squared_failures + rep.u_psi_failures + rep.u_psi_prime_failures + rep.convexity_failures;
    deriv = std::max(deriv, rep.max_derivative_error);
    passed = passed && rep.passed;
  }
  v.require(passed && failures == 0, "inequalities");
  v.require(deriv <= 1e-6, "derivative");
  v.detail << samples << " triples, " << failures << " failures, max |Phi'-Psi| = " << deriv;
}

void c14_exponent_algebra(Verdict& v) {
  double worst = 0.0;
  int count = 0;
  for (int Q : {2, 4, 5, 9}) {
    const double p0 = (Q + 2.0) / Q;
    for (int i = 1; i < 50; ++i) {
      const ExponentBundle b = solve_exponents(Q, (p0 - 1.0) * i / 50.0);
      worst = std::max({worst, b.coupling1_residual, b.coupling2_residual});
      ++count;
    }
  }
  v.require(worst <= 1e-12, "coupling residuals");
  const BootstrapSchedule sched = bootstrap_exponents(4, 4.0);
  v.require(sched.rho == std::vector<double>{2.0, 2.4, 3.0} && sched.tau == 2, "bootstrap schedule");
  v.detail << count << " bundles, max residual " << worst << "; bootstrap Q=4 q~=4: [";
  for (std::size_t i = 0; i < sched.rho.size(); ++i) v.detail << (i ? ", " : "") << sched.rho[i];
  v.detail << "] tau=" << sched.tau;
}

void c15_iteration_lemma(Verdict& v) {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> uc(0.1, 10.0), ub(1.2, 5.0), ua(0.2, 3.0), uy(0.0, 1.0);
  double worst = 0.0;
  bool all = true;
  for (int k = 0; k < 1000; ++k) {
    const double C = uc(rng), b = ub(rng), alpha = ua(rng);
    const double y0 = uy(rng) * std::pow(C, -1.0 / alpha) * std::pow(b, -1.0 / (alpha * alpha));
    const IterationLemmaResult r = iteration_lemma(C, b, alpha, y0, 200);
    all = all && r.criterion;
    worst = std::max(worst, r.trajectory.back());
  }
  v.require(all, "criterion holds on draws");
  v.require(worst < 1e-10, "Y_200");
  const IterationLemmaResult w = iteration_lemma(1.0, 2.0, 1.0, 0.5, 10);
  bool halving = true;
  for (int n = 0; n <= 10; ++n) halving = halving && std::abs(w.trajectory[n] - std::pow(0.5, n + 1)) <= 1e-15;
  v.require(halving, "worked example");
  v.detail << "max Y_200 over 1000 draws = " << worst << "; worked example 0.5, 0.25, 0.125, ...";
}

void c16_level_iteration(Verdict& v) {
  const auto& s = kinetic();
  const ProductDomain dom = unit_kinetic_domain(0.5);
  const ExponentBundle bundle = solve_exponents(s.Q(), 0.25);
  std::mt19937_64 rng(16);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double tightest = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 10; ++trial) {
    const double w1 = 2 + 4 * U(rng), w2 = 2 + 4 * U(rng), amp = 0.5 * U(rng), src = 2 + 6 * U(rng);
    const double cx = U(rng) - 0.5, cy = U(rng) - 0.5;
    CoefficientSet co = identity_coefficients(1);
    co.a = {[=](const Vec& x, double) {
      return std::sin(w1 * std::numbers::pi * x(0)) * std::sin(w2 * std::numbers::pi * x(1)) > 0 ? 1.0 : 0.2;
    }};
    co.lambda = 0.2;
    co.steady_operator = true;
    co.g = [=](const Vec& x, double) {
      return src * std::exp(-8 * ((x(0) - cx) * (x(0) - cx) + (x(1) - cy) * (x(1) - cy)));
    };
    const ScalarField data = [=](const Vec& x, double t) { return amp * std::cos(2 * x(0) + x(1) + t); };
    FdGrid grid;
    grid.cells = {24, 24};
    const SolveResult r = solve(dom, s, co, BoundaryData{data, data}, grid);
    LevelIterationOptions opts;
    opts.boundary_nodes = data_entries(r);
    const LevelIterationResult li = run_level_iteration(r.u, r.M, bundle, opts);
    v.require(li.bound >= li.measured_sup, "soundness on trial " + std::to_string(trial));
    tightest = std::min(tightest, li.bound - li.measured_sup);
  }
  v.detail << "min (bound - measured sup) over 10 solves = " << tightest << "; ";

  const double M = 2.0, H = 5.0;
  GridSpec sp{Vec::Zero(2), Vec::Ones(2), 0.0, 1.0, {10, 10, 10}};
  GridField u(sp, std::vector<double>(1000, M));
  const std::vector<int> centre{5, 5, 5};
  u[u.flat_index(centre)] = M + H;
  const double bound = run_level_iteration(u, M, bundle).bound;
  v.require(bound >= M + H && bound <= M + 2 * H, "spike bracket");
  v.detail << "spike bound " << bound << " in [" << M + H << ", " << M + 2 * H << "]";
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void(Verdict&)>>> criteria = {
      {"exponent table", c1_exponent_table},
      {"kernel normalization", c2_kernel_mass},
      {"anisotropic scaling", c3_scaling},
      {"kernel Lp norms", c4_norms},
      {"Chapman-Kolmogorov", c5_chapman_kolmogorov},
      {"gradient identity", c6_gradient},
      {"Monte Carlo oracle", c7_monte_carlo},
      {"Young inequality", c8_young},
      {"L1-Lp embeddings", c9_embeddings},
      {"Cauchy residual order", c10_cauchy_residual},
      {"discrete maximum principle", c11_max_principle},
      {"manufactured convergence", c12_manufactured},
      {"truncation suite", c13_truncation},
      {"exponent algebra", c14_exponent_algebra},
      {"iteration lemma", c15_iteration_lemma},
      {"level-iteration soundness", c16_level_iteration},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(v);
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << "[exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += v.pass ? 0 : 1;
    std::printf("%s %zu: %s: %s (%.1fs)\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, v.detail.str().c_str(),
                secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
