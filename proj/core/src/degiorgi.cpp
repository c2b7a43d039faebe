#include "kolmolab/degiorgi.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <utility>

#include "kolmolab/error.hpp"
#include "kolmolab/fd_solver.hpp"

namespace kolmolab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check(const TruncationParams& p) {
  if (!(p.l > p.k)) throw Error(ErrorCode::InvalidTruncation, "truncation cap l must exceed the level k");
}

bool leq(double lhs, double rhs) { return lhs <= rhs + 1e-12 * std::max({1.0, std::abs(lhs), std::abs(rhs)}); }

GridField time_slab(const GridField& u, int j0, int j1) {
  GridSpec spec = u.spec();
  const double dt = u.spacing(u.dim());
  spec.t0 = u.spec().t0 + j0 * dt;
  spec.t1 = u.spec().t0 + j1 * dt;
  spec.shape.back() = j1 - j0;
  GridField out(spec);
  const int nt = u.time_extent();
  const int ns = j1 - j0;
  const std::size_t nodes = u.size() / static_cast<std::size_t>(nt);
  for (std::size_t p = 0; p < nodes; ++p) {
    for (int j = 0; j < ns; ++j) out[p * ns + j] = u[p * nt + j0 + j];
  }
  return out;
}

double energy(const GridField& u, double k) {
  const double e = undercut_energy(u, k);
  return e * e;
}

}  // namespace

double psi(const TruncationParams& p, double r) {
  check(p);
  if (r <= p.k) return 0.0;
  if (r < p.l) return 2.0 * (r - p.k);
  return 2.0 * (p.l - p.k);
}

double phi(const TruncationParams& p, double r) {
  check(p);
  if (r <= p.k) return 0.0;
  if (r < p.l) return (r - p.k) * (r - p.k);
  return (p.l - p.k) * (2.0 * (r - p.k) - (p.l - p.k));
}

double psi_prime(const TruncationParams& p, double r) {
  check(p);
  return (r > p.k && r < p.l) ? 2.0 : 0.0;
}

TruncationSuiteReport truncation_inequality_suite(const TruncationParams& p, std::span<const double> samples) {
  check(p);
  TruncationSuiteReport rep;
  rep.samples = samples.size();
  for (double r : samples) {
    const double s = psi(p, r);
    const double f = phi(p, r);
    if (!leq(s * s, 4.0 * f)) ++rep.psi_squared_failures;
    if (!leq(r * s, 2.0 * f + p.k * s)) ++rep.u_psi_failures;
    if (!leq(r * psi_prime(p, r), s + 2.0 * p.k)) ++rep.u_psi_prime_failures;
    const double h = 1e-4 * std::max(1.0, p.l - p.k);
    if (std::abs(r - p.k) > 2.0 * h && std::abs(r - p.l) > 2.0 * h) {
      const double fd = (phi(p, r + h) - phi(p, r - h)) / (2.0 * h);
      rep.max_derivative_error = std::max(rep.max_derivative_error, std::abs(fd - s) / std::max(1.0, std::abs(s)));
    }
  }
  std::vector<double> r(samples.begin(), samples.end());
  std::sort(r.begin(), r.end());
  r.erase(std::unique(r.begin(), r.end()), r.end());
  for (std::size_t i = 1; i + 1 < r.size(); ++i) {
    // Phi lies below its chords.
    const double w = (r[i] - r[i - 1]) / (r[i + 1] - r[i - 1]);
    const double chord = (1.0 - w) * phi(p, r[i - 1]) + w * phi(p, r[i + 1]);
    if (!leq(phi(p, r[i]), chord)) ++rep.convexity_failures;
  }
  rep.passed = rep.psi_squared_failures == 0 && rep.u_psi_failures == 0 && rep.u_psi_prime_failures == 0 &&
               rep.convexity_failures == 0 && rep.max_derivative_error <= 1e-6;
  return rep;
}

std::string Rational::str() const {
  return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
}

Rational make_rational(std::int64_t num, std::int64_t den) {
  if (den == 0) throw Error(ErrorCode::BadParameters, "zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num, den);
  return {num / g, den / g};
}

ExponentTable exponent_table(int Q) {
  if (Q < 1) throw Error(ErrorCode::BadParameters, "homogeneous dimension must be positive");
  return {Q, make_rational(Q + 2, Q), make_rational(Q + 2, Q + 1), make_rational(Q + 2, 2)};
}

ExponentBundle solve_exponents(int Q, double eps0, double theta) {
  if (Q < 1) throw Error(ErrorCode::BadParameters, "homogeneous dimension must be positive");
  ExponentBundle e;
  e.Q = Q;
  e.p0 = (Q + 2.0) / Q;
  e.q0 = (Q + 2.0) / 2.0;
  e.p1 = (Q + 2.0) / (Q + 1.0);
  if (!(eps0 > 0.0) || eps0 > e.p0 - 1.0) throw Error(ErrorCode::Eps0OutOfRange, "eps0 must lie in (0, p0 - 1]");
  if (!(theta > 0.0 && theta < 1.0)) throw Error(ErrorCode::InvalidQPrime, "theta must lie in (0, 1)");
  e.eps0 = eps0;
  e.theta = theta;
  e.p0_hat = e.p0 - eps0;
  e.p1_hat = 2.0 * e.p0_hat / (1.0 + e.p0_hat);
  e.eps1 = e.p1 - e.p1_hat;
  e.coupling1_residual = std::abs(1.0 / e.p0_hat - (2.0 / e.p1_hat - 1.0));
  e.coupling2_residual = std::abs(e.p1_hat * 2.0 / (2.0 - e.p1_hat) - 2.0 * e.p0_hat);
  e.q_prime = (1.0 - theta) + theta * e.p0_hat;
  const double den = (2.0 * e.p0_hat - 1.0) * 2.0 * e.q_prime - 2.0 * e.p0_hat;
  e.q_dprime = den > 0.0 ? 2.0 * e.p0_hat * 2.0 * e.q_prime / den : -1.0;
  e.alpha = 1.0 / e.q_prime - 1.0 / e.p0_hat;
  if (e.coupling1_residual > 1e-12 || e.coupling2_residual > 1e-12) {
    throw Error(ErrorCode::InvalidQPrime, "exponent couplings are violated");
  }
  if (!(e.q_prime > 1.0 && e.q_prime < e.p0_hat) || !(e.q_dprime > 0.0)) {
    throw Error(ErrorCode::InvalidQPrime, "need 1 < q' < p0_hat and q'' > 0");
  }
  return e;
}

namespace {

// x = num/den exactly with den <= 1e6, found by continued fractions.
std::optional<std::pair<std::int64_t, std::int64_t>> short_rational(double x) {
  if (!std::isfinite(x) || std::abs(x) > 1e12) return std::nullopt;
  std::int64_t h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double r = x;
  for (int i = 0; i < 40; ++i) {
    const double a = std::floor(r);
    const auto ai = static_cast<std::int64_t>(a);
    const std::int64_t h2 = ai * h1 + h0;
    const std::int64_t k2 = ai * k1 + k0;
    if (k2 > 1000000) break;
    h0 = h1;
    h1 = h2;
    k0 = k1;
    k1 = k2;
    if (static_cast<double>(h1) / static_cast<double>(k1) == x) return std::make_pair(h1, k1);
    if (r == a) break;
    r = 1.0 / (r - a);
  }
  return std::nullopt;
}

}  // namespace

BootstrapSchedule bootstrap_exponents(int Q, double q_tilde) {
  if (Q < 1) throw Error(ErrorCode::BadParameters, "homogeneous dimension must be positive");
  const double q0 = (Q + 2.0) / 2.0;
  if (!(q_tilde > q0)) throw Error(ErrorCode::QTildeTooSmall, "q_tilde must exceed q0 = (Q+2)/2");
  const double target = 2.0 * (Q + 2.0) / Q;
  const double inv_q = std::isinf(q_tilde) ? 0.0 : 1.0 / q_tilde;
  BootstrapSchedule s;
  // 2 (1/q - 1/q0) + 1 rearranged to avoid cancellation when Q = 2.
  s.ratio_bound = 1.0 / (2.0 * inv_q + (Q - 2.0) / (Q + 2.0));
  if (!(s.ratio_bound > 0.0)) s.ratio_bound = kInf;
  s.rho.push_back(2.0);
  s.monotone = true;
  s.ratio_bound_holds = true;
  constexpr int kMaxSteps = 1000000;

  // 1/rho_l = 1/2 + l (1/q - 2/(Q+2)). For rational q = a/b this is evaluated
  // exactly: rho_l = 2a(Q+2) / (a(Q+2) + 2l(b(Q+2) - 2a)).
  std::optional<std::pair<std::int64_t, std::int64_t>> q_frac;
  if (std::isinf(q_tilde)) {
    q_frac = std::make_pair(std::int64_t{1}, std::int64_t{0});
  } else {
    q_frac = short_rational(q_tilde);
  }
  auto push = [&](double next) {
    const double r = s.rho.back();
    if (!(next > r)) s.monotone = false;
    if (!(next / r >= s.ratio_bound * (1.0 - 1e-12))) s.ratio_bound_holds = false;
    s.rho.push_back(next);
  };
  if (q_frac) {
    __extension__ typedef __int128 i128;
    const i128 a = q_frac->first, b = q_frac->second, q2 = Q + 2;
    const i128 num = 2 * a * q2;
    for (i128 l = 1;; ++l) {
      if (l > kMaxSteps) throw Error(ErrorCode::BadParameters, "bootstrap did not reach 2 p0");
      const i128 den = a * q2 + 2 * l * (b * q2 - 2 * a);
      if (den <= 0) {
        push(kInf);
        break;
      }
      push(static_cast<double>(static_cast<std::int64_t>(num)) / static_cast<double>(static_cast<std::int64_t>(den)));
      // rho_l >= 2(Q+2)/Q  <=>  num Q >= 2 (Q+2) den.
      if (num * Q >= 2 * q2 * den) break;
    }
  } else {
    while (s.rho.back() < target * (1.0 - 1e-12)) {
      if (static_cast<int>(s.rho.size()) > kMaxSteps) {
        throw Error(ErrorCode::BadParameters, "bootstrap did not reach 2 p0");
      }
      const double den = 1.0 / s.rho.back() + inv_q - 2.0 / (Q + 2.0);
      push(den > 0.0 ? 1.0 / den : kInf);
    }
  }
  s.tau = static_cast<int>(s.rho.size()) - 1;
  return s;
}

IterationLemmaResult iteration_lemma(double C, double b, double alpha, double Y0, int n_max) {
  if (!(C > 0.0) || !(b > 1.0) || !(alpha > 0.0) || !(Y0 >= 0.0) || n_max < 0 || !std::isfinite(C) ||
      !std::isfinite(b) || !std::isfinite(alpha) || !std::isfinite(Y0)) {
    throw Error(ErrorCode::BadParameters, "need C > 0, b > 1, alpha > 0, Y0 >= 0, n_max >= 0");
  }
  IterationLemmaResult r;
  r.gamma = std::pow(b, 1.0 / alpha);
  r.criterion = C * std::pow(Y0, alpha) * r.gamma <= 1.0 * (1.0 + 1e-15);
  r.trajectory.reserve(static_cast<std::size_t>(n_max) + 1);
  r.trajectory.push_back(Y0);
  double y = Y0;
  for (int n = 0; n < n_max; ++n) {
    if (y != 0.0) {
      const double direct = C * std::pow(b, n) * std::pow(y, 1.0 + alpha);
      // Log space only when the direct product leaves the normal range.
      y = std::isnormal(direct) ? direct : std::exp(std::log(C) + n * std::log(b) + (1.0 + alpha) * std::log(y));
    }
    r.trajectory.push_back(y);
  }
  return r;
}

GridField undercut(const GridField& u, double k) {
  GridField out(u.spec());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = std::max(u[i] - k, 0.0);
  return out;
}

ChebyshevCheck chebyshev_check(const GridField& u, double k, double k_prime) {
  if (!(k_prime > k)) throw Error(ErrorCode::BadParameters, "need k < k'");
  return {level_measure(u, k_prime), energy(u, k) / ((k_prime - k) * (k_prime - k))};
}

namespace {

// One trial of the l2_to_linf schedule k_n = M + k - k/2^n.
IterationState l2_trial(const GridField& u, double M, double k, double sup, const ExponentBundle& b,
                        const LevelIterationOptions& opts) {
  IterationState st;
  st.M = M;
  st.k = k;
  st.bound = M + k;
  st.alpha = b.alpha;
  st.q_prime = b.q_prime;
  const double a = b.alpha;
  for (int n = 0; n <= opts.chain_length; ++n) {
    const double kn = M + k - k / std::ldexp(1.0, n);
    st.schedule.push_back(kn);
    st.energies.push_back(energy(u, kn));
    st.measures.push_back(level_measure(u, kn));
  }
  for (int n = 0; n < opts.chain_length; ++n) {
    const double yn = st.energies[n];
    const double yn1 = st.energies[n + 1];
    if (yn <= 0.0 || yn1 <= 0.0) continue;
    // Chebyshev: |A_{n+1}| <= 2^{2n+2} Y_n / k^2.
    const double cheb = std::ldexp(1.0, 2 * n + 2) * yn / (k * k);
    st.fitted_gamma = std::max(st.fitted_gamma, yn1 / (k * k * std::pow(cheb, 1.0 + a)));
  }
  const double e0 = std::sqrt(st.energies.front());
  st.smallness = std::pow(k, 2.0 * a) >= st.fitted_gamma * std::pow(2.0, 2.0 / a + 2.0) * std::pow(e0, 2.0 * a);
  const double eps = std::numeric_limits<double>::epsilon() * std::max(1.0, M + k);
  const double quantum = u.cell_volume() * eps * eps;
  st.chain_terminated = st.energies.back() <= quantum;
  st.converged = sup <= M + k && (st.smallness || st.chain_terminated);
  return st;
}

// One trial of the data_bound schedule k_n = h (2 - 2^{-n}).
IterationState data_trial(const GridField& u, double M, double h, double sup, const ExponentBundle& b,
                          const LevelIterationOptions& opts) {
  IterationState st;
  st.M = M;
  st.k = h;
  st.bound = 2.0 * h;
  st.alpha = b.alpha;
  st.q_prime = b.q_prime;
  for (int n = 0; n <= opts.chain_length; ++n) {
    const double kn = h * (2.0 - 1.0 / std::ldexp(1.0, n));
    st.schedule.push_back(kn);
    st.energies.push_back(energy(u, kn));
    st.measures.push_back(level_measure(u, kn));
  }
  // |A_{n+1}|^{1/(2 p0_hat)} <= sqrt(gamma) 2^n |A_n|^{1/(2 q')}.
  const double e_hat = 1.0 / (2.0 * b.p0_hat);
  const double e_q = 1.0 / (2.0 * b.q_prime);
  for (int n = 0; n < opts.chain_length; ++n) {
    const double an = st.measures[n];
    const double an1 = st.measures[n + 1];
    if (an <= 0.0 || an1 <= 0.0) continue;
    const double r = std::pow(an1, e_hat) / (std::ldexp(1.0, n) * std::pow(an, e_q));
    st.fitted_gamma = std::max(st.fitted_gamma, r * r);
  }
  // Z_n = |A_n|^{1/(2 p0_hat)} obeys Z_{n+1} <= sqrt(gamma) 2^n Z_n^{1+a'}, 1+a' = p0_hat/q'.
  const double ap = b.p0_hat / b.q_prime - 1.0;
  const double z0 = std::pow(st.measures.front(), e_hat);
  st.smallness = std::sqrt(st.fitted_gamma) * std::pow(z0, ap) * std::pow(2.0, 1.0 / ap) <= 1.0;
  st.chain_terminated = st.measures.back() == 0.0;
  st.converged = sup <= 2.0 * h && (st.smallness || st.chain_terminated);
  return st;
}

}  // namespace

LevelIterationResult run_level_iteration(const GridField& u, double M, const ExponentBundle& bundle,
                                         const LevelIterationOptions& opts) {
  if (!std::isfinite(M)) throw Error(ErrorCode::BadParameters, "M must be finite");
  if (opts.subintervals < 1 || opts.max_doublings < 1 || opts.chain_length < 1) {
    throw Error(ErrorCode::BadParameters, "subintervals, max_doublings and chain_length must be positive");
  }
  for (std::size_t i : opts.boundary_nodes) {
    if (i >= u.size()) throw Error(ErrorCode::BadParameters, "boundary node index out of range");
    if (u[i] > M + 1e-12 * std::max(1.0, std::abs(M))) {
      throw Error(ErrorCode::BadParameters, "M does not dominate the field on the supplied data nodes");
    }
  }
  LevelIterationResult res;
  res.M = M;
  res.measured_sup = max_value(u);
  const int nt = u.time_extent();
  const int parts = std::min(opts.subintervals, nt);
  double m = M;
  for (int part = 0; part < parts; ++part) {
    const int j0 = part * nt / parts;
    const int j1 = (part + 1) * nt / parts;
    const GridField slab = time_slab(u, j0, j1);
    const double sup = max_value(slab);
    IterationState st;
    if (opts.mode == IterationMode::L2ToLinf && undercut_energy(slab, m) == 0.0) {
      st.M = m;
      st.bound = m;
      st.alpha = bundle.alpha;
      st.q_prime = bundle.q_prime;
      st.converged = true;
      st.chain_terminated = true;
    } else {
      const double start = opts.mode == IterationMode::L2ToLinf ? std::max(1.0, m) : opts.sigma0 * std::max(m, 1.0);
      double k = start;
      bool found = false;
      for (int trial = 1; trial <= opts.max_doublings; ++trial, k *= 2.0) {
        st = opts.mode == IterationMode::L2ToLinf ? l2_trial(slab, m, k, sup, bundle, opts)
                                                  : data_trial(slab, m, k, sup, bundle, opts);
        st.trials = trial;
        if (st.converged) {
          found = true;
          break;
        }
      }
      if (!found) {
        throw Error(ErrorCode::ScheduleStall,
                    "level search exhausted after " + std::to_string(opts.max_doublings) + " doublings (last k = " +
                        std::to_string(st.k) + ", fitted gamma = " + std::to_string(st.fitted_gamma) +
                        ", final energy = " + std::to_string(st.energies.empty() ? 0.0 : st.energies.back()) + ")");
      }
    }
    m = std::max(m, st.bound);
    res.intervals.push_back(std::move(st));
  }
  res.bound = m;
  return res;
}

}  // namespace kolmolab
