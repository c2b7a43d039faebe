#include "kolmolab/fd_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "kolmolab/error.hpp"

namespace kolmolab {

namespace {

double eval(const ScalarField& f, const Vec& x, double t) { return f ? f(x, t) : 0.0; }

double eval(const std::vector<ScalarField>& f, std::size_t i, const Vec& x, double t) {
  return i < f.size() && f[i] ? f[i](x, t) : 0.0;
}

double eval_a(const CoefficientSet& c, int m0, int i, int j, const Vec& x, double t) {
  return eval(c.a, static_cast<std::size_t>(i * m0 + j), x, t);
}

// Spatial vertex grid of the solver.
struct Lattice {
  int n = 0;
  int m0 = 0;
  std::vector<int> nodes;
  std::vector<double> h;
  std::vector<std::size_t> stride;
  Vec lower;
  std::size_t count = 1;

  Vec position(std::size_t flat) const {
    Vec x(n);
    for (int a = 0; a < n; ++a) {
      const auto i = static_cast<int>((flat / stride[a]) % nodes[a]);
      x(a) = lower(a) + i * h[a];
    }
    return x;
  }
  int index(std::size_t flat, int axis) const { return static_cast<int>((flat / stride[axis]) % nodes[axis]); }
};

Lattice make_lattice(const ProductDomain& dom, const StructureMatrix& s, const FdGrid& grid) {
  Lattice L;
  L.n = s.N();
  L.m0 = s.m0();
  if (static_cast<int>(grid.cells.size()) != L.n) {
    throw Error(ErrorCode::ShapeMismatch, "grid needs one cell count per spatial axis");
  }
  L.lower.resize(L.n);
  for (int a = 0; a < L.n; ++a) {
    if (grid.cells[a] < 2) throw Error(ErrorCode::ShapeMismatch, "at least two cells per axis");
    const bool in_v = a < L.m0;
    const double lo = in_v ? dom.v_lower(a) : dom.u_lower(a - L.m0);
    const double hi = in_v ? dom.v_upper(a) : dom.u_upper(a - L.m0);
    L.lower(a) = lo;
    L.nodes.push_back(grid.cells[a] + 1);
    L.h.push_back((hi - lo) / grid.cells[a]);
  }
  L.stride.assign(L.n, 1);
  for (int a = L.n - 2; a >= 0; --a) L.stride[a] = L.stride[a + 1] * L.nodes[a + 1];
  L.count = L.stride[0] * L.nodes[0];
  return L;
}

double transport_rate(const StructureMatrix& s, const Lattice& L, const Vec& x) {
  const Vec w = s.B() * x;
  double r = 0.0;
  for (int a = 0; a < L.n; ++a) r += std::abs(w(a)) / L.h[a];
  return r;
}

void audit_ellipticity(const CoefficientSet& c, int m0, const Vec& x, double t) {
  Mat a(m0, m0);
  for (int i = 0; i < m0; ++i) {
    for (int j = 0; j < m0; ++j) a(i, j) = eval_a(c, m0, i, j, x, t);
  }
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if (!a.allFinite()) throw Error(ErrorCode::EllipticityViolation, "non-finite diffusion coefficient");
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw Error(ErrorCode::EllipticityViolation, "diffusion matrix is not symmetric");
  }
  const double lam = m0 == 1 ? a(0, 0) : Eigen::SelfAdjointEigenSolver<Mat>(a, Eigen::EigenvaluesOnly).eigenvalues()(0);
  if (lam < c.lambda * (1.0 - 1e-12) || a.cwiseAbs().maxCoeff() > c.Lambda * (1.0 + 1e-12)) {
    throw Error(ErrorCode::EllipticityViolation, "diffusion matrix violates the ellipticity bounds");
  }
}

}  // namespace

void validate_domain(const ProductDomain& dom, const StructureMatrix& s) {
  const int m0 = s.m0();
  const int mu = s.N() - m0;
  if (dom.v_lower.size() != m0 || dom.v_upper.size() != m0 || dom.u_lower.size() != mu ||
      dom.u_upper.size() != mu) {
    throw Error(ErrorCode::ShapeMismatch, "domain boxes do not match the block dimensions");
  }
  for (int a = 0; a < m0; ++a) {
    if (!(dom.v_upper(a) > dom.v_lower(a))) throw Error(ErrorCode::ShapeMismatch, "empty V box");
  }
  for (int a = 0; a < mu; ++a) {
    if (!(dom.u_upper(a) > dom.u_lower(a))) throw Error(ErrorCode::ShapeMismatch, "empty U box");
  }
  if (!(dom.T > 0.0)) throw Error(ErrorCode::NonPositiveTime, "final time must be positive");
}

CoefficientSet identity_coefficients(int m0) {
  CoefficientSet c;
  c.a.resize(static_cast<std::size_t>(m0 * m0));
  for (int i = 0; i < m0; ++i) c.a[i * m0 + i] = [](const Vec&, double) { return 1.0; };
  c.steady_operator = true;
  return c;
}

KSide classify_boundary(const ProductDomain& dom, const StructureMatrix& s, const Vec& x) {
  validate_domain(dom, s);
  const int m0 = s.m0();
  const int n = s.N();
  if (x.size() != n) throw Error(ErrorCode::ShapeMismatch, "point has the wrong dimension");
  for (int a = 0; a < m0; ++a) {
    const double tol = 1e-12 * (1.0 + std::abs(dom.v_lower(a)) + std::abs(dom.v_upper(a)));
    if (x(a) < dom.v_lower(a) - tol || x(a) > dom.v_upper(a) + tol) {
      throw Error(ErrorCode::NotOnKBoundary, "point lies outside the closure of V");
    }
  }
  const Vec w = s.B() * x;
  bool on_face = false;
  double best = -1.0;
  double best_flux = 0.0;
  for (int a = m0; a < n; ++a) {
    const double lo = dom.u_lower(a - m0);
    const double hi = dom.u_upper(a - m0);
    const double tol = 1e-12 * (1.0 + std::abs(lo) + std::abs(hi));
    if (x(a) < lo - tol || x(a) > hi + tol) throw Error(ErrorCode::NotOnKBoundary, "point lies outside U");
    for (const double sign : {-1.0, 1.0}) {
      const double face = sign < 0 ? lo : hi;
      if (std::abs(x(a) - face) > tol) continue;
      on_face = true;
      const double flux = sign * w(a);
      const double mag = std::abs(flux);
      if (mag > best || (mag == best && flux >= 0.0)) {
        best = mag;
        best_flux = flux;
      }
    }
  }
  if (!on_face) throw Error(ErrorCode::NotOnKBoundary, "point does not lie on V x dU");
  return best_flux >= 0.0 ? KSide::KPlus : KSide::KMinus;
}

SolveResult solve(const ProductDomain& dom, const StructureMatrix& s, const CoefficientSet& coeffs,
                  const BoundaryData& data, const FdGrid& grid) {
  validate_domain(dom, s);
  if (!data.gamma_P) throw Error(ErrorCode::BadParameters, "gamma_P data is required");
  if (!(grid.cfl_safety > 0.0 && grid.cfl_safety <= 1.0)) {
    throw Error(ErrorCode::BadParameters, "cfl_safety must lie in (0, 1]");
  }
  const int m0 = s.m0();
  if (static_cast<int>(coeffs.a.size()) != m0 * m0) {
    throw Error(ErrorCode::ShapeMismatch, "diffusion matrix must have m0 x m0 entries");
  }
  const Lattice L = make_lattice(dom, s, grid);
  const int n = L.n;

  // Node classes.
  std::vector<NodeClass> cls(L.count, NodeClass::Interior);
  std::vector<Vec> pos(L.count);
  for (std::size_t p = 0; p < L.count; ++p) {
    pos[p] = L.position(p);
    bool on_v = false;
    bool on_u = false;
    for (int a = 0; a < n; ++a) {
      const int i = L.index(p, a);
      const bool edge = i == 0 || i == L.nodes[a] - 1;
      (a < m0 ? on_v : on_u) |= edge;
    }
    if (on_v) {
      cls[p] = NodeClass::GammaP;
    } else if (on_u) {
      cls[p] = classify_boundary(dom, s, pos[p]) == KSide::KPlus ? NodeClass::KPlus : NodeClass::KMinus;
    }
  }
  const bool has_kplus = std::any_of(cls.begin(), cls.end(), [](NodeClass c) { return c == NodeClass::KPlus; });
  if (has_kplus && !data.gamma_K_plus) throw Error(ErrorCode::BadParameters, "gamma_K_plus data is required");

  // Time step from the explicit CFL bound at t = 0.
  auto explicit_rate = [&](double t) {
    double r = 0.0;
    for (std::size_t p = 0; p < L.count; ++p) {
      if (cls[p] != NodeClass::Interior && cls[p] != NodeClass::KMinus) continue;
      double rate = transport_rate(s, L, pos[p]) + std::abs(eval(coeffs.d, pos[p], t));
      // The centred first-order term is explicit too; bound it like an upwind flux.
      for (int i = 0; i < m0; ++i) rate += std::abs(eval(coeffs.c, i, pos[p], t)) / L.h[i];
      r = std::max(r, rate);
    }
    return r;
  };
  double dt = grid.dt;
  const double rate0 = explicit_rate(0.0);
  if (dt <= 0.0) {
    const double hmin = *std::min_element(L.h.begin(), L.h.end());
    dt = rate0 > 0.0 ? grid.cfl_safety / rate0 : grid.cfl_safety * hmin;
  }
  const int steps = std::max(1, static_cast<int>(std::ceil(dom.T / dt - 1e-9)));
  dt = dom.T / steps;

  GridSpec spec;
  spec.lower.resize(n);
  spec.upper.resize(n);
  spec.shape.resize(n + 1);
  for (int a = 0; a < n; ++a) {
    spec.lower(a) = L.lower(a) - 0.5 * L.h[a];
    spec.upper(a) = L.lower(a) + (L.nodes[a] - 0.5) * L.h[a];
    spec.shape[a] = L.nodes[a];
  }
  spec.t0 = -0.5 * dt;
  spec.t1 = dom.T + 0.5 * dt;
  spec.shape[n] = steps + 1;

  SolveResult res;
  res.u = GridField(spec);
  res.node_class = cls;
  res.dt = dt;
  res.steps = steps;
  res.h = L.h;
  const int nt = steps + 1;

  std::vector<double> u(L.count), ustar(L.count), known(L.count, 0.0);
  double M = 0.0;
  for (std::size_t p = 0; p < L.count; ++p) {
    u[p] = data.gamma_P(pos[p], 0.0);
    M = std::max(M, u[p]);
  }
  auto store = [&](int level) {
    for (std::size_t p = 0; p < L.count; ++p) res.u[p * nt + level] = u[p];
  };
  store(0);

  // Fibers: V-subgrids at fixed U index. Unknowns are interior and K_minus nodes.
  const std::size_t n_u = m0 < n ? L.stride[m0 - 1] : 1;
  const std::size_t fiber_len = L.count / n_u;
  const std::size_t v_stride = n_u;
  struct Fiber {
    std::vector<std::size_t> nodes;
    std::vector<int> unknown;  // -1 for known nodes, per fiber position
    std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu;
  };
  std::vector<Fiber> fibers(n_u);
  for (std::size_t iu = 0; iu < n_u; ++iu) {
    auto& fb = fibers[iu];
    int k = 0;
    for (std::size_t iv = 0; iv < fiber_len; ++iv) {
      const std::size_t p = iv * v_stride + iu;
      fb.nodes.push_back(p);
      const bool unknown = cls[p] == NodeClass::Interior || cls[p] == NodeClass::KMinus;
      fb.unknown.push_back(unknown ? k++ : -1);
    }
  }

  auto neighbour = [&](std::size_t p, int axis, int dir) -> std::ptrdiff_t {
    const int i = L.index(p, axis) + dir;
    if (i < 0 || i >= L.nodes[axis]) return -1;
    return static_cast<std::ptrdiff_t>(p) + dir * static_cast<std::ptrdiff_t>(L.stride[axis]);
  };

  for (int step = 0; step < steps; ++step) {
    const double tn = step * dt;
    const double t1 = (step + 1) * dt;

    for (std::size_t p = 0; p < L.count; ++p) audit_ellipticity(coeffs, m0, pos[p], t1);
    if (explicit_rate(tn) * dt > 1.0 + 1e-12) {
      throw Error(ErrorCode::CFLViolation, "time step violates the explicit CFL bound at t = " + std::to_string(tn));
    }

    // Explicit stage.
#pragma omp parallel for schedule(static)
    for (std::size_t p = 0; p < L.count; ++p) {
      if (cls[p] != NodeClass::Interior && cls[p] != NodeClass::KMinus) {
        ustar[p] = 0.0;
        continue;
      }
      const Vec& x = pos[p];
      const Vec w = s.B() * x;
      double r = 0.0;
      for (int a = 0; a < n; ++a) {
        if (w(a) > 0.0) {
          const auto q = neighbour(p, a, +1);
          if (q >= 0) r += w(a) * (u[q] - u[p]) / L.h[a];
        } else if (w(a) < 0.0) {
          const auto q = neighbour(p, a, -1);
          if (q >= 0) r += w(a) * (u[p] - u[q]) / L.h[a];
        }
      }
      for (int i = 0; i < m0; ++i) {
        const auto qp = neighbour(p, i, +1);
        const auto qm = neighbour(p, i, -1);
        const double hi = L.h[i];
        const double ci = eval(coeffs.c, i, x, tn);
        if (ci != 0.0) r += ci * (u[qp] - u[qm]) / (2.0 * hi);
        if (i < static_cast<int>(coeffs.f.size()) && coeffs.f[i]) {
          Vec xp = x, xm = x;
          xp(i) += hi;
          xm(i) -= hi;
          r += (coeffs.f[i](xp, tn) - coeffs.f[i](xm, tn)) / (2.0 * hi);
        }
      }
      r += eval(coeffs.d, x, tn) * u[p] + eval(coeffs.g, x, tn);
      ustar[p] = u[p] + dt * r;
    }

    // Data at the new level.
    for (std::size_t p = 0; p < L.count; ++p) {
      if (cls[p] == NodeClass::GammaP) {
        known[p] = data.gamma_P(pos[p], t1);
      } else if (cls[p] == NodeClass::KPlus) {
        known[p] = data.gamma_K_plus(pos[p], t1);
      } else {
        continue;
      }
      M = std::max(M, known[p]);
    }

    // Implicit stage per fiber: (I - dt L_V) u = ustar.
    const bool reuse = coeffs.steady_operator;
#pragma omp parallel for schedule(dynamic)
    for (std::size_t iu = 0; iu < n_u; ++iu) {
      auto& fb = fibers[iu];
      const int unknowns = static_cast<int>(
          std::count_if(fb.unknown.begin(), fb.unknown.end(), [](int k) { return k >= 0; }));
      if (unknowns == 0) {
        for (std::size_t p : fb.nodes) u[p] = known[p];
        continue;
      }
      std::vector<Eigen::Triplet<double>> trip;
      Eigen::VectorXd rhs(unknowns);
      const bool assemble = !reuse || !fb.lu;
      for (std::size_t k = 0; k < fb.nodes.size(); ++k) {
        const int row = fb.unknown[k];
        if (row < 0) continue;
        const std::size_t p = fb.nodes[k];
        const Vec& x = pos[p];
        rhs(row) = ustar[p];
        double diag = 1.0;
        auto couple = [&](std::ptrdiff_t q, double coef) {
          const std::size_t fq = static_cast<std::size_t>(q) / v_stride;
          const int col = fb.unknown[fq];
          if (col >= 0) {
            if (assemble) trip.emplace_back(row, col, coef);
          } else {
            rhs(row) -= coef * known[q];
          }
        };
        for (int i = 0; i < m0; ++i) {
          const double hi = L.h[i];
          const auto qp = neighbour(p, i, +1);
          const auto qm = neighbour(p, i, -1);
          Vec xp = x, xm = x;
          xp(i) += 0.5 * hi;
          xm(i) -= 0.5 * hi;
          const double ap = eval_a(coeffs, m0, i, i, xp, t1);
          const double am = eval_a(coeffs, m0, i, i, xm, t1);
          diag += dt * (ap + am) / (hi * hi);
          couple(qp, -dt * ap / (hi * hi));
          couple(qm, -dt * am / (hi * hi));
          if (i < static_cast<int>(coeffs.b.size()) && coeffs.b[i]) {
            Vec yp = x, ym = x;
            yp(i) += hi;
            ym(i) -= hi;
            couple(qp, -dt * coeffs.b[i](yp, t1) / (2.0 * hi));
            couple(qm, dt * coeffs.b[i](ym, t1) / (2.0 * hi));
          }
          for (int j = 0; j < m0; ++j) {
            if (j == i) continue;
            const double hj = L.h[j];
            for (const int si : {+1, -1}) {
              const auto qi = neighbour(p, i, si);
              Vec xi = x;
              xi(i) += si * hi;
              const double aij = eval_a(coeffs, m0, i, j, xi, t1);
              if (aij == 0.0) continue;
              const double coef = -dt * si * aij / (4.0 * hi * hj);
              couple(neighbour(static_cast<std::size_t>(qi), j, +1), coef);
              couple(neighbour(static_cast<std::size_t>(qi), j, -1), -coef);
            }
          }
        }
        if (assemble) trip.emplace_back(row, row, diag);
      }
      if (assemble) {
        Eigen::SparseMatrix<double> A(unknowns, unknowns);
        A.setFromTriplets(trip.begin(), trip.end());
        A.makeCompressed();
        fb.lu = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
        fb.lu->compute(A);
        if (fb.lu->info() != Eigen::Success) {
          throw Error(ErrorCode::FactorizationFailure, "implicit diffusion matrix is singular");
        }
      }
      const Eigen::VectorXd sol = fb.lu->solve(rhs);
      for (std::size_t k = 0; k < fb.nodes.size(); ++k) {
        const std::size_t p = fb.nodes[k];
        u[p] = fb.unknown[k] >= 0 ? sol(fb.unknown[k]) : known[p];
      }
    }

    for (std::size_t p = 0; p < L.count; ++p) {
      if (!std::isfinite(u[p])) throw Error(ErrorCode::NonFinite, "solution became non-finite");
    }
    store(step + 1);
  }
  res.M = M;
  return res;
}

namespace {

// Fourth-order central first derivative of f along axis a (axis == n is time).
double d1(const std::function<double(const Vec&, double)>& f, const Vec& x, double t, int axis, double h) {
  auto at = [&](double k) {
    if (axis == x.size()) return f(x, t + k * h);
    Vec y = x;
    y(axis) += k * h;
    return f(y, t);
  };
  return (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / (12.0 * h);
}

}  // namespace

double apply_kolmogorov(const StructureMatrix& s, const CoefficientSet& coeffs, const ScalarField& u, const Vec& x,
                        double t, double step) {
  const int n = s.N();
  const int m0 = s.m0();
  double val = d1(u, x, t, n, step);
  const Vec w = s.B() * x;
  for (int a = 0; a < n; ++a) {
    if (w(a) != 0.0) val -= w(a) * d1(u, x, t, a, step);
  }
  for (int i = 0; i < m0; ++i) {
    ScalarField flux = [&, i](const Vec& y, double tt) {
      double v = eval(coeffs.b, i, y, tt) * u(y, tt);
      for (int j = 0; j < m0; ++j) {
        const double aij = eval_a(coeffs, m0, i, j, y, tt);
        if (aij != 0.0) v += aij * d1(u, y, tt, j, step);
      }
      return v;
    };
    val -= d1(flux, x, t, i, step);
    const double ci = eval(coeffs.c, i, x, t);
    if (ci != 0.0) val -= ci * d1(u, x, t, i, step);
  }
  val -= eval(coeffs.d, x, t) * u(x, t);
  return val;
}

std::vector<std::size_t> data_entries(const SolveResult& r) {
  const auto nt = static_cast<std::size_t>(r.u.time_extent());
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < r.node_class.size(); ++p) {
    const bool data = r.node_class[p] == NodeClass::GammaP || r.node_class[p] == NodeClass::KPlus;
    for (std::size_t j = 0; j < nt; ++j) {
      if (data || j == 0) out.push_back(p * nt + j);
    }
  }
  return out;
}

double sup_norm(const GridField& u) {
  double m = 0.0;
  for (double v : u.values()) m = std::max(m, std::abs(v));
  return m;
}

double max_value(const GridField& u) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : u.values()) m = std::max(m, v);
  return m;
}

double level_measure(const GridField& u, double k) {
  const auto count = std::count_if(u.values().begin(), u.values().end(), [k](double v) { return v > k; });
  return static_cast<double>(count) * u.cell_volume();
}

double undercut_energy(const GridField& u, double M) {
  std::vector<double> sq(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double v = std::max(u[i] - M, 0.0);
    sq[i] = v * v;
  }
  return std::sqrt(pairwise_sum(sq) * u.cell_volume());
}

MaxPrincipleReport check_max_principle(const SolveResult& r, const CoefficientSet& coeffs) {
  const GridField& u = r.u;
  const int n = u.dim();
  const int nt = u.time_extent();
  const std::size_t nodes = u.size() / static_cast<std::size_t>(nt);
  std::vector<Vec> pos(nodes);
  for (std::size_t p = 0; p < nodes; ++p) pos[p] = u.node_position(p * nt);

  for (int j = 0; j < nt; ++j) {
    const double t = u.coord(n, j);
    std::vector<double> b0(coeffs.b.size());
    for (std::size_t i = 0; i < coeffs.b.size(); ++i) b0[i] = eval(coeffs.b, i, pos[0], t);
    for (std::size_t p = 0; p < nodes; ++p) {
      const Vec& x = pos[p];
      if (eval(coeffs.d, x, t) > 0.0) {
        throw Error(ErrorCode::HypothesisViolation, "d > 0 somewhere; the maximum principle check does not apply");
      }
      if (eval(coeffs.g, x, t) != 0.0) throw Error(ErrorCode::HypothesisViolation, "g must vanish");
      for (std::size_t i = 0; i < coeffs.f.size(); ++i) {
        if (eval(coeffs.f, i, x, t) != 0.0) throw Error(ErrorCode::HypothesisViolation, "f must vanish");
      }
      for (std::size_t i = 0; i < coeffs.b.size(); ++i) {
        const double bi = eval(coeffs.b, i, x, t);
        if (std::abs(bi - b0[i]) > 1e-14 * (1.0 + std::abs(b0[i]))) {
          throw Error(ErrorCode::HypothesisViolation, "b must be spatially constant on each time level");
        }
      }
    }
  }

  MaxPrincipleReport rep;
  rep.M = r.M;
  rep.sup_interior = -std::numeric_limits<double>::infinity();
  rep.sup_K_minus = -std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < nodes; ++p) {
    const NodeClass c = r.node_class[p];
    if (c != NodeClass::Interior && c != NodeClass::KMinus) continue;
    double m = -std::numeric_limits<double>::infinity();
    for (int j = 1; j < nt; ++j) m = std::max(m, u[p * nt + j]);
    if (c == NodeClass::Interior) {
      rep.sup_interior = std::max(rep.sup_interior, m);
    } else {
      rep.sup_K_minus = std::max(rep.sup_K_minus, m);
      rep.has_K_minus = true;
    }
  }
  if (!rep.has_K_minus) rep.sup_K_minus = 0.0;
  const double top = rep.has_K_minus ? std::max(rep.sup_interior, rep.sup_K_minus) : rep.sup_interior;
  rep.excess = std::max(0.0, top - rep.M);
  return rep;
}

OrderEstimate refinement_order(const std::vector<double>& h, const std::vector<double>& err, double exact_threshold) {
  if (h.size() != err.size() || h.size() < 2) {
    throw Error(ErrorCode::BadParameters, "need at least two (h, error) pairs");
  }
  OrderEstimate est;
  est.exact = std::all_of(err.begin(), err.end(), [&](double e) { return e <= exact_threshold; });
  if (est.exact) return est;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double k = static_cast<double>(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double lx = std::log(h[i]);
    const double ly = std::log(std::max(err[i], exact_threshold > 0.0 ? exact_threshold : std::numeric_limits<double>::min()));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  est.order = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  return est;
}

}  // namespace kolmolab
