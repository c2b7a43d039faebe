#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "instances.hpp"
#include "kolmolab/error.hpp"
#include "kolmolab/fd_solver.hpp"

using namespace kolmolab;
using kolmolab::test::vec;

namespace {

ErrorCode code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected kolmolab::Error";
  return ErrorCode::IoError;
}

struct Kinetic : ::testing::Test {
  StructureMatrix s = validate_structure(test::kinetic_spec());
  ProductDomain dom{Vec::Constant(1, -1.0), Vec::Constant(1, 1.0), Vec::Constant(1, -1.0), Vec::Constant(1, 1.0), 0.5};

  FdGrid grid(int n) const {
    FdGrid g;
    g.cells = {n, n};
    return g;
  }
};

double max_error(const SolveResult& r, const ScalarField& exact) {
  double err = 0.0;
  for (std::size_t k = 0; k < r.u.size(); ++k)
    err = std::max(err, std::abs(r.u[k] - exact(r.u.node_position(k), r.u.node_time(k))));
  return err;
}

}  // namespace

TEST_F(Kinetic, ClassifyBoundary) {
  for (double x1 : {-0.7, -0.1, 0.0, 0.2, 0.9}) {
    EXPECT_EQ(classify_boundary(dom, s, vec({x1, 1.0})), x1 >= 0 ? KSide::KPlus : KSide::KMinus) << x1;
    EXPECT_EQ(classify_boundary(dom, s, vec({x1, -1.0})), x1 <= 0 ? KSide::KPlus : KSide::KMinus) << x1;
  }
  EXPECT_EQ(code_of([&] { classify_boundary(dom, s, vec({0.2, 0.3})); }), ErrorCode::NotOnKBoundary);
  EXPECT_EQ(code_of([&] { classify_boundary(dom, s, vec({1.5, 1.0})); }), ErrorCode::NotOnKBoundary);
}

TEST_F(Kinetic, NodeClassesPartitionTheKineticBoundary) {
  auto r = solve(dom, s, identity_coefficients(1), BoundaryData{[](const Vec&, double) { return 0.0; },
                                                                [](const Vec&, double) { return 0.0; }},
                 grid(8));
  const std::size_t nt = static_cast<std::size_t>(r.u.time_extent());
  ASSERT_EQ(r.node_class.size() * nt, r.u.size());
  for (std::size_t p = 0; p < r.node_class.size(); ++p) {
    Vec x = r.u.node_position(p * nt);
    const bool on_v_face = std::abs(std::abs(x(0)) - 1.0) < 1e-12;
    const bool on_u_face = std::abs(std::abs(x(1)) - 1.0) < 1e-12;
    if (on_v_face) {
      EXPECT_EQ(r.node_class[p], NodeClass::GammaP);
    } else if (on_u_face) {
      auto side = classify_boundary(dom, s, x);
      EXPECT_EQ(r.node_class[p], side == KSide::KPlus ? NodeClass::KPlus : NodeClass::KMinus);
    } else {
      EXPECT_EQ(r.node_class[p], NodeClass::Interior);
    }
  }
}

TEST_F(Kinetic, ReproducesConstants) {
  ScalarField one = [](const Vec&, double) { return 1.0; };
  auto r = solve(dom, s, identity_coefficients(1), BoundaryData{one, one}, grid(12));
  for (double v : r.u.values()) EXPECT_NEAR(v, 1.0, 1e-14);
  EXPECT_DOUBLE_EQ(r.M, 1.0);
}

TEST_F(Kinetic, ManufacturedSolutionConvergesAtFirstOrder) {
  auto co = identity_coefficients(1);
  ScalarField exact = [](const Vec& x, double t) {
    return std::sin(std::numbers::pi * x(0)) * (1 + x(1)) * std::exp(-t);
  };
  co.g = [&](const Vec& x, double t) { return apply_kolmogorov(s, co, exact, x, t); };
  std::vector<double> hs, errs;
  for (int n : {8, 16, 32}) {
    auto r = solve(dom, s, co, BoundaryData{exact, exact}, grid(n));
    hs.push_back(2.0 / n);
    errs.push_back(max_error(r, exact));
  }
  EXPECT_GE(refinement_order(hs, errs).order, 1.0);
}

TEST(Parabolic, ManufacturedSolutionConvergesAtSecondOrder) {
  auto s = validate_structure(test::parabolic_spec(2));
  ProductDomain dom{Vec::Constant(2, -1.0), Vec::Constant(2, 1.0), Vec(0), Vec(0), 0.5};
  auto co = identity_coefficients(2);
  ScalarField exact = [](const Vec& x, double t) {
    return std::sin(std::numbers::pi * x(0)) * (1 + x(1)) * std::exp(-t);
  };
  co.g = [&](const Vec& x, double t) { return apply_kolmogorov(s, co, exact, x, t); };
  std::vector<double> hs, errs;
  for (int n : {8, 16, 32}) {
    FdGrid g;
    g.cells = {n, n};
    const double h = 2.0 / n;
    g.dt = 0.25 * h * h;
    auto r = solve(dom, s, co, BoundaryData{exact, exact}, g);
    hs.push_back(h);
    errs.push_back(max_error(r, exact));
  }
  EXPECT_GE(refinement_order(hs, errs).order, 1.8);
}

TEST_F(Kinetic, WeakDiffusionTransportIsMonotone) {
  auto co = identity_coefficients(1);
  const double eps = 1e-3;
  co.a = {[=](const Vec&, double) { return eps; }};
  co.lambda = eps;
  co.Lambda = 1.0;
  ScalarField pulse = [](const Vec& x, double t) {
    return t == 0.0 ? std::exp(-20 * (x(0) * x(0) + (x(1) + 0.4) * (x(1) + 0.4))) : 0.0;
  };
  auto r = solve(dom, s, co, BoundaryData{pulse, pulse}, grid(24));
  double data_max = 0.0;
  for (std::size_t k = 0; k < r.u.size(); k += static_cast<std::size_t>(r.u.time_extent()))
    data_max = std::max(data_max, r.u[k]);
  EXPECT_LE(max_value(r.u), data_max + 1e-14);
  for (double v : r.u.values()) EXPECT_GE(v, -1e-14);
}

TEST_F(Kinetic, MaxPrincipleOfCoreScheme) {
  ScalarField data = [](const Vec& x, double t) { return std::min(1.0, 0.5 + x(0) * x(1) + t); };
  auto co = identity_coefficients(1);
  auto r = solve(dom, s, co, BoundaryData{data, data}, grid(16));
  auto rep = check_max_principle(r, co);
  EXPECT_LE(rep.M, 1.0);
  EXPECT_LE(std::max(rep.sup_interior, rep.sup_K_minus), rep.M + 1e-12);
  EXPECT_EQ(rep.excess, 0.0);
  EXPECT_TRUE(rep.has_K_minus);
}

TEST_F(Kinetic, MaxPrincipleWithAbsorption) {
  ScalarField data = [](const Vec& x, double) { return 1.0 - 0.2 * x(0) * x(0); };
  auto co = identity_coefficients(1);
  co.d = [](const Vec&, double) { return -1.0; };
  auto r = solve(dom, s, co, BoundaryData{data, data}, grid(16));
  auto rep = check_max_principle(r, co);
  EXPECT_LE(rep.sup_interior, 1.0 + 1e-12);
  EXPECT_LE(rep.sup_K_minus, 1.0 + 1e-12);
}

TEST_F(Kinetic, MaxPrincipleRefusesPositiveZerothOrderTerm) {
  ScalarField one = [](const Vec&, double) { return 1.0; };
  auto co = identity_coefficients(1);
  co.d = [](const Vec&, double) { return 10.0; };
  auto r = solve(dom, s, co, BoundaryData{one, one}, grid(8));
  EXPECT_EQ(code_of([&] { check_max_principle(r, co); }), ErrorCode::HypothesisViolation);
  auto cg = identity_coefficients(1);
  cg.g = [](const Vec&, double) { return 1.0; };
  EXPECT_EQ(code_of([&] { check_max_principle(r, cg); }), ErrorCode::HypothesisViolation);
  auto cb = identity_coefficients(1);
  cb.b = {[](const Vec& x, double) { return x(1); }};
  EXPECT_EQ(code_of([&] { check_max_principle(r, cb); }), ErrorCode::HypothesisViolation);
}

TEST_F(Kinetic, RejectsInvalidInputs) {
  ScalarField one = [](const Vec&, double) { return 1.0; };
  auto co = identity_coefficients(1);
  auto g = grid(16);
  g.dt = 0.5;
  EXPECT_EQ(code_of([&] { solve(dom, s, co, BoundaryData{one, one}, g); }), ErrorCode::CFLViolation);
  auto weak = identity_coefficients(1);
  weak.a = {[](const Vec&, double) { return 0.5; }};
  EXPECT_EQ(code_of([&] { solve(dom, s, weak, BoundaryData{one, one}, grid(8)); }),
            ErrorCode::EllipticityViolation);
  ProductDomain bad = dom;
  bad.T = 0.0;
  EXPECT_EQ(code_of([&] { solve(bad, s, co, BoundaryData{one, one}, grid(8)); }), ErrorCode::NonPositiveTime);
}

TEST_F(Kinetic, DataEntriesCoverTheInitialLevelAndDataNodes) {
  ScalarField one = [](const Vec&, double) { return 1.0; };
  auto r = solve(dom, s, identity_coefficients(1), BoundaryData{one, one}, grid(6));
  auto entries = data_entries(r);
  const std::size_t nt = static_cast<std::size_t>(r.u.time_extent());
  std::vector<bool> marked(r.u.size(), false);
  for (auto e : entries) marked[e] = true;
  for (std::size_t p = 0; p < r.node_class.size(); ++p) {
    const bool data = r.node_class[p] == NodeClass::GammaP || r.node_class[p] == NodeClass::KPlus;
    for (std::size_t j = 0; j < nt; ++j) EXPECT_EQ(marked[p * nt + j], data || j == 0);
  }
}

TEST(ApplyKolmogorov, Polynomial) {
  auto s = validate_structure(test::kinetic_spec());
  auto co = identity_coefficients(1);
  // u = x1^2 + x1 x2 + t: D_t u - x1 D_2 u - D_1^2 u = 1 - x1^2 - 2.
  ScalarField u = [](const Vec& x, double t) { return x(0) * x(0) + x(0) * x(1) + t; };
  Vec x = vec({0.3, -0.7});
  EXPECT_NEAR(apply_kolmogorov(s, co, u, x, 0.2), 1.0 - 0.09 - 2.0, 1e-8);
}

TEST(FieldFunctionals, Examples) {
  GridSpec unit{Vec::Constant(2, 0.0), Vec::Constant(2, 1.0), 0.0, 1.0, {4, 4, 4}};
  GridField three(unit, std::vector<double>(64, 3.0));
  EXPECT_EQ(level_measure(three, 3.0), 0.0);
  EXPECT_NEAR(level_measure(three, 2.9), 1.0, 1e-14);
  GridField five(unit, std::vector<double>(64, 5.0));
  EXPECT_NEAR(undercut_energy(five, 3.0), 2.0, 1e-14);
  EXPECT_EQ(sup_norm(five), 5.0);

  auto u = random_bump_field(unit, 3, 8);
  double prev = level_measure(u, -1.0);
  for (int i = 0; i <= 200; ++i) {
    double k = i / 200.0;
    double m = level_measure(u, k);
    EXPECT_LE(m, prev);
    prev = m;
  }
  // Right-continuity: the jumps sit exactly at field values and are taken from the left.
  for (std::size_t k = 0; k < u.size(); k += 7) {
    double v = u[k];
    EXPECT_EQ(level_measure(u, v), level_measure(u, std::nextafter(v, 10.0)));
    EXPECT_LT(level_measure(u, v), level_measure(u, std::nextafter(v, -10.0)));
  }
}

TEST(RefinementOrder, SlopesAndExactness) {
  std::vector<double> h{0.4, 0.2, 0.1};
  EXPECT_NEAR(refinement_order(h, {0.16, 0.04, 0.01}).order, 2.0, 1e-12);
  EXPECT_NEAR(refinement_order(h, {0.4, 0.2, 0.1}).order, 1.0, 1e-12);
  auto ex = refinement_order(h, {0.0, 1e-15, 0.0});
  EXPECT_TRUE(ex.exact);
  EXPECT_EQ(code_of([&] { refinement_order({0.1}, {0.1}); }), ErrorCode::BadParameters);
}
