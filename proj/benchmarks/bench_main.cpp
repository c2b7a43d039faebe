#include <benchmark/benchmark.h>

#include "kolmolab/degiorgi.hpp"
#include "kolmolab/fd_solver.hpp"
#include "kolmolab/group_conv.hpp"
#include "kolmolab/kernel.hpp"
#include "kolmolab/lie_group.hpp"
#include "kolmolab/sde_oracle.hpp"

namespace {

using namespace kolmolab;

const StructureMatrix& kinetic() {
  static const StructureMatrix s = validate_structure(BlockSpec{1, {Eigen::MatrixXd::Constant(1, 1, 1.0)}});
  return s;
}

const KernelContext& ctx() {
  static const KernelContext c = kernel_context(kinetic());
  return c;
}

void BM_EvalKernel(benchmark::State& state) {
  Vec x(2);
  x << 0.3, -0.2;
  double t = 0.5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(eval_K(ctx(), x, t));
    x(0) += 1e-9;
  }
}
BENCHMARK(BM_EvalKernel);

void BM_Covariance(benchmark::State& state) {
  const StructureMatrix s = validate_structure(
      BlockSpec{1, {Eigen::MatrixXd::Constant(1, 1, 1.0), Eigen::MatrixXd::Constant(1, 1, 1.0)}});
  double t = 0.7;
  for (auto _ : state) {
    benchmark::DoNotOptimize(covariance(s, t).data());
    t += 1e-9;
  }
}
BENCHMARK(BM_Covariance);

void BM_LpNormQuadrature(benchmark::State& state) {
  const double p = 1.0 + 0.1 * static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(lp_norm_quadrature(ctx(), p, 1.0).value);
}
BENCHMARK(BM_LpNormQuadrature)->DenseRange(0, 4, 2)->Unit(benchmark::kMillisecond);

void BM_ExactSample(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Vec start = Vec::Zero(2);
  std::uint64_t seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(exact_sample(ctx(), start, 1.0, n, seed++).points.data());
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_ExactSample)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_GridConvolution(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const GridSpec sp{Vec::Constant(2, -1.0), Vec::Constant(2, 1.0), 0.0, 1.0, {n, n, n}};
  const GridField f = random_bump_field(sp, 3, 1), g = random_bump_field(sp, 3, 2);
  for (auto _ : state) benchmark::DoNotOptimize(convolve(f, g, kinetic()).values().data());
}
BENCHMARK(BM_GridConvolution)->Arg(6)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_KernelConvolution(benchmark::State& state) {
  const GridSpec sp{Vec::Constant(2, -1.0), Vec::Constant(2, 1.0), 0.0, 1.0, {10, 10, 8}};
  const GridField g = random_bump_field(sp, 3, 3);
  for (auto _ : state) benchmark::DoNotOptimize(convolve(kernel_closure(ctx()), g).values().data());
}
BENCHMARK(BM_KernelConvolution)->Unit(benchmark::kMillisecond);

void BM_FdSolve(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const ProductDomain dom{Vec::Constant(1, -1.0), Vec::Constant(1, 1.0), Vec::Constant(1, -1.0), Vec::Constant(1, 1.0),
                          0.5};
  const CoefficientSet co = identity_coefficients(1);
  const ScalarField data = [](const Vec& x, double t) { return std::cos(2 * x(0) + x(1) + t); };
  FdGrid grid;
  grid.cells = {n, n};
  for (auto _ : state) benchmark::DoNotOptimize(solve(dom, kinetic(), co, BoundaryData{data, data}, grid).M);
}
BENCHMARK(BM_FdSolve)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_LevelIteration(benchmark::State& state) {
  const GridSpec sp{Vec::Zero(2), Vec::Ones(2), 0.0, 1.0, {16, 16, 16}};
  GridField u(sp);
  for (auto& v : u.values()) v = 2.0;
  u[u.size() / 2] = 7.0;
  const ExponentBundle bundle = solve_exponents(4, 0.25);
  for (auto _ : state) benchmark::DoNotOptimize(run_level_iteration(u, 2.0, bundle).bound);
}
BENCHMARK(BM_LevelIteration)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
