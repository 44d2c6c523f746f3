#include <benchmark/benchmark.h>

#include <Eigen/Dense>
#include <memory>

#include "gradkrig/dski.hpp"
#include "gradkrig/linalg.hpp"
#include "gradkrig/testfns.hpp"

namespace {

using namespace gradkrig;

struct SolveSetup {
  std::unique_ptr<DskiOperator> op;
  Eigen::VectorXd rhs;
  std::unique_ptr<Preconditioner> precond;
};

const SolveSetup& solve_setup() {
  static SolveSetup s = [] {
    SolveSetup out;
    auto data = sample_dataset(franke(), 2000, SamplingScheme::Uniform, 3, 0.0, 0.0, true);
    KernelSpec kernel(KernelFamily::SquaredExponential, 0.3, 1.0);
    Grid grid = Grid::cover(data.X, 0.3 / 5.0, 3, 64);
    out.op = std::make_unique<DskiOperator>(kernel, grid, data.X, NoiseLevels{0.05, 0.05});
    out.rhs = data.stacked_targets(data.y.mean());

    Eigen::VectorXd nd = out.op->noise_diagonal();
    Eigen::VectorXd diag = out.op->diagonal() - nd;
    auto row_fn = [&](Eigen::Index i) -> Eigen::VectorXd {
      Eigen::VectorXd r = out.op->row(i);
      r(i) -= nd(i);
      return r;
    };
    auto factor = pivoted_cholesky(diag.cwiseMax(0.0), row_fn, 100, 0.0);
    out.precond = std::make_unique<Preconditioner>(factor.L, nd);
    return out;
  }();
  return s;
}

void BM_CgSolve(benchmark::State& state) {
  const auto& s = solve_setup();
  for (auto _ : state) {
    auto res = cg(*s.op, s.rhs, {1e-4, 2000});
    benchmark::DoNotOptimize(res.x.data());
    state.counters["iters"] = res.iterations;
  }
}
BENCHMARK(BM_CgSolve)->Unit(benchmark::kMillisecond);

void BM_PcgSolve(benchmark::State& state) {
  const auto& s = solve_setup();
  for (auto _ : state) {
    auto res = cg(*s.op, s.rhs, {1e-4, 2000}, s.precond->as_apply());
    benchmark::DoNotOptimize(res.x.data());
    state.counters["iters"] = res.iterations;
  }
}
BENCHMARK(BM_PcgSolve)->Unit(benchmark::kMillisecond);

void BM_PivotedCholeskyBuild(benchmark::State& state) {
  const auto& s = solve_setup();
  Eigen::VectorXd nd = s.op->noise_diagonal();
  Eigen::VectorXd diag = s.op->diagonal() - nd;
  for (auto _ : state) {
    auto factor = pivoted_cholesky(
        diag.cwiseMax(0.0),
        [&](Eigen::Index i) -> Eigen::VectorXd {
          Eigen::VectorXd r = s.op->row(i);
          r(i) -= nd(i);
          return r;
        },
        state.range(0), 0.0);
    benchmark::DoNotOptimize(factor.L.data());
  }
}
BENCHMARK(BM_PivotedCholeskyBuild)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_SlqLogdet(benchmark::State& state) {
  const auto& s = solve_setup();
  for (auto _ : state) {
    auto res = slq_logdet(*s.op, {10, 50, 1, 1e-12});
    benchmark::DoNotOptimize(res.logdet);
  }
}
BENCHMARK(BM_SlqLogdet)->Unit(benchmark::kMillisecond);

}  // namespace
