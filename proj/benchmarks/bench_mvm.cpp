#include <benchmark/benchmark.h>

#include <Eigen/Dense>
#include <map>
#include <memory>

#include "gradkrig/dski.hpp"
#include "gradkrig/dskip.hpp"
#include "gradkrig/rng.hpp"

namespace {

using namespace gradkrig;

Eigen::MatrixXd unit_cube_points(Eigen::Index n, int d, std::uint64_t seed) {
  auto rng = seeded_rng(seed, n);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd X(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) X(i, j) = unif(rng);
  return X;
}

const DskiOperator& dski_operator(Eigen::Index n) {
  static std::map<Eigen::Index, std::unique_ptr<DskiOperator>> cache;
  auto& slot = cache[n];
  if (!slot) {
    KernelSpec kernel(KernelFamily::SquaredExponential, 0.4, 1.0);
    Grid g;
    g.dims = Eigen::VectorXi::Constant(2, 32);  // fixed grid across sizes
    g.origin = Eigen::VectorXd::Constant(2, -0.25);
    g.spacing = Eigen::VectorXd::Constant(2, 1.5 / 31.0);
    slot = std::make_unique<DskiOperator>(kernel, g, unit_cube_points(n, 2, 1),
                                          NoiseLevels{0.1, 0.1});
  }
  return *slot;
}

const DskipOperator& dskip_operator(Eigen::Index n, int d) {
  static std::map<std::pair<Eigen::Index, int>, std::unique_ptr<DskipOperator>> cache;
  auto& slot = cache[{n, d}];
  if (!slot) {
    KernelSpec kernel(KernelFamily::SquaredExponential, 0.4, 1.0);
    DskipConfig cfg;
    cfg.rank = 60;
    slot = std::make_unique<DskipOperator>(kernel, unit_cube_points(n, d, 2),
                                           NoiseLevels{0.1, 0.1}, cfg);
  }
  return *slot;
}

void BM_DskiMvm2D(benchmark::State& state) {
  const auto& op = dski_operator(state.range(0));
  Eigen::VectorXd v = gaussian_vector(op.size(), 7);
  Eigen::VectorXd out(op.size());
  for (auto _ : state) {
    op.mvm(v, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DskiMvm2D)->Arg(2000)->Arg(4000)->Arg(8000)->Arg(16000)->Complexity();

void BM_DskipMvm11D(benchmark::State& state) {
  const auto& op = dskip_operator(state.range(0), 11);
  Eigen::VectorXd v = gaussian_vector(op.size(), 8);
  Eigen::VectorXd out(op.size());
  for (auto _ : state) {
    op.mvm(v, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DskipMvm11D)->Arg(250)->Arg(500)->Arg(1000)->Complexity();

void BM_DenseMvm(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  KernelSpec kernel(KernelFamily::SquaredExponential, 0.4, 1.0);
  Eigen::MatrixXd X = unit_cube_points(n, 2, 3);
  Eigen::MatrixXd K = assemble_dense(kernel, X, X, true);
  Eigen::VectorXd v = gaussian_vector(K.rows(), 9);
  Eigen::VectorXd out(K.rows());
  for (auto _ : state) {
    out.noalias() = K * v;
    benchmark::DoNotOptimize(out.data());
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_DenseMvm)->Arg(250)->Arg(500)->Arg(1000)->Complexity();

void BM_DskiDiagonal(benchmark::State& state) {
  const auto& op = dski_operator(state.range(0));
  for (auto _ : state) {
    Eigen::VectorXd diag = op.diagonal();
    benchmark::DoNotOptimize(diag.data());
  }
}
BENCHMARK(BM_DskiDiagonal)->Arg(2000)->Arg(8000);

void BM_DskiRow(benchmark::State& state) {
  const auto& op = dski_operator(state.range(0));
  Eigen::Index i = 0;
  for (auto _ : state) {
    Eigen::VectorXd row = op.row(i);
    benchmark::DoNotOptimize(row.data());
    i = (i + 37) % op.size();
  }
}
BENCHMARK(BM_DskiRow)->Arg(2000)->Arg(8000);

}  // namespace
