#include <chrono>
#include <iostream>
#include <memory>

#include "common.hpp"
#include "gradkrig/dski.hpp"
#include "gradkrig/dskip.hpp"
#include "gradkrig/rng.hpp"
#include "gradkrig/testfns.hpp"

namespace gradkrig::cli {

namespace {

struct BenchArgs {
  std::string backend = "dski";
  std::vector<Eigen::Index> sizes = {2000, 4000, 8000, 16000};
  int dim = 2;
  int reps = 7;
  std::string out_path = "mvm_bench.csv";
  std::uint64_t seed = 0;
  int grid_nodes = 32;  // fixed grid per dimension
  Eigen::Index rank = 100;
};

double median_mvm_seconds(const LinearOperator& op, int reps, std::uint64_t seed) {
  Eigen::VectorXd v = gaussian_vector(op.size(), seed);
  Eigen::VectorXd out(op.size());
  op.mvm(v, out);  // warm up
  std::vector<double> times;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    op.mvm(v, out);
    times.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  std::sort(times.begin(), times.end());
  return times[times.size() / 2];
}

void run_bench(const BenchArgs& args) {
  const GpBackend backend = backend_from_string(args.backend);
  KernelSpec kernel(KernelFamily::SquaredExponential, 0.4, 1.0);

  std::vector<std::vector<double>> rows;
  std::vector<double> logn, logt;
  for (Eigen::Index n : args.sizes) {
    // uniform points on the unit cube
    Eigen::MatrixXd X(n, args.dim);
    auto rng = seeded_rng(args.seed, n);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (Eigen::Index i = 0; i < n; ++i)
      for (int j = 0; j < args.dim; ++j) X(i, j) = unif(rng);

    std::shared_ptr<LinearOperator> op;
    switch (backend) {
      case GpBackend::Dski: {
        Grid g;
        g.dims = Eigen::VectorXi::Constant(args.dim, args.grid_nodes);
        g.origin = Eigen::VectorXd::Constant(args.dim, -0.25);
        g.spacing = Eigen::VectorXd::Constant(
            args.dim, 1.5 / double(args.grid_nodes - 1));
        op = std::make_shared<DskiOperator>(kernel, g, X, NoiseLevels{0.1, 0.1});
        break;
      }
      case GpBackend::Dskip: {
        DskipConfig cfg;
        cfg.rank = args.rank;
        cfg.seed = args.seed;
        op = std::make_shared<DskipOperator>(kernel, X, NoiseLevels{0.1, 0.1}, cfg);
        break;
      }
      case GpBackend::Exact: {
        AssemblyOptions opts;
        opts.size_cap = 400'000'000;
        Eigen::MatrixXd K = assemble_dense(kernel, X, X, opts);
        op = std::make_shared<DenseOperator>(std::move(K));
        break;
      }
    }
    const double sec = median_mvm_seconds(*op, args.reps, args.seed + 7);
    rows.push_back({double(n), double(op->size()), sec});
    logn.push_back(std::log(double(n)));
    logt.push_back(std::log(sec));
    std::cout << "n=" << n << " N=" << op->size() << " mvm[s]=" << sec << "\n";
  }

  // least-squares slope of log(time) against log(n)
  const auto m = double(logn.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < logn.size(); ++i) {
    sx += logn[i];
    sy += logt[i];
    sxx += logn[i] * logn[i];
    sxy += logn[i] * logt[i];
  }
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  std::cout << "log-log slope: " << slope << "\n";

  write_csv(args.out_path, {"n", "N", "seconds"}, rows);
  std::cout << "timings written to " << args.out_path << "\n";
}

}  // namespace

void register_benchmark_mvm(CLI::App& app) {
  auto args = std::make_shared<BenchArgs>();
  auto* cmd = app.add_subcommand("benchmark-mvm", "MVM timings over growing n");
  cmd->add_option("--backend", args->backend, "exact, dski or dskip")
      ->check(CLI::IsMember({"exact", "dski", "dskip"}));
  cmd->add_option("--sizes", args->sizes, "point counts to time")->delimiter(',');
  cmd->add_option("--dim", args->dim, "input dimension");
  cmd->add_option("--reps", args->reps, "repetitions per size (median reported)");
  cmd->add_option("--out", args->out_path, "output CSV");
  cmd->add_option("--seed", args->seed, "random seed");
  cmd->add_option("--grid-nodes", args->grid_nodes, "fixed D-SKI grid nodes per dim");
  cmd->add_option("--rank", args->rank, "D-SKIP rank");
  cmd->callback([args]() { run_bench(*args); });
}

}  // namespace gradkrig::cli
