#include <iostream>
#include <memory>

#include "common.hpp"
#include "gradkrig/bopt.hpp"
#include "gradkrig/testfns.hpp"

namespace gradkrig::cli {

namespace {

struct BoArgs {
  std::string function = "ackley";
  int dim = 5;
  int ambient = 50;
  double lo = -10.0, hi = 15.0;
  int budget = 100;
  int subspace_dim = 2;
  std::string method = "bo";  // bo | random | local
  std::string out_path = "bo_trace.csv";
  std::uint64_t seed = 0;
  int ei_starts = 32;
  int ei_iterations = 60;
  int fit_iterations = 12;
  std::string variance = "pivchol";
  int local_restarts = 5;
};

void write_trace(const std::string& path, const BoTrace& trace, int D) {
  std::vector<std::string> header = {"iteration"};
  for (int j = 0; j < D; ++j) header.push_back("x" + std::to_string(j + 1));
  header.push_back("f");
  header.push_back("best");
  header.push_back("wall_s");
  std::vector<std::vector<double>> rows;
  for (const auto& row : trace) {
    std::vector<double> r = {double(row.iteration)};
    for (int j = 0; j < D; ++j) r.push_back(row.x(j));
    r.push_back(row.value);
    r.push_back(row.best);
    r.push_back(row.wall_time_s);
    rows.push_back(std::move(r));
  }
  write_csv(path, header, rows);
}

void run_bo(const BoArgs& args) {
  TestFunction fn = test_function_by_name(args.function, args.dim);
  if (args.ambient > fn.dim) fn = embed(fn, args.ambient, args.seed, args.lo, args.hi);
  const int D = fn.dim;
  Eigen::MatrixXd bounds(D, 2);
  bounds.col(0).setConstant(args.lo);
  bounds.col(1).setConstant(args.hi);
  auto objective = objective_from(fn);

  std::cout << "bo: " << args.function << " dim=" << args.dim << " ambient=" << D
            << " box=[" << args.lo << "," << args.hi << "] budget=" << args.budget
            << " d=" << args.subspace_dim << " seed=" << args.seed
            << " method=" << args.method << "\n";

  BoTrace trace;
  if (args.method == "random") {
    trace = baseline_random(objective, bounds, args.budget, args.seed);
  } else if (args.method == "local") {
    trace = baseline_local(objective, bounds, args.budget, args.seed,
                           args.local_restarts);
  } else {
    BoConfig cfg;
    cfg.ei_starts = args.ei_starts;
    cfg.ei_iterations = args.ei_iterations;
    cfg.fit.max_iterations = args.fit_iterations;
    cfg.fit.restarts = 1;
    if (args.variance == "exact") cfg.variance = BoVariance::Exact;
    if (args.variance == "randomized") cfg.variance = BoVariance::Randomized;
    try {
      trace = bo_run(objective, bounds, args.budget, args.subspace_dim, args.seed, cfg);
    } catch (const BoAbortError& e) {
      // resumable snapshot of everything sampled so far
      Dataset dump;
      dump.X = e.X;
      dump.y = e.y;
      dump.G = e.G;
      const std::string dump_path = args.out_path + ".aborted.csv";
      write_dataset_csv(dump_path, dump);
      std::cerr << "bo aborted after " << e.iteration
                << " evaluations: " << e.what() << "\n  state dumped to " << dump_path
                << "\n";
      throw std::runtime_error(std::string("bo aborted: ") + e.what());
    }
  }

  write_trace(args.out_path, trace, D);
  std::cout << "  final best " << (trace.empty() ? 0.0 : trace.back().best)
            << " after " << trace.size() << " evaluations\n  trace written to "
            << args.out_path << "\n";
}

}  // namespace

void register_bo(CLI::App& app) {
  auto args = std::make_shared<BoArgs>();
  auto* cmd = app.add_subcommand(
      "bo", "Bayesian optimization with gradients and active-subspace learning");
  cmd->add_option("--function", args->function, "objective test function");
  cmd->add_option("--dim", args->dim, "intrinsic dimension of the objective");
  cmd->add_option("--ambient", args->ambient, "embedding dimension (0: none)");
  cmd->add_option("--lo", args->lo, "box lower bound");
  cmd->add_option("--hi", args->hi, "box upper bound");
  cmd->add_option("--budget", args->budget, "total objective evaluations");
  cmd->add_option("--subspace-dim", args->subspace_dim, "reduced dimension d");
  cmd->add_option("--method", args->method, "bo, random or local")
      ->check(CLI::IsMember({"bo", "random", "local"}));
  cmd->add_option("--out", args->out_path, "trace CSV path");
  cmd->add_option("--seed", args->seed, "random seed");
  cmd->add_option("--ei-starts", args->ei_starts, "EI multi-start count");
  cmd->add_option("--ei-iters", args->ei_iterations, "EI ascent iterations");
  cmd->add_option("--fit-iters", args->fit_iterations, "GP refit iterations");
  cmd->add_option("--variance", args->variance, "EI variance path")
      ->check(CLI::IsMember({"exact", "pivchol", "randomized"}));
  cmd->add_option("--local-restarts", args->local_restarts, "local baseline restarts");
  cmd->callback([args]() { run_bo(*args); });
}

}  // namespace gradkrig::cli
