#include <iostream>
#include <memory>

#include "common.hpp"
#include "gradkrig/rng.hpp"
#include "gradkrig/subspace.hpp"
#include "gradkrig/testfns.hpp"

namespace gradkrig::cli {

namespace {

struct SubspaceArgs {
  std::string data_path;  // dataset CSV with g1..gD columns
  std::string function;   // or: sample a named test function
  int dim = 0;
  int ambient = 0;  // embed the function when larger than its dimension
  Eigen::Index samples = 500;
  int subspace_dim = 0;  // 0: 99% eigenvalue mass rule
  std::string eig_path = "eigenvalues.csv";
  std::string proj_path = "projection.csv";
  std::uint64_t seed = 0;
};

void run_subspace(const SubspaceArgs& args) {
  Eigen::MatrixXd G;
  if (!args.data_path.empty()) {
    Dataset data = read_dataset_csv(args.data_path);
    if (!data.has_gradients())
      throw std::runtime_error(args.data_path + ": no gradient columns (g1..gD)");
    G = data.G;
  } else if (!args.function.empty()) {
    TestFunction fn = test_function_by_name(args.function, args.dim);
    if (args.ambient > fn.dim) fn = embed(fn, args.ambient, args.seed, -1.0, 1.0);
    auto rng = seeded_rng(args.seed, 5);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    G.resize(args.samples, fn.dim);
    for (Eigen::Index i = 0; i < args.samples; ++i) {
      Eigen::VectorXd x(fn.dim);
      for (int j = 0; j < fn.dim; ++j)
        x(j) = fn.domain(j, 0) + (fn.domain(j, 1) - fn.domain(j, 0)) * unif(rng);
      G.row(i) = fn.gradient(x).transpose();
    }
  } else {
    throw std::invalid_argument("active-subspace needs --data or --function");
  }

  auto as = estimate_active_subspace(G);
  const int d = args.subspace_dim > 0 ? args.subspace_dim
                                      : select_subspace_dimension(as.eigenvalues);

  std::vector<std::vector<double>> eig_rows;
  for (Eigen::Index i = 0; i < as.eigenvalues.size(); ++i)
    eig_rows.push_back({double(i + 1), as.eigenvalues(i)});
  write_csv(args.eig_path, {"index", "eigenvalue"}, eig_rows);

  Eigen::MatrixXd P = as.projection.leftCols(d);
  std::vector<std::string> header;
  for (int c = 0; c < d; ++c) header.push_back("p" + std::to_string(c + 1));
  std::vector<std::vector<double>> proj_rows;
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    std::vector<double> row(d);
    for (int c = 0; c < d; ++c) row[c] = P(i, c);
    proj_rows.push_back(std::move(row));
  }
  write_csv(args.proj_path, header, proj_rows);

  std::cout << "active-subspace: " << G.rows() << " gradient samples in dimension "
            << G.cols() << "\n  leading eigenvalues:";
  for (Eigen::Index i = 0; i < std::min<Eigen::Index>(10, as.eigenvalues.size()); ++i)
    std::cout << " " << as.eigenvalues(i);
  std::cout << "\n  selected subspace dimension: " << d << "\n  eigenvalues -> "
            << args.eig_path << ", projection -> " << args.proj_path << "\n";
}

}  // namespace

void register_active_subspace(CLI::App& app) {
  auto args = std::make_shared<SubspaceArgs>();
  auto* cmd = app.add_subcommand("active-subspace",
                                 "gradient covariance spectrum and projection");
  cmd->add_option("--data", args->data_path, "dataset CSV with gradient columns");
  cmd->add_option("--function", args->function, "named test function to sample");
  cmd->add_option("--dim", args->dim, "dimension for parametric functions");
  cmd->add_option("--ambient", args->ambient, "embed the function into this dimension");
  cmd->add_option("--samples", args->samples, "Monte Carlo gradient samples");
  cmd->add_option("--subspace-dim", args->subspace_dim,
                  "projection columns (0: 99% mass rule)");
  cmd->add_option("--eigenvalues", args->eig_path, "eigenvalue CSV output");
  cmd->add_option("--projection", args->proj_path, "projection CSV output");
  cmd->add_option("--seed", args->seed, "random seed");
  cmd->callback([args]() { run_subspace(*args); });
}

}  // namespace gradkrig::cli
