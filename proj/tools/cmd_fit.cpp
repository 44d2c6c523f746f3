#include <chrono>
#include <iostream>
#include <memory>

#include "common.hpp"
#include "gradkrig/model_io.hpp"

namespace gradkrig::cli {

namespace {

struct FitArgs {
  CommonOptions common;
  std::string data_path;
  std::string model_path = "model.json";
  int iterations = 40;
  int restarts = 3;
  bool ignore_gradients = false;
};

void run_fit(const FitArgs& args) {
  const auto t0 = std::chrono::steady_clock::now();
  Dataset raw = read_dataset_csv(args.data_path);
  if (args.ignore_gradients) raw.G.resize(0, 0);
  ObservationSet data = raw.to_observations(args.common.noise, args.common.noise_gradient);

  KernelSpec kernel = make_kernel(args.common, data.X);
  GpConfig cfg = make_gp_config(args.common);
  GpModel model(kernel, data, cfg);

  FitOptions fopts;
  fopts.max_iterations = args.iterations;
  fopts.restarts = args.restarts;
  fopts.seed = args.common.seed;
  FitResult res = model.fit(fopts);

  ModelFile out;
  out.kernel = res.kernel;
  out.noise_value = res.noise_value;
  out.noise_gradient = res.noise_gradient;
  out.mean = model.mean();
  out.backend = cfg.backend;
  out.config = cfg;
  out.data_path = args.data_path;
  out.with_gradients = data.has_gradients();
  save_model(args.model_path, out);

  const double wall = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t0).count();
  int iters = 0;
  for (const auto& r : res.restarts) iters += r.iterations;
  std::cout << "fit: n=" << data.points() << " d=" << data.dim()
            << " gradients=" << (data.has_gradients() ? "yes" : "no")
            << " backend=" << to_string(cfg.backend) << "\n"
            << "  ell=" << res.kernel.lengthscale()
            << " s=" << res.kernel.outputscale() << " sigma1=" << res.noise_value
            << " sigma2=" << res.noise_gradient << "\n"
            << "  log-marginal=" << res.log_marginal << " iterations=" << iters
            << " wall[s]=" << wall << "\n"
            << "  model written to " << args.model_path << "\n";
}

}  // namespace

void register_fit(CLI::App& app) {
  auto args = std::make_shared<FitArgs>();
  auto* cmd = app.add_subcommand("fit", "fit hyperparameters and write a model file");
  cmd->add_option("--data", args->data_path, "training CSV (x1..xD, y[, g1..gD])")
      ->required();
  cmd->add_option("--model", args->model_path, "output model JSON path");
  cmd->add_option("--iters", args->iterations, "optimizer iterations");
  cmd->add_option("--restarts", args->restarts, "optimizer restarts");
  cmd->add_flag("--no-gradients", args->ignore_gradients,
                "ignore gradient columns even if present");
  add_common_flags(cmd, args->common);
  cmd->callback([args]() { run_fit(*args); });
}

}  // namespace gradkrig::cli
