#include <iostream>
#include <memory>

#include "common.hpp"
#include "gradkrig/model_io.hpp"

namespace gradkrig::cli {

namespace {

struct PredictArgs {
  std::string model_path;
  std::string test_path;
  std::string out_path = "predictions.csv";
  std::string variance = "pivchol";
  int probes = 64;
  std::uint64_t seed = 0;
  bool gradients = false;
};

void run_predict(const PredictArgs& args) {
  ModelFile m = load_model(args.model_path);
  Dataset train = read_dataset_csv(m.data_path);
  if (!m.with_gradients) train.G.resize(0, 0);
  ObservationSet data = train.to_observations(m.noise_value, m.noise_gradient);

  Dataset test = read_dataset_csv(args.test_path, false);
  Eigen::MatrixXd Xtest = test.X;

  if (m.projection) {
    data.X = data.X * *m.projection;
    if (data.has_gradients()) data.dY = data.dY * *m.projection;
    Xtest = Xtest * *m.projection;
  }

  GpModel model(m.kernel, data, m.config);
  model.set_hyperparameters(m.kernel, m.noise_value, m.noise_gradient);

  auto [mean, grads] = model.predict_mean_grad(Xtest);

  Eigen::VectorXd variance(Xtest.rows());
  if (args.variance == "randomized") {
    variance = model.predict_variance_randomized(Xtest, args.probes, args.seed);
  } else {
    for (Eigen::Index t = 0; t < Xtest.rows(); ++t) {
      Eigen::VectorXd x = Xtest.row(t);
      variance(t) = args.variance == "exact" ? model.predict_variance_exact(x)
                                             : model.predict_variance_pivchol(x);
    }
  }

  std::vector<std::string> header;
  for (int j = 0; j < test.dim(); ++j) header.push_back("x" + std::to_string(j + 1));
  header.push_back("mean");
  header.push_back("variance");
  if (args.gradients)
    for (int j = 0; j < int(grads.cols()); ++j)
      header.push_back("dmean" + std::to_string(j + 1));

  std::vector<std::vector<double>> rows;
  for (Eigen::Index t = 0; t < Xtest.rows(); ++t) {
    std::vector<double> row;
    for (int j = 0; j < test.dim(); ++j) row.push_back(test.X(t, j));
    row.push_back(mean(t));
    row.push_back(variance(t));
    if (args.gradients)
      for (int j = 0; j < int(grads.cols()); ++j) row.push_back(grads(t, j));
    rows.push_back(std::move(row));
  }
  write_csv(args.out_path, header, rows);
  std::cout << "predict: " << Xtest.rows() << " points, variance=" << args.variance
            << ", written to " << args.out_path << "\n";
}

}  // namespace

void register_predict(CLI::App& app) {
  auto args = std::make_shared<PredictArgs>();
  auto* cmd = app.add_subcommand("predict", "predict mean and variance from a model file");
  cmd->add_option("--model", args->model_path, "model JSON from 'fit'")->required();
  cmd->add_option("--test", args->test_path, "test CSV (x1..xD[, y ignored])")->required();
  cmd->add_option("--out", args->out_path, "output CSV path");
  cmd->add_option("--variance", args->variance, "variance estimator")
      ->check(CLI::IsMember({"exact", "pivchol", "randomized"}));
  cmd->add_option("--probes", args->probes, "probes for the randomized estimator");
  cmd->add_option("--seed", args->seed, "seed for the randomized estimator");
  cmd->add_flag("--gradients", args->gradients, "also write predicted gradient columns");
  cmd->callback([args]() { run_predict(*args); });
}

}  // namespace gradkrig::cli
