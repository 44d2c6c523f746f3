#include "gradkrig/model_io.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace gradkrig {

using nlohmann::json;

void save_model(const std::string& path, const ModelFile& model) {
  json j;
  j["format"] = "gradkrig-model";
  j["version"] = model.version;

  json k;
  k["family"] = to_string(model.kernel.family());
  k["lengthscale"] = model.kernel.lengthscale();
  k["outputscale"] = model.kernel.outputscale();
  if (model.kernel.family() == KernelFamily::Spline) {
    k["spline_a"] = model.kernel.spline().a;
    k["spline_b"] = model.kernel.spline().b;
    k["spline_even"] = model.kernel.spline().even;
  }
  j["kernel"] = k;

  j["noise"] = {{"value", model.noise_value}, {"gradient", model.noise_gradient}};
  j["mean"] = {{"type", "constant"}, {"value", model.mean}};
  j["backend"] = to_string(model.backend);

  json cfg;
  cfg["grid_ratio"] = model.config.grid_ratio;
  cfg["max_grid_nodes"] = model.config.max_grid_nodes;
  cfg["dskip_rank"] = model.config.dskip_rank;
  cfg["cg_tol"] = model.config.cg.tol;
  cfg["cg_maxit"] = model.config.cg.max_iterations;
  cfg["precond"] = model.config.use_preconditioner;
  cfg["precond_rank"] = model.config.precond_rank;
  cfg["slq_probes"] = model.config.slq_probes;
  cfg["slq_steps"] = model.config.slq_steps;
  cfg["seed"] = model.config.seed;
  j["solver"] = cfg;

  if (model.grid) {
    json g;
    g["dims"] = std::vector<int>(model.grid->dims.data(),
                                 model.grid->dims.data() + model.grid->dims.size());
    g["origin"] = std::vector<double>(
        model.grid->origin.data(), model.grid->origin.data() + model.grid->origin.size());
    g["spacing"] = std::vector<double>(
        model.grid->spacing.data(),
        model.grid->spacing.data() + model.grid->spacing.size());
    j["grid"] = g;
  }

  if (model.projection) {
    std::vector<std::vector<double>> rows;
    for (Eigen::Index i = 0; i < model.projection->rows(); ++i) {
      std::vector<double> row(model.projection->cols());
      for (Eigen::Index c = 0; c < model.projection->cols(); ++c)
        row[c] = (*model.projection)(i, c);
      rows.push_back(std::move(row));
    }
    j["projection"] = rows;
  }

  j["data"] = {{"path", model.data_path}, {"with_gradients", model.with_gradients}};

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model file '" + path + "'");
  out << j.dump(2) << "\n";
}

ModelFile load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("model file '" + path + "' is not valid JSON: " + e.what());
  }
  if (j.value("format", "") != "gradkrig-model")
    throw std::runtime_error("'" + path + "' is not a gradkrig model file");

  ModelFile m;
  m.version = j.value("version", 1);
  if (m.version != 1)
    throw std::runtime_error("unsupported model file version " +
                             std::to_string(m.version));

  const auto& k = j.at("kernel");
  const auto family = kernel_family_from_string(k.at("family").get<std::string>());
  SplineConstants cs;
  if (family == KernelFamily::Spline) {
    cs.a = k.at("spline_a").get<double>();
    cs.b = k.at("spline_b").get<double>();
    cs.even = k.value("spline_even", false);
  }
  m.kernel = KernelSpec(family, k.at("lengthscale").get<double>(),
                        k.at("outputscale").get<double>(), cs);

  m.noise_value = j.at("noise").at("value").get<double>();
  m.noise_gradient = j.at("noise").at("gradient").get<double>();
  m.mean = j.at("mean").at("value").get<double>();
  m.backend = backend_from_string(j.at("backend").get<std::string>());

  if (j.contains("solver")) {
    const auto& cfg = j["solver"];
    m.config.grid_ratio = cfg.value("grid_ratio", m.config.grid_ratio);
    m.config.max_grid_nodes = cfg.value("max_grid_nodes", m.config.max_grid_nodes);
    m.config.dskip_rank = cfg.value("dskip_rank", m.config.dskip_rank);
    m.config.cg.tol = cfg.value("cg_tol", m.config.cg.tol);
    m.config.cg.max_iterations = cfg.value("cg_maxit", m.config.cg.max_iterations);
    m.config.use_preconditioner = cfg.value("precond", true);
    m.config.precond_rank = cfg.value("precond_rank", m.config.precond_rank);
    m.config.slq_probes = cfg.value("slq_probes", m.config.slq_probes);
    m.config.slq_steps = cfg.value("slq_steps", m.config.slq_steps);
    m.config.seed = cfg.value("seed", m.config.seed);
  }
  m.config.backend = m.backend;

  if (j.contains("grid")) {
    Grid g;
    auto dims = j["grid"].at("dims").get<std::vector<int>>();
    auto origin = j["grid"].at("origin").get<std::vector<double>>();
    auto spacing = j["grid"].at("spacing").get<std::vector<double>>();
    if (dims.size() != origin.size() || dims.size() != spacing.size())
      throw std::runtime_error("model grid descriptor is inconsistent");
    g.dims = Eigen::Map<Eigen::VectorXi>(dims.data(), Eigen::Index(dims.size()));
    g.origin = Eigen::Map<Eigen::VectorXd>(origin.data(), Eigen::Index(origin.size()));
    g.spacing = Eigen::Map<Eigen::VectorXd>(spacing.data(), Eigen::Index(spacing.size()));
    m.grid = g;
  }

  if (j.contains("projection")) {
    auto rows = j["projection"].get<std::vector<std::vector<double>>>();
    if (!rows.empty()) {
      Eigen::MatrixXd P(Eigen::Index(rows.size()), Eigen::Index(rows[0].size()));
      for (Eigen::Index i = 0; i < P.rows(); ++i) {
        if (Eigen::Index(rows[i].size()) != P.cols())
          throw std::runtime_error("model projection is ragged");
        for (Eigen::Index c = 0; c < P.cols(); ++c) P(i, c) = rows[i][c];
      }
      m.projection = P;
    }
  }

  m.data_path = j.at("data").at("path").get<std::string>();
  m.with_gradients = j.at("data").value("with_gradients", true);
  return m;
}

}  // namespace gradkrig
