#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>

#include "gradkrig/gp.hpp"
#include "gradkrig/interpolation.hpp"
#include "gradkrig/kernels.hpp"

namespace gradkrig {

/// Versioned on-disk model description (JSON). Holds everything needed to
/// rebuild a GpModel given the referenced data file: kernel family and
/// hyperparameters, noise levels, mean, backend and its controls, the grid
/// descriptor, and an optional active-subspace projection.
struct ModelFile {
  int version = 1;
  KernelSpec kernel{KernelFamily::SquaredExponential, 1.0, 1.0};
  double noise_value = 1e-2;
  double noise_gradient = 1e-2;
  double mean = 0.0;
  GpBackend backend = GpBackend::Exact;
  GpConfig config;
  std::optional<Grid> grid;                  // D-SKI grid actually used
  std::optional<Eigen::MatrixXd> projection; // active-subspace P (D x d)
  std::string data_path;
  bool with_gradients = true;
};

void save_model(const std::string& path, const ModelFile& model);
ModelFile load_model(const std::string& path);

}  // namespace gradkrig
