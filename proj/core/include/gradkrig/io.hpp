#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "gradkrig/observations.hpp"

namespace gradkrig {

/// Tabular dataset with the CSV schema: header row, columns x1..xD, y and
/// optionally g1..gD. Missing gradient columns mean value-only data.
struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  Eigen::MatrixXd G;  // empty when the file has no gradient columns

  bool has_gradients() const { return G.size() > 0; }
  int dim() const { return static_cast<int>(X.cols()); }
  Eigen::Index points() const { return X.rows(); }

  ObservationSet to_observations(double noise_value, double noise_gradient) const;
  static Dataset from_observations(const ObservationSet& data);
};

/// `require_y = false` permits input-only files (prediction inputs); y is
/// then zero-filled.
Dataset read_dataset_csv(const std::string& path, bool require_y = true);
void write_dataset_csv(const std::string& path, const Dataset& data);

/// Rectangular elevation raster; values(r, c) with row 0 at yllcorner +
/// (rows-1) * cell (ESRI convention: first file row is the top).
struct Raster {
  double xll = 0.0;
  double yll = 0.0;
  double cell = 1.0;
  double nodata = -9999.0;
  Eigen::MatrixXd values;  // rows x cols

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
  double x_of(Eigen::Index c) const { return xll + cell * double(c); }
  double y_of(Eigen::Index r) const { return yll + cell * double(rows() - 1 - r); }
};

Raster read_esri_ascii(const std::string& path);
void write_esri_ascii(const std::string& path, const Raster& raster);

/// Headerless rectangular CSV grid of values (unit cell, origin zero).
Raster read_grid_csv(const std::string& path);
void write_grid_csv(const std::string& path, const Raster& raster);

/// Plain CSV report writer: one header row, numeric cells.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

}  // namespace gradkrig
