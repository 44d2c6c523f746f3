#include "gradkrig/io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gradkrig {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  size_t b = s.find_last_not_of(" \t\r\n");
  return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(trim(cur));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double parse_number(const std::string& token, Eigen::Index row, Eigen::Index col,
                    const std::string& path) {
  try {
    size_t used = 0;
    double v = std::stod(token, &used);
    if (used != token.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(path + ": malformed number '" + token + "' at row " +
                             std::to_string(row + 1) + ", column " +
                             std::to_string(col + 1));
  }
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

ObservationSet Dataset::to_observations(double noise_value, double noise_gradient) const {
  ObservationSet obs;
  obs.X = X;
  obs.y = y;
  obs.dY = G;
  obs.noise_value = noise_value;
  obs.noise_gradient = noise_gradient;
  obs.validate();
  return obs;
}

Dataset Dataset::from_observations(const ObservationSet& data) {
  Dataset out;
  out.X = data.X;
  out.y = data.y;
  out.G = data.dY;
  return out;
}

Dataset read_dataset_csv(const std::string& path, bool require_y) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  auto header = split_csv_line(line);

  int dim = 0, gdim = 0, ycol = -1;
  std::vector<int> xcols(header.size(), -1), gcols(header.size(), -1);
  for (size_t c = 0; c < header.size(); ++c) {
    std::string h = header[c];
    std::transform(h.begin(), h.end(), h.begin(), ::tolower);
    if (h == "y") {
      ycol = int(c);
    } else if (h.size() > 1 && h[0] == 'x') {
      int idx = std::atoi(h.c_str() + 1);
      if (idx <= 0) throw std::runtime_error(path + ": bad header column '" + header[c] + "'");
      xcols[c] = idx - 1;
      dim = std::max(dim, idx);
    } else if (h.size() > 1 && h[0] == 'g') {
      int idx = std::atoi(h.c_str() + 1);
      if (idx <= 0) throw std::runtime_error(path + ": bad header column '" + header[c] + "'");
      gcols[c] = idx - 1;
      gdim = std::max(gdim, idx);
    } else {
      throw std::runtime_error(path + ": unrecognized header column '" + header[c] + "'");
    }
  }
  if (ycol < 0 && require_y) throw std::runtime_error(path + ": missing 'y' column");
  if (dim == 0) throw std::runtime_error(path + ": missing x columns");
  if (gdim != 0 && gdim != dim)
    throw std::runtime_error(path + ": gradient columns must match the input dimension");

  std::vector<std::vector<double>> rows;
  Eigen::Index r = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw std::runtime_error(path + ": row " + std::to_string(r + 2) + " has " +
                               std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(header.size()));
    std::vector<double> vals(cells.size());
    for (size_t c = 0; c < cells.size(); ++c) vals[c] = parse_number(cells[c], r + 1, c, path);
    rows.push_back(std::move(vals));
    ++r;
  }

  Dataset out;
  out.X.resize(r, dim);
  out.y = Eigen::VectorXd::Zero(r);
  if (gdim > 0) out.G.resize(r, dim);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (size_t c = 0; c < header.size(); ++c) {
      if (int(c) == ycol)
        out.y(i) = rows[i][c];
      else if (xcols[c] >= 0)
        out.X(i, xcols[c]) = rows[i][c];
      else if (gcols[c] >= 0)
        out.G(i, gcols[c]) = rows[i][c];
    }
  }
  return out;
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  const int d = data.dim();
  for (int j = 0; j < d; ++j) out << "x" << (j + 1) << ",";
  out << "y";
  if (data.has_gradients())
    for (int j = 0; j < d; ++j) out << ",g" << (j + 1);
  out << "\n";
  for (Eigen::Index i = 0; i < data.points(); ++i) {
    for (int j = 0; j < d; ++j) out << format_number(data.X(i, j)) << ",";
    out << format_number(data.y(i));
    if (data.has_gradients())
      for (int j = 0; j < d; ++j) out << "," << format_number(data.G(i, j));
    out << "\n";
  }
}

Raster read_esri_ascii(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  Raster r;
  Eigen::Index nrows = -1, ncols = -1;
  std::string key;
  // header: ncols, nrows, xllcorner, yllcorner, cellsize, optional NODATA_value
  for (int i = 0; i < 6; ++i) {
    auto pos = in.tellg();
    if (!(in >> key)) throw std::runtime_error(path + ": truncated header");
    std::string lower = key;
    std::transform(lower.begin(), lower.end(), lower.begin(), ::tolower);
    if (lower == "ncols") in >> ncols;
    else if (lower == "nrows") in >> nrows;
    else if (lower == "xllcorner") in >> r.xll;
    else if (lower == "yllcorner") in >> r.yll;
    else if (lower == "cellsize") in >> r.cell;
    else if (lower == "nodata_value") in >> r.nodata;
    else {
      in.seekg(pos);  // start of data
      break;
    }
  }
  if (nrows <= 0 || ncols <= 0)
    throw std::runtime_error(path + ": missing or invalid nrows/ncols");
  r.values.resize(nrows, ncols);
  for (Eigen::Index i = 0; i < nrows; ++i)
    for (Eigen::Index j = 0; j < ncols; ++j)
      if (!(in >> r.values(i, j)))
        throw std::runtime_error(path + ": raster data ends early at row " +
                                 std::to_string(i + 1));
  return r;
}

void write_esri_ascii(const std::string& path, const Raster& raster) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "ncols " << raster.cols() << "\n"
      << "nrows " << raster.rows() << "\n"
      << "xllcorner " << format_number(raster.xll) << "\n"
      << "yllcorner " << format_number(raster.yll) << "\n"
      << "cellsize " << format_number(raster.cell) << "\n"
      << "NODATA_value " << format_number(raster.nodata) << "\n";
  for (Eigen::Index i = 0; i < raster.rows(); ++i) {
    for (Eigen::Index j = 0; j < raster.cols(); ++j) {
      if (j) out << " ";
      out << format_number(raster.values(i, j));
    }
    out << "\n";
  }
}

Raster read_grid_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  Eigen::Index r = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    std::vector<double> vals(cells.size());
    for (size_t c = 0; c < cells.size(); ++c) vals[c] = parse_number(cells[c], r, c, path);
    if (!rows.empty() && vals.size() != rows.front().size())
      throw std::runtime_error(path + ": ragged row " + std::to_string(r + 1) +
                               " (grid input must be rectangular)");
    rows.push_back(std::move(vals));
    ++r;
  }
  if (rows.empty()) throw std::runtime_error(path + ": empty grid");
  Raster out;
  out.values.resize(Eigen::Index(rows.size()), Eigen::Index(rows.front().size()));
  for (Eigen::Index i = 0; i < out.values.rows(); ++i)
    for (Eigen::Index j = 0; j < out.values.cols(); ++j) out.values(i, j) = rows[i][j];
  return out;
}

void write_grid_csv(const std::string& path, const Raster& raster) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  for (Eigen::Index i = 0; i < raster.rows(); ++i) {
    for (Eigen::Index j = 0; j < raster.cols(); ++j) {
      if (j) out << ",";
      out << format_number(raster.values(i, j));
    }
    out << "\n";
  }
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  for (size_t c = 0; c < header.size(); ++c) {
    if (c) out << ",";
    out << header[c];
  }
  out << "\n";
  for (const auto& row : rows) {
    for (size_t c = 0; c < row.size(); ++c) {
      if (c) out << ",";
      out << format_number(row[c]);
    }
    out << "\n";
  }
}

}  // namespace gradkrig
