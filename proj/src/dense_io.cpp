#include "irpg/dense_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace irpg {

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << m.rows() << "," << m.cols() << "\n";
  char buf[64];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      out << buf;
      if (j + 1 < m.cols()) out << ",";
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty file: " + path);
  Eigen::Index rows = 0, cols = 0;
  {
    std::istringstream hdr(line);
    char comma = 0;
    if (!(hdr >> rows >> comma >> cols) || comma != ',' || rows < 0 || cols < 0)
      throw std::runtime_error("bad header in " + path);
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (!std::getline(in, line))
      throw std::runtime_error("truncated file: " + path);
    std::istringstream row(line);
    std::string cell;
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (!std::getline(row, cell, ','))
        throw std::runtime_error("short row in " + path);
      m(i, j) = std::stod(cell);
    }
  }
  return m;
}

}  // namespace irpg
