#pragma once

#include <string>

#include <Eigen/Dense>

namespace irpg {

// Dense-matrix CSV exchange format: one "rows,cols" header line, then one
// line per row with comma-separated entries (row-major), full precision.
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_csv(const std::string& path);

}  // namespace irpg
