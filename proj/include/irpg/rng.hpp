#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace irpg {

// Seedable generator used everywhere randomness is needed. The stream is
// pinned so stored fixtures stay valid: raw bits come from std::mt19937_64,
// uniforms are (bits >> 11) * 2^-53 in [0,1), and normals use the Box-Muller
// transform z0 = sqrt(-2 ln(1-u1)) cos(2 pi u2), z1 = ... sin(2 pi u2),
// consuming two uniforms per pair. Matrices are filled row by row.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  Eigen::MatrixXd normal_matrix(int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = normal();
    return m;
  }

  Eigen::VectorXd normal_vector(int size) {
    Eigen::VectorXd v(size);
    for (int i = 0; i < size; ++i) v(i) = normal();
    return v;
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace irpg
