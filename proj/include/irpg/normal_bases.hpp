#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/QR>

#include "irpg/stiefel.hpp"

// Isometric parameterizations B_X / B_X^T of normal spaces for manifolds
// beyond Stiefel. Only the operator pair ships here; retractions and
// transports for these manifolds are out of scope.

namespace irpg {

// ---- Grassmann, points represented by X in St(p,n) -------------------------
// Complement of the horizontal space at X is {X M : M in R^{p x p}};
// coordinates are vec(M) (column-major), length p^2.
namespace grassmann {
int codim(int p);
Vector normal_adjoint(const Matrix& X, const Matrix& Z);  // vec(X^T Z)
Matrix normal_apply(const Matrix& X, const Vector& v);    // X vec^{-1}(v)
}  // namespace grassmann

// ---- Fixed-rank matrices R_r^{m x n}, X = U diag(s) V^T (thin SVD) ---------
// Normal space {U_perp M V_perp^T}; U_perp / V_perp act through stored
// Householder factorizations, never materialized.
class FixedRankNormalOp {
 public:
  // U: m x r, V: n x r, both with orthonormal columns.
  FixedRankNormalOp(const Matrix& U, const Matrix& V);
  int codim() const { return (m_ - r_) * (n_ - r_); }
  Vector adjoint(const Matrix& Z) const;  // vec(U_perp^T Z V_perp)
  Matrix apply(const Vector& v) const;    // U_perp vec^{-1}(v) V_perp^T

  // Membership helper for tests: projection of Z onto the tangent space
  // {U M V^T + U_p V^T + U V_p^T : U^T U_p = 0, V^T V_p = 0}.
  Matrix tangent_project(const Matrix& Z) const;

 private:
  Matrix applyUperpT(const Matrix& Z) const;  // (m-r) x k
  Matrix applyUperp(const Matrix& W) const;   // m x k
  Matrix applyVperpT(const Matrix& Z) const;  // (n-r) x k
  Matrix applyVperp(const Matrix& W) const;   // n x k

  int m_ = 0, n_ = 0, r_ = 0;
  Matrix U_, V_;
  Eigen::HouseholderQR<Matrix> qrU_, qrV_;
};

// ---- Rank-r symmetric PSD matrices, X = H H^T, H in R^{n x r} full rank ----
// Normal space {H_perp M H_perp^T : M = M^T}; coordinates are svec(M) with
// the same diagonal-first, sqrt(2)-scaled convention as the Stiefel basis.
class PsdFixedRankNormalOp {
 public:
  explicit PsdFixedRankNormalOp(const Matrix& H);
  int codim() const { return (n_ - r_) * (n_ - r_ + 1) / 2; }
  Vector adjoint(const Matrix& Z) const;  // svec(H_perp^T sym(Z) H_perp)
  Matrix apply(const Vector& v) const;    // H_perp svec^{-1}(v) H_perp^T

 private:
  Matrix applyHperpT(const Matrix& Z) const;
  Matrix applyHperp(const Matrix& W) const;

  int n_ = 0, r_ = 0;
  Matrix H_;
  Eigen::HouseholderQR<Matrix> qrH_;
};

// ---- Products ---------------------------------------------------------------
// B for a product manifold concatenates the component coordinates.
struct ProductComponent {
  int codim = 0;
  std::function<Vector(const Matrix&)> adjoint;
  std::function<Matrix(const Vector&)> apply;
};

class ProductNormalOp {
 public:
  explicit ProductNormalOp(std::vector<ProductComponent> parts);
  int codim() const { return total_; }
  Vector adjoint(const std::vector<Matrix>& Zs) const;
  std::vector<Matrix> apply(const Vector& v) const;

 private:
  std::vector<ProductComponent> parts_;
  int total_ = 0;
};

}  // namespace irpg
