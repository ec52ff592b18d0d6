#pragma once

#include <Eigen/Dense>

#include "irpg/rng.hpp"

namespace irpg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Coordinate vectors in the isometric bases of the normal space (length
// p(p+1)/2, via B_X) and the tangent space (length np - p(p+1)/2, via Q_X).
using NormalCoordinates = Vector;
using TangentCoordinates = Vector;

inline Matrix sym(const Matrix& m) { return 0.5 * (m + m.transpose()); }
inline Matrix skew(const Matrix& m) { return 0.5 * (m - m.transpose()); }

// ||X^T V + V^T X||_F; zero iff V is tangent to St(p,n) at X.
double tangency_residual(const Matrix& X, const Matrix& V);
double feasibility_residual(const Matrix& X);  // ||X^T X - I||_F

// dim St(p,n) = np - p(p+1)/2, codim = p(p+1)/2
int stiefel_dim(int n, int p);
int stiefel_codim(int p);

// A point on St(p,n) = {X in R^{n x p} : X^T X = I}. Construction checks
// feasibility to 1e-12.
class StiefelPoint {
 public:
  explicit StiefelPoint(Matrix X);
  static StiefelPoint random(int n, int p, Rng& rng);  // QR of a Gaussian

  int rows() const { return static_cast<int>(X_.rows()); }
  int cols() const { return static_cast<int>(X_.cols()); }
  const Matrix& matrix() const { return X_; }

 private:
  Matrix X_;
};

// Tangent vector carried together with its base point. Construction checks
// the tangency residual at 1e-10 * (1 + ||V||).
class TangentVector {
 public:
  TangentVector(StiefelPoint base, Matrix V);
  const StiefelPoint& base() const { return base_; }
  const Matrix& matrix() const { return V_; }
  double norm() const { return V_.norm(); }

 private:
  StiefelPoint base_;
  Matrix V_;
};

// P_X(Z) = Z - X sym(X^T Z).
Matrix proj_tangent(const Matrix& X, const Matrix& Z);
TangentVector proj_tangent(const StiefelPoint& x, const Matrix& Z);

// Polar retraction R_X(eta) = (X + eta)(I + eta^T eta)^{-1/2}.
Matrix retract_polar(const Matrix& X, const Matrix& eta);
StiefelPoint retract_polar(const StiefelPoint& x, const TangentVector& eta);

// Vector transport by differentiated polar retraction and its relatives.
// With M = (I + eta^T eta)^{1/2} and Y = R_X(eta):
//   T xi       = (xi - Y M^{-1} dM) M^{-1},  dM M + M dM = xi^T eta + eta^T xi
//   T^{-1} u   = u M + Y dM,                 P dM + dM P^T = -(X^T u M + M u^T X),
//                                            P = X^T Y
// T maps T_X -> T_Y, T^{-1} maps T_Y -> T_X; adjoints flip the spaces back.
// Each costs one p x p Sylvester solve plus O(np^2). The inverse forms are
// well conditioned for ||eta||_F <= 1 (property-tested radius); a singular
// Sylvester system raises a conditioning-failure error.
Matrix transport_diff_retraction(const Matrix& X, const Matrix& eta,
                                 const Matrix& xi);
Matrix transport_adjoint(const Matrix& X, const Matrix& eta,
                         const Matrix& zeta_y);  // T^sharp: T_Y -> T_X
Matrix transport_inverse(const Matrix& X, const Matrix& eta,
                         const Matrix& u_y);  // T^{-1}: T_Y -> T_X
Matrix transport_inverse_adjoint(const Matrix& X, const Matrix& eta,
                                 const Matrix& zeta_x);  // T^{-sharp}: T_X -> T_Y

TangentVector transport_diff_retraction(const StiefelPoint& x,
                                        const TangentVector& eta,
                                        const TangentVector& xi);
TangentVector transport_inverse_adjoint(const StiefelPoint& x,
                                        const TangentVector& eta,
                                        const TangentVector& zeta_x);

// Operator-norm estimate of T^{-1} restricted to T_Y -> T_X (power iteration
// on T^{-1} composed with its adjoint; deterministic start).
double transport_inverse_opnorm(const Matrix& X, const Matrix& eta,
                                int iters = 12);

// Isometric parameterization of the normal space N_X = {X S : S = S^T}.
// svec stacks the diagonal first, then sqrt(2)-scaled off-diagonals in
// row-major order (12),(13),...,(1p),(23),...  Coordinates have length
// p(p+1)/2 and ||svec(S)|| = ||S||_F.
Vector svec(const Matrix& S);
Matrix svec_inverse(const Vector& v, int p);
Vector normal_basis_adjoint(const Matrix& X, const Matrix& Z);  // B_X^T Z
Matrix normal_basis_apply(const Matrix& X, const Vector& v);    // B_X v

// Orthonormal tangent basis Q_X built from skew elementary matrices and a
// materialized orthonormal complement X_perp (full QR). Intended for small
// instances (tests, audits); the solvers themselves stay coordinate-free.
class TangentBasis {
 public:
  explicit TangentBasis(const StiefelPoint& x);
  int dim() const { return stiefel_dim(n_, p_); }
  Matrix apply(const Vector& c) const;     // Q_X c, tangent at X
  Vector adjoint(const Matrix& Z) const;   // Q_X^T Z for ambient Z
  const Matrix& xperp() const { return Xperp_; }

 private:
  int n_ = 0, p_ = 0;
  Matrix X_, Xperp_;
};

// Small dense Sylvester solves used by the transports.
// Solves dM * M + M * dM = C for SPD M via its eigendecomposition.
Matrix solve_sylvester_spd(const Matrix& M, const Matrix& C);
// Solves P * S + S * P^T = C (adjoint = false) or P^T S + S P = C
// (adjoint = true) through the Kronecker-product system.
Matrix solve_sylvester_kron(const Matrix& P, const Matrix& C, bool adjoint);

}  // namespace irpg
