#include "irpg/stiefel.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/QR>

namespace irpg {

double tangency_residual(const Matrix& X, const Matrix& V) {
  return (X.transpose() * V + V.transpose() * X).norm();
}

double feasibility_residual(const Matrix& X) {
  const int p = static_cast<int>(X.cols());
  return (X.transpose() * X - Matrix::Identity(p, p)).norm();
}

int stiefel_dim(int n, int p) { return n * p - p * (p + 1) / 2; }
int stiefel_codim(int p) { return p * (p + 1) / 2; }

StiefelPoint::StiefelPoint(Matrix X) : X_(std::move(X)) {
  if (X_.rows() < X_.cols() || X_.cols() < 1)
    throw std::invalid_argument("StiefelPoint: need n >= p >= 1");
  if (feasibility_residual(X_) > 1e-12)
    throw std::invalid_argument("StiefelPoint: columns not orthonormal");
}

StiefelPoint StiefelPoint::random(int n, int p, Rng& rng) {
  Matrix G = rng.normal_matrix(n, p);
  Eigen::HouseholderQR<Matrix> qr(G);
  Matrix Q = qr.householderQ() * Matrix::Identity(n, p);
  // Fix the sign of each column so the factorization is unique.
  Matrix R = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
  for (int j = 0; j < p; ++j)
    if (R(j, j) < 0) Q.col(j) = -Q.col(j);
  return StiefelPoint(std::move(Q));
}

TangentVector::TangentVector(StiefelPoint base, Matrix V)
    : base_(std::move(base)), V_(std::move(V)) {
  if (V_.rows() != base_.rows() || V_.cols() != base_.cols())
    throw std::invalid_argument("TangentVector: shape mismatch with base");
  const double res = tangency_residual(base_.matrix(), V_);
  if (res > 1e-10 * (1.0 + V_.norm()))
    throw std::invalid_argument("TangentVector: tangency residual too large");
}

Matrix proj_tangent(const Matrix& X, const Matrix& Z) {
  if (Z.rows() != X.rows() || Z.cols() != X.cols())
    throw std::invalid_argument("proj_tangent: shape mismatch");
  return Z - X * sym(X.transpose() * Z);
}

TangentVector proj_tangent(const StiefelPoint& x, const Matrix& Z) {
  return TangentVector(x, proj_tangent(x.matrix(), Z));
}

namespace {

// (I + eta^T eta)^{1/2} via eigendecomposition of eta^T eta.
Matrix polar_factor(const Matrix& eta) {
  const int p = static_cast<int>(eta.cols());
  Eigen::SelfAdjointEigenSolver<Matrix> es(Matrix::Identity(p, p) +
                                           eta.transpose() * eta);
  return es.operatorSqrt();
}

}  // namespace

Matrix retract_polar(const Matrix& X, const Matrix& eta) {
  const int p = static_cast<int>(eta.cols());
  Eigen::SelfAdjointEigenSolver<Matrix> es(Matrix::Identity(p, p) +
                                           eta.transpose() * eta);
  Matrix Y = (X + eta) * es.operatorInverseSqrt();
  // Large steps leave roundoff of order cond(I + eta^T eta) * eps; one
  // polar polish restores orthonormality without changing the map.
  Eigen::SelfAdjointEigenSolver<Matrix> polish(Y.transpose() * Y);
  return Y * polish.operatorInverseSqrt();
}

StiefelPoint retract_polar(const StiefelPoint& x, const TangentVector& eta) {
  return StiefelPoint(retract_polar(x.matrix(), eta.matrix()));
}

Matrix solve_sylvester_spd(const Matrix& M, const Matrix& C) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(M);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw std::runtime_error("sylvester: factor not positive definite");
  const Matrix& U = es.eigenvectors();
  const Vector& d = es.eigenvalues();
  Matrix Ct = U.transpose() * C * U;
  for (Eigen::Index i = 0; i < Ct.rows(); ++i)
    for (Eigen::Index j = 0; j < Ct.cols(); ++j) Ct(i, j) /= d(i) + d(j);
  return U * Ct * U.transpose();
}

Matrix solve_sylvester_kron(const Matrix& P, const Matrix& C, bool adjoint) {
  const int p = static_cast<int>(P.rows());
  Matrix K = Matrix::Zero(p * p, p * p);
  // vec(P S + S P^T) = (I kron P + P kron I) vec(S), column-major vec.
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < p; ++b) {
      for (int i = 0; i < p; ++i) {
        K(a + p * b, i + p * b) += P(a, i);  // (P S)_{ab} = sum_i P_{a i} S_{i b}
        K(a + p * b, a + p * i) += P(b, i);  // (S P^T)_{ab} = sum_i S_{a i} P_{b i}
      }
    }
  Eigen::Map<const Vector> cvec(C.data(), p * p);
  Eigen::FullPivLU<Matrix> lu(adjoint ? Matrix(K.transpose()) : K);
  if (!lu.isInvertible())
    throw std::runtime_error(
        "transport conditioning failure: Sylvester system singular");
  Vector s = lu.solve(cvec);
  return Eigen::Map<const Matrix>(s.data(), p, p);
}

Matrix transport_diff_retraction(const Matrix& X, const Matrix& eta,
                                 const Matrix& xi) {
  const Matrix M = polar_factor(eta);
  const Matrix Y = (X + eta) * M.inverse();
  const Matrix dM =
      solve_sylvester_spd(M, xi.transpose() * eta + eta.transpose() * xi);
  const Matrix Minv = M.inverse();
  return (xi - Y * dM) * Minv;
}

Matrix transport_adjoint(const Matrix& X, const Matrix& eta,
                         const Matrix& zeta_y) {
  const Matrix M = polar_factor(eta);
  const Matrix Minv = M.inverse();
  const Matrix Y = (X + eta) * Minv;
  const Matrix W = solve_sylvester_spd(M, Y.transpose() * zeta_y * Minv);
  return proj_tangent(X, zeta_y * Minv - eta * (W + W.transpose()));
}

Matrix transport_inverse(const Matrix& X, const Matrix& eta,
                         const Matrix& u_y) {
  const Matrix M = polar_factor(eta);
  const Matrix Y = (X + eta) * M.inverse();
  const Matrix P = X.transpose() * Y;
  const Matrix C = -(X.transpose() * u_y * M + M * u_y.transpose() * X);
  Matrix dM = solve_sylvester_kron(P, C, /*adjoint=*/false);
  dM = sym(dM);  // exact solution is symmetric; clean up roundoff
  return u_y * M + Y * dM;
}

Matrix transport_inverse_adjoint(const Matrix& X, const Matrix& eta,
                                 const Matrix& zeta_x) {
  const Matrix M = polar_factor(eta);
  const Matrix Y = (X + eta) * M.inverse();
  const Matrix P = X.transpose() * Y;
  const Matrix S =
      solve_sylvester_kron(P, Matrix(Y.transpose() * zeta_x), /*adjoint=*/true);
  return proj_tangent(Y, (zeta_x - X * (S + S.transpose())) * M);
}

TangentVector transport_diff_retraction(const StiefelPoint& x,
                                        const TangentVector& eta,
                                        const TangentVector& xi) {
  Matrix t = transport_diff_retraction(x.matrix(), eta.matrix(), xi.matrix());
  StiefelPoint y = retract_polar(x, eta);
  return TangentVector(std::move(y), std::move(t));
}

TangentVector transport_inverse_adjoint(const StiefelPoint& x,
                                        const TangentVector& eta,
                                        const TangentVector& zeta_x) {
  Matrix t = transport_inverse_adjoint(x.matrix(), eta.matrix(),
                                       zeta_x.matrix());
  StiefelPoint y = retract_polar(x, eta);
  return TangentVector(std::move(y), std::move(t));
}

double transport_inverse_opnorm(const Matrix& X, const Matrix& eta,
                                int iters) {
  const Matrix Y = retract_polar(X, eta);
  // Deterministic tangent start at Y.
  Matrix u = proj_tangent(Y, Matrix::Ones(Y.rows(), Y.cols()));
  if (u.norm() < 1e-14) {
    u = Matrix::Zero(Y.rows(), Y.cols());
    u(0, Y.cols() - 1) = 1.0;
    u = proj_tangent(Y, u);
  }
  u /= u.norm();
  double s = 1.0;
  for (int it = 0; it < iters; ++it) {
    // z = (T^{-1})^sharp T^{-1} u; with u normalized, ||z|| -> sigma_max^2.
    Matrix w = transport_inverse(X, eta, u);
    Matrix z = transport_inverse_adjoint(X, eta, w);
    const double nz = z.norm();
    if (nz < 1e-300) return 0.0;
    s = std::sqrt(nz);
    u = z / nz;
  }
  return s;
}

Vector svec(const Matrix& S) {
  const int p = static_cast<int>(S.rows());
  Vector v(p * (p + 1) / 2);
  int k = 0;
  for (int i = 0; i < p; ++i) v(k++) = S(i, i);
  const double r2 = std::sqrt(2.0);
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j) v(k++) = r2 * S(i, j);
  return v;
}

Matrix svec_inverse(const Vector& v, int p) {
  if (v.size() != p * (p + 1) / 2)
    throw std::invalid_argument("svec_inverse: length mismatch");
  Matrix S(p, p);
  int k = 0;
  for (int i = 0; i < p; ++i) S(i, i) = v(k++);
  const double ir2 = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j) {
      S(i, j) = S(j, i) = ir2 * v(k++);
    }
  return S;
}

Vector normal_basis_adjoint(const Matrix& X, const Matrix& Z) {
  if (Z.rows() != X.rows() || Z.cols() != X.cols())
    throw std::invalid_argument("normal_basis_adjoint: shape mismatch");
  return svec(sym(X.transpose() * Z));
}

Matrix normal_basis_apply(const Matrix& X, const Vector& v) {
  return X * svec_inverse(v, static_cast<int>(X.cols()));
}

TangentBasis::TangentBasis(const StiefelPoint& x)
    : n_(x.rows()), p_(x.cols()), X_(x.matrix()) {
  Eigen::HouseholderQR<Matrix> qr(X_);
  Matrix Q = qr.householderQ();
  Xperp_ = Q.rightCols(n_ - p_);
}

Matrix TangentBasis::apply(const Vector& c) const {
  if (c.size() != dim()) throw std::invalid_argument("TangentBasis: bad size");
  const double ir2 = 1.0 / std::sqrt(2.0);
  Matrix Omega = Matrix::Zero(p_, p_);
  int k = 0;
  for (int i = 0; i < p_; ++i)
    for (int j = i + 1; j < p_; ++j) {
      Omega(i, j) = ir2 * c(k);
      Omega(j, i) = -ir2 * c(k);
      ++k;
    }
  Matrix K(n_ - p_, p_);
  for (int i = 0; i < n_ - p_; ++i)
    for (int j = 0; j < p_; ++j) K(i, j) = c(k++);
  return X_ * Omega + Xperp_ * K;
}

Vector TangentBasis::adjoint(const Matrix& Z) const {
  if (Z.rows() != n_ || Z.cols() != p_)
    throw std::invalid_argument("TangentBasis: shape mismatch");
  Vector c(dim());
  const Matrix A = X_.transpose() * Z;
  const double ir2 = 1.0 / std::sqrt(2.0);
  int k = 0;
  for (int i = 0; i < p_; ++i)
    for (int j = i + 1; j < p_; ++j) c(k++) = ir2 * (A(i, j) - A(j, i));
  const Matrix K = Xperp_.transpose() * Z;
  for (int i = 0; i < n_ - p_; ++i)
    for (int j = 0; j < p_; ++j) c(k++) = K(i, j);
  return c;
}

}  // namespace irpg
