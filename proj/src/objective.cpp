#include "irpg/objective.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/SVD>

namespace irpg {

SmoothCost spca_smooth(const Matrix& A) {
  if (A.rows() < 1 || A.cols() < 1)
    throw std::invalid_argument("spca_smooth: empty data matrix");
  SmoothCost f;
  f.eval = [A](const Matrix& X) { return -(A * X).squaredNorm(); };
  f.euclidean_grad = [A](const Matrix& X) {
    return Matrix(-2.0 * (A.transpose() * (A * X)));
  };
  return f;
}

NonsmoothCost l1_nonsmooth(double lambda, int n, int p) {
  if (lambda <= 0.0) throw std::invalid_argument("l1_nonsmooth: lambda <= 0");
  NonsmoothCost g;
  g.eval = [lambda](const Matrix& X) {
    return lambda * X.array().abs().sum();
  };
  g.prox = [lambda](const Matrix& Z, double t) {
    if (t <= 0.0) throw std::invalid_argument("l1 prox: t <= 0");
    const double tau = lambda * t;
    return Matrix(Z.array().sign() * (Z.array().abs() - tau).max(0.0));
  };
  g.prox_jacobian_diag = [lambda](const Matrix& Z, double t) {
    if (t <= 0.0) throw std::invalid_argument("l1 prox: t <= 0");
    const double tau = lambda * t;
    return Matrix((Z.array().abs() > tau).cast<double>());
  };
  g.lipschitz = lambda * std::sqrt(static_cast<double>(n) * p);
  return g;
}

NonsmoothCost zero_nonsmooth() {
  NonsmoothCost g;
  g.eval = [](const Matrix&) { return 0.0; };
  g.prox = [](const Matrix& Z, double t) {
    if (t <= 0.0) throw std::invalid_argument("zero prox: t <= 0");
    return Z;
  };
  g.prox_jacobian_diag = [](const Matrix& Z, double) {
    return Matrix(Matrix::Ones(Z.rows(), Z.cols()));
  };
  g.lipschitz = 0.0;
  return g;
}

CompositeProblem make_spca_problem(const Matrix& A, int p, double lambda) {
  CompositeProblem pb;
  pb.n = static_cast<int>(A.cols());
  pb.p = p;
  pb.f = spca_smooth(A);
  pb.g = lambda > 0.0 ? l1_nonsmooth(lambda, pb.n, p) : zero_nonsmooth();
  return pb;
}

double ell_eval(const CompositeProblem& pb, const Matrix& X, const Matrix& eta,
                double L_tilde) {
  return ell_eval(pb, X, pb.rgrad(X), eta, L_tilde);
}

double ell_eval(const CompositeProblem& pb, const Matrix& X,
                const Matrix& rgrad, const Matrix& eta, double L_tilde) {
  if (L_tilde <= 0.0) throw std::invalid_argument("ell_eval: L_tilde <= 0");
  const double lin = (rgrad.array() * eta.array()).sum();
  return lin + 0.5 * L_tilde * eta.squaredNorm() +
         pb.g.eval(retract_polar(X, eta));
}

double ell_tilde_eval(const CompositeProblem& pb, const Matrix& X,
                      const Matrix& eta, double L_tilde) {
  if (L_tilde <= 0.0)
    throw std::invalid_argument("ell_tilde_eval: L_tilde <= 0");
  const Matrix rg = pb.rgrad(X);
  const double lin = (rg.array() * eta.array()).sum();
  return lin + 0.5 * L_tilde * eta.squaredNorm() + pb.g.eval(X + eta);
}

double F_eval(const CompositeProblem& pb, const Matrix& X) { return pb.F(X); }

double spca_hessian_bound(const Matrix& A) {
  Eigen::JacobiSVD<Matrix> svd(A);
  const double smax = svd.singularValues()(0);
  return 2.0 * smax * smax;
}

}  // namespace irpg
