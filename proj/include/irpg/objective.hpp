#pragma once

#include <functional>

#include "irpg/stiefel.hpp"

namespace irpg {

// Smooth part f: value and Euclidean gradient; the Riemannian gradient is
// the tangent projection of the latter.
struct SmoothCost {
  std::function<double(const Matrix&)> eval;
  std::function<Matrix(const Matrix&)> euclidean_grad;
};

// Nonsmooth part g: value, Euclidean proximal mapping
//   prox(z, t) = argmin_v 0.5 ||v - z||^2 + t g(v),
// the entrywise derivative of the prox (generalized Jacobian diagonal, used
// by the semismooth Newton solver), and a Lipschitz constant.
struct NonsmoothCost {
  std::function<double(const Matrix&)> eval;
  std::function<Matrix(const Matrix&, double)> prox;
  std::function<Matrix(const Matrix&, double)> prox_jacobian_diag;
  double lipschitz = 0.0;
};

struct CompositeProblem {
  int n = 0, p = 0;  // ambient shape n x p
  SmoothCost f;
  NonsmoothCost g;

  double F(const Matrix& X) const { return f.eval(X) + g.eval(X); }
  Matrix rgrad(const Matrix& X) const {
    return proj_tangent(X, f.euclidean_grad(X));
  }
};

// f(X) = -trace(X^T A^T A X), the variance term of the penalized ScoTLASS
// sparse-PCA model. Gradients go through A (cost O(mnp)).
SmoothCost spca_smooth(const Matrix& A);

// g(X) = lambda * sum_ij |X_ij|; prox is entrywise soft-thresholding; the
// Jacobian diagonal is the 0/1 activity mask (ties |z| = lambda t map to 0).
// Lipschitz constant lambda * sqrt(np) in the Frobenius geometry.
NonsmoothCost l1_nonsmooth(double lambda, int n, int p);

// g identically zero (prox = identity); used by the linear solver tests.
NonsmoothCost zero_nonsmooth();

CompositeProblem make_spca_problem(const Matrix& A, int p, double lambda);

// Model around x:  ell(eta)      = <rgrad f(x), eta> + Lt/2 ||eta||^2 + g(R_x(eta))
//                  ell_tilde(eta)= same with g(x + eta).
double ell_eval(const CompositeProblem& pb, const Matrix& X, const Matrix& eta,
                double L_tilde);
double ell_eval(const CompositeProblem& pb, const Matrix& X,
                const Matrix& rgrad, const Matrix& eta, double L_tilde);
double ell_tilde_eval(const CompositeProblem& pb, const Matrix& X,
                      const Matrix& eta, double L_tilde);
double F_eval(const CompositeProblem& pb, const Matrix& X);

// Euclidean Hessian bound 2 sigma_max(A)^2 of the sparse-PCA smooth term,
// used by the descent and complexity audits.
double spca_hessian_bound(const Matrix& A);

}  // namespace irpg
