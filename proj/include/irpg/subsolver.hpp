#pragma once

#include <functional>
#include <limits>
#include <ostream>

#include "irpg/objective.hpp"
#include "irpg/stiefel.hpp"

namespace irpg {

enum class Certificate { GlobalResidual, LocalLinearized };

// Result of one inexact tangent-space proximal solve, together with the
// quantities needed to re-verify its acceptance test from scratch.
struct ProxSolution {
  Matrix eta_hat;            // search direction, tangent at x
  Vector lambda_hat;         // multiplier (normal coordinates)
  double psi_norm = 0.0;     // ||Psi(lambda_hat)||, or ||rtt(c_bar)|| (local)
  double psi_bound = 0.0;    // right-hand side of the accepted inequality
  double model_at_zero = 0.0;
  double model_at_eta = 0.0;
  Certificate certificate = Certificate::GlobalResidual;
  int inner_iters = 0;       // Newton steps (global), coordinate steps (local)
  bool certified = false;
  // Parameters the local certificate was granted under (NaN for global).
  double eps_k = std::numeric_limits<double>::quiet_NaN();
  double rho = std::numeric_limits<double>::quiet_NaN();
  double delta_r = std::numeric_limits<double>::quiet_NaN();
};

struct SsnOptions {
  int max_iters = 100;
  double armijo = 1e-4;
  int max_halvings = 30;
  double mu_cap = 0.1;
  double mu_floor = 0.0;   // high-accuracy oracle runs set 1e-14
  double psi_floor = 0.0;  // unconditional acceptance threshold on ||Psi||
  // Divide the Tikhonov shift by Lt so it tracks the Jacobian scale; the
  // high-accuracy inner solves need this to converge fast, while the
  // certificate-bounded global path uses the raw shift.
  bool mu_scaled_by_L = false;
  // When set, one "iter,psi_norm,mu,step" CSV row is streamed per Newton
  // iteration.
  std::ostream* diagnostics = nullptr;
};

// ---- Building blocks of the semismooth Newton solver ------------------------
// All take an arbitrary base point Y on St(p,n) and a tangent "gradient"
// vector G there:  min_{eta in T_Y} <G,eta> + Lt/2 ||eta||^2 + g(Y + eta).

// v(Lambda) = prox_{g/Lt}(Y - (G - B_Y Lambda)/Lt) - Y
Matrix v_of_lambda_at(const Matrix& Y, const Matrix& G, const NonsmoothCost& g,
                      double L_tilde, const Vector& lambda);
// Psi(Lambda) = B_Y^T v(Lambda)
Vector psi_at(const Matrix& Y, const Matrix& G, const NonsmoothCost& g,
              double L_tilde, const Vector& lambda);
// Generalized Jacobian action J[d] = B_Y^T( mask .* (B_Y d) ) / Lt with the
// prox activity mask at z(Lambda); and its dense assembly.
Vector psi_jacobian_apply_at(const Matrix& Y, const Matrix& G,
                             const NonsmoothCost& g, double L_tilde,
                             const Vector& lambda, const Vector& d);
Matrix psi_jacobian_dense_at(const Matrix& Y, const Matrix& G,
                             const NonsmoothCost& g, double L_tilde,
                             const Vector& lambda);

// Convenience wrappers at a problem iterate (G = Riemannian gradient of f).
Matrix v_of_lambda(const CompositeProblem& pb, const StiefelPoint& x,
                   double L_tilde, const Vector& lambda);
Vector psi(const CompositeProblem& pb, const StiefelPoint& x, double L_tilde,
           const Vector& lambda);
Vector psi_jacobian_apply(const CompositeProblem& pb, const StiefelPoint& x,
                          double L_tilde, const Vector& lambda,
                          const Vector& d);

// Raw semismooth Newton outcome, before any certificate bookkeeping.
struct SsnOutcome {
  Matrix eta;        // P_T v(lambda) at the final iterate
  Vector lambda;
  double psi_norm = 0.0;
  int iters = 0;
  bool accepted = false;  // the stop predicate fired
};

// Runs semismooth Newton on Psi(Lambda) = 0. The predicate sees the
// projected direction and ||Psi|| at every iterate (including the start) and
// returns true to stop. Plain Newton steps are used while the Jacobian
// solve is healthy; otherwise the step is re-solved with Tikhonov shift
// mu = clamp(||Psi||, mu_floor, mu_cap).
SsnOutcome ssn_tangent_prox(
    const Matrix& Y, const Matrix& G, const NonsmoothCost& g, double L_tilde,
    const std::function<bool(const Matrix& eta, double psi_norm)>& accept,
    const Vector& lambda0, const SsnOptions& opt);

// Global path: stop once ||Psi|| <= min(phi(||eta||), 0.5) and
// ell(0) >= ell(eta) both hold.
ProxSolution solve_ssn_global(const CompositeProblem& pb, const StiefelPoint& x,
                              double L_tilde,
                              const std::function<double(double)>& phi,
                              int cap,
                              const Vector* warm_lambda = nullptr);

// ---- Local path -------------------------------------------------------------

// One linearized residual evaluation at coordinate iterate xi = Q_x c:
// transports the shifted gradient to y = R_x(xi), solves the tangent prox
// there until the strong-convexity error bound certifies a delta_r-relative
// solution, and pulls the minimizer back to T_x.
struct InnerResidual {
  Matrix w;               // rtt as a tangent vector at x (coordinates Q_x^T w)
  double norm = 0.0;      // == coordinate two-norm of rtt
  double err_bound = 0.0; // certified bound on ||w - r_tilde|| (coordinates)
  Vector lambda;          // multiplier of the inner solve (at y)
  int ssn_iters = 0;
  bool ok = false;
};

InnerResidual residual_tilde_inner(const CompositeProblem& pb, const Matrix& X,
                                   const Matrix& rgrad_x, const Matrix& xi,
                                   double L_tilde, double delta_r,
                                   const SsnOptions& opt,
                                   const Vector* warm_lambda = nullptr);

// Coordinate-space residual report; materializes the tangent basis, so
// intended for small instances (tests and audits).
struct ResidualReport {
  Vector c;               // rtt in Q_x coordinates
  double r_tilde_norm = 0.0;
  double delta_r = 0.0;
  double err_bound = 0.0;
  int inner_iters = 0;
};

ResidualReport residual_tilde(const CompositeProblem& pb, const StiefelPoint& x,
                              const Vector& c, double L_tilde, double delta_r);

// Outer coordinate loop c_{i+1} = c_i + rtt(c_i), stopped by
// ||rtt(c_i)|| <= psi(eps_k, rho, ||c_i||) / (1 + delta_r) plus the model
// decrease requirement ell(0) >= ell(eta_bar). psi is a callable
// (eps_k, rho, t) -> bound; the U variant passes eps^2, the L variant
// min(eps^2, rho t^2). A cold start (c_0 = 0) always performs at least one
// update so the zero direction is never certified.
ProxSolution solve_prox_local(
    const CompositeProblem& pb, const StiefelPoint& x, double L_tilde,
    double eps_k, double rho,
    const std::function<double(double, double, double)>& psi_policy,
    double delta_r, int coord_cap, int ssn_cap,
    const Vector* warm_lambda = nullptr,
    const Matrix* xi_start = nullptr);

}  // namespace irpg
