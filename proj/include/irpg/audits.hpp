#pragma once

#include <string>
#include <vector>

#include "irpg/driver.hpp"

// Independent auditors for the checkable inequalities behind the solver:
// they recompute every quantity from manifold/objective primitives and a
// high-accuracy oracle solve, never from solver-internal state.

namespace irpg {

struct AuditReport {
  std::string check;
  std::string instance;
  double measured = 0.0;
  double bound = 0.0;
  bool pass = false;
  double margin = 0.0;  // bound - measured, recorded also on pass
};

void write_audit_csv(const std::string& path,
                     const std::vector<AuditReport>& reports);

// Per-iteration descent inequality F(x_k) - F(x_{k+1}) >= beta ||eta_k||^2
// with beta = (Lt_k - L_hat)/2, applied to alpha = 1 iterations where
// Lt_k > L_hat. Needs the F series, so the trace must carry F0.
std::vector<AuditReport> audit_descent(const RunTrace& trace, double L_hat);

// First k with ||eta_k|| <= eps obeys k <= (F(x0) - F_best) / (beta eps^2)
// on a fixed-L run.
AuditReport audit_complexity(const RunTrace& trace, double L_hat, double eps);

// High-accuracy solves used as oracles. Both run long semismooth Newton
// loops (mu floor 1e-14) until ||Psi|| <= 1e-12.
Vector oracle_coordinate_minimizer(const CompositeProblem& pb,
                                   const StiefelPoint& x, double L_tilde,
                                   const TangentBasis& Q, int outer_cap = 500);
// Exact residual of the coordinate problem at c: argmin_v of the shifted
// model, solved to high accuracy as its own coordinate problem.
Vector oracle_residual(const CompositeProblem& pb, const StiefelPoint& x,
                       double L_tilde, const TangentBasis& Q, const Vector& c,
                       int outer_cap = 500);
// High-accuracy linearized residual at c (tight inner solve).
Vector oracle_residual_tilde(const CompositeProblem& pb, const StiefelPoint& x,
                             double L_tilde, const TangentBasis& Q,
                             const Vector& c);

// Error bound ||c - c*|| <= 2 ||r_x(c)|| over the given sample points, and
// the fitted comparability constant b = max ||r_x(c)|| / ||rt_x(c)||.
struct ErrorBoundAudit {
  std::vector<AuditReport> reports;
  double fitted_b = 0.0;
};
ErrorBoundAudit audit_error_bound(const CompositeProblem& pb,
                                  const StiefelPoint& x, double L_tilde,
                                  const std::vector<Vector>& samples);

// Retraction constants: sup ||R(t eta) - x|| / ||t eta|| and the stability
// of ||R(t eta) - x - t eta|| / ||t eta||^2 across the t grid.
struct RetractionConstants {
  double kappa1 = 0.0;
  double kappa2 = 0.0;
  double kappa2_spread = 0.0;  // max/min ratio across the grid
  std::vector<AuditReport> reports;
};
RetractionConstants audit_retraction_constants(
    const StiefelPoint& x, const std::vector<Matrix>& directions,
    const std::vector<double>& t_grid);

// Re-derives a granted certificate from scratch: recomputes eta from the
// multiplier, checks consistency with the reported direction, and re-checks
// the accepted inequalities (residual forcing plus model decrease for the
// global certificate, the linearized-residual bound for the local one,
// recomputed with a high-accuracy solve).
std::vector<AuditReport> audit_certificates(
    const ProxSolution& sol, const CompositeProblem& pb, const StiefelPoint& x,
    double L_tilde, const std::function<double(double)>& phi,
    const std::function<double(double, double, double)>& psi_policy = nullptr);

}  // namespace irpg
