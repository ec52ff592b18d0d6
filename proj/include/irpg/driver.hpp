#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "irpg/subsolver.hpp"

namespace irpg {

enum class Variant { G, U, L };

// The four accuracy choices for q(eps_k, ||eta||). Choice two has no fixed
// formula; callers supply the function.
enum class QKind { Epsilon, QTilde, EpsilonSquared, MinEpsSqDeltaEta };

struct AccuracyPolicy {
  Variant variant = Variant::G;
  std::function<double(int)> epsilon_schedule;  // defaults to 500/(1+k)^1.01
  double rho = 100.0;
  double delta_r = 0.1;
  double delta_q = 100.0;  // quadratic weight of the fourth q choice
  QKind q_kind = QKind::EpsilonSquared;
  std::function<double(double)> q_tilde;  // used only by QKind::QTilde
};

double default_epsilon_schedule(int k);
double q_bound(const AccuracyPolicy& policy, double eps_k, double eta_norm);
AccuracyPolicy make_policy(Variant v);

// psi(eps, rho, t) of the local certificate for the U and L variants.
double psi_bound_u(double eps_k, double rho, double t);
double psi_bound_l(double eps_k, double rho, double t);

struct SolverConfig {
  double L_tilde_0 = 1.0;
  double L_tilde_min = 1e-3;
  double L_tilde_max = 1.0;  // reset to L_tilde_0 by make_config
  double escalation_factor = 1.5;
  double backtrack_factor = 0.5;
  int backtrack_fail_limit = 5;
  int max_outer = 5000;
  double stop_factor = 1e-3;  // G rule: ||eta_k|| Lt_k <= stop_factor * baseline
  int ssn_cap = 100;
  int coord_cap = 200;
  // Reusing the previous multiplier makes the loosely certified directions
  // track the tight ones so closely that the accuracy variants become
  // indistinguishable; each subproblem therefore starts fresh by default.
  bool warm_start_lambda = false;
  std::function<double(double)> phi;  // forcing function of the multiplier-residual test, default sqrt
};

SolverConfig make_config(double L_tilde_0);

enum class RunStatus { Converged, TargetReached, CapReached, EscalationFailed };
std::string to_string(RunStatus s);
std::string to_string(Variant v);

struct TraceRow {
  int k = 0;
  double F_after = 0.0;    // F(x_{k+1})
  double eta_norm = 0.0;   // ||eta_hat_k||
  double L_tilde = 0.0;    // value used by the accepted subproblem
  double alpha = 1.0;
  int inner_iters = 0;
  Certificate certificate = Certificate::GlobalResidual;
  double seconds = 0.0;    // elapsed since run start
  double psi_norm = 0.0;
  double psi_bound = 0.0;
  double model_at_zero = 0.0;
  double model_at_eta = 0.0;
};

struct RunTrace {
  std::vector<TraceRow> rows;
  double F0 = 0.0;
  RunStatus status = RunStatus::CapReached;
  Matrix final_X;
  double baseline_stat = 0.0;  // ||eta_0|| * Lt_0 of the first iteration
  double target_F = std::numeric_limits<double>::quiet_NaN();
  double max_feasibility_residual = 0.0;
  double max_tangency_residual = 0.0;  // of ||X^T eta + eta^T X|| / (1+||eta||)
  int escalations = 0;
};

// Backtracking over alpha in {1, 1/2, ...}: first alpha with
// F(R_x(alpha eta)) < F(x). Failure after backtrack_fail_limit trials is
// reported, not thrown.
struct BacktrackResult {
  double alpha = 1.0;
  Matrix x_next;
  double F_next = 0.0;
  bool failed = false;
  int trials = 0;
};
BacktrackResult backtrack(const CompositeProblem& pb, const Matrix& X,
                          const Matrix& eta, double F_x,
                          const SolverConfig& cfg);

// Safeguarded Barzilai-Borwein value min(max(|<y,y>/<y,s>|, Lmin), Lmax);
// returns fallback when <y,s> vanishes.
double bb_stepsize(const Matrix& y, const Matrix& s, double L_min, double L_max,
                   double fallback);

// Algorithm main loop. target_F is the paired stopping value for the U and
// L variants (ignored by G).
RunTrace irpg_run(const CompositeProblem& pb, const StiefelPoint& x0,
                  const SolverConfig& cfg, const AccuracyPolicy& policy,
                  double target_F = std::numeric_limits<double>::quiet_NaN());

void write_trace_csv(const std::string& path, const RunTrace& trace);

}  // namespace irpg
