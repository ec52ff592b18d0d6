#include "irpg/driver.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace irpg {

double default_epsilon_schedule(int k) {
  if (k < 0) throw std::invalid_argument("epsilon_schedule: k < 0");
  return 500.0 / std::pow(1.0 + k, 1.01);
}

double q_bound(const AccuracyPolicy& policy, double eps_k, double eta_norm) {
  if (eta_norm < 0.0) throw std::invalid_argument("q_bound: eta_norm < 0");
  switch (policy.q_kind) {
    case QKind::Epsilon:
      return eps_k;
    case QKind::QTilde:
      if (!policy.q_tilde)
        throw std::invalid_argument("q_bound: q_tilde not provided");
      return policy.q_tilde(eta_norm);
    case QKind::EpsilonSquared:
      return eps_k * eps_k;
    case QKind::MinEpsSqDeltaEta:
      return std::min(eps_k * eps_k, policy.delta_q * eta_norm * eta_norm);
  }
  return 0.0;
}

AccuracyPolicy make_policy(Variant v) {
  AccuracyPolicy p;
  p.variant = v;
  p.epsilon_schedule = default_epsilon_schedule;
  switch (v) {
    case Variant::G:
      p.q_kind = QKind::QTilde;
      break;
    case Variant::U:
      p.q_kind = QKind::EpsilonSquared;
      break;
    case Variant::L:
      p.q_kind = QKind::MinEpsSqDeltaEta;
      break;
  }
  return p;
}

double psi_bound_u(double eps_k, double /*rho*/, double /*t*/) {
  return eps_k * eps_k;
}

double psi_bound_l(double eps_k, double rho, double t) {
  return std::min(eps_k * eps_k, rho * t * t);
}

SolverConfig make_config(double L_tilde_0) {
  SolverConfig c;
  c.L_tilde_0 = L_tilde_0;
  c.L_tilde_max = L_tilde_0;
  c.phi = [](double t) { return std::sqrt(t); };
  return c;
}

std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Converged: return "converged";
    case RunStatus::TargetReached: return "target-reached";
    case RunStatus::CapReached: return "cap-reached";
    case RunStatus::EscalationFailed: return "escalation-failed";
  }
  return "unknown";
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::G: return "G";
    case Variant::U: return "U";
    case Variant::L: return "L";
  }
  return "?";
}

BacktrackResult backtrack(const CompositeProblem& pb, const Matrix& X,
                          const Matrix& eta, double F_x,
                          const SolverConfig& cfg) {
  BacktrackResult r;
  double alpha = 1.0;
  for (int trial = 0; trial < cfg.backtrack_fail_limit; ++trial) {
    Matrix Xn = retract_polar(X, Matrix(alpha * eta));
    const double Fn = pb.F(Xn);
    r.trials = trial + 1;
    if (Fn < F_x) {
      r.alpha = alpha;
      r.x_next = std::move(Xn);
      r.F_next = Fn;
      r.failed = false;
      return r;
    }
    alpha *= cfg.backtrack_factor;
  }
  r.failed = true;
  return r;
}

double bb_stepsize(const Matrix& y, const Matrix& s, double L_min, double L_max,
                   double fallback) {
  const double ys = (y.array() * s.array()).sum();
  if (ys == 0.0) return fallback;
  const double ratio = std::abs(y.squaredNorm() / ys);
  if (!std::isfinite(ratio)) return fallback;
  return std::min(std::max(ratio, L_min), L_max);
}

RunTrace irpg_run(const CompositeProblem& pb, const StiefelPoint& x0,
                  const SolverConfig& cfg, const AccuracyPolicy& policy,
                  double target_F) {
  using clock = std::chrono::steady_clock;
  const auto t_start = clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(clock::now() - t_start).count();
  };

  RunTrace trace;
  trace.target_F = target_F;

  Matrix X = x0.matrix();
  double F_x = pb.F(X);
  trace.F0 = F_x;
  trace.max_feasibility_residual = feasibility_residual(X);

  const int q = stiefel_codim(x0.cols());
  Vector warm_lambda = Vector::Zero(q);
  double L = std::min(std::max(cfg.L_tilde_0, cfg.L_tilde_min),
                      cfg.L_tilde_max);
  const bool is_global = policy.variant == Variant::G;
  const auto psi_policy =
      policy.variant == Variant::U ? psi_bound_u : psi_bound_l;

  trace.status = RunStatus::CapReached;

  for (int k = 0; k < cfg.max_outer; ++k) {
    const double eps_k = policy.epsilon_schedule(k);
    StiefelPoint xk(X);

    ProxSolution sol;
    BacktrackResult bt;
    while (true) {
      const Vector* warm = cfg.warm_start_lambda ? &warm_lambda : nullptr;
      if (is_global) {
        sol = solve_ssn_global(pb, xk, L, cfg.phi, cfg.ssn_cap, warm);
      } else {
        sol = solve_prox_local(pb, xk, L, eps_k, policy.rho, psi_policy,
                               policy.delta_r, cfg.coord_cap, cfg.ssn_cap,
                               warm);
      }
      if (sol.certified) {
        // Stationary to roundoff: no strict decrease is representable.
        if (sol.eta_hat.norm() * L <= 1e-12 * (1.0 + std::abs(F_x))) {
          trace.status = RunStatus::Converged;
          trace.final_X = X;
          return trace;
        }
        bt = backtrack(pb, X, sol.eta_hat, F_x, cfg);
        if (!bt.failed) break;
      }
      // No certificate or no descent: escalate L within its cap.
      if (L >= cfg.L_tilde_max * (1.0 - 1e-12)) {
        trace.status = RunStatus::EscalationFailed;
        trace.final_X = X;
        return trace;
      }
      L = std::min(L * cfg.escalation_factor, cfg.L_tilde_max);
      ++trace.escalations;
    }
    warm_lambda = sol.lambda_hat;

    const double eta_norm = sol.eta_hat.norm();
    trace.max_tangency_residual =
        std::max(trace.max_tangency_residual,
                 tangency_residual(X, sol.eta_hat) / (1.0 + eta_norm));

    TraceRow row;
    row.k = k;
    row.F_after = bt.F_next;
    row.eta_norm = eta_norm;
    row.L_tilde = L;
    row.alpha = bt.alpha;
    row.inner_iters = sol.inner_iters;
    row.certificate = sol.certificate;
    row.seconds = elapsed();
    row.psi_norm = sol.psi_norm;
    row.psi_bound = sol.psi_bound;
    row.model_at_zero = sol.model_at_zero;
    row.model_at_eta = sol.model_at_eta;
    trace.rows.push_back(row);

    if (k == 0) trace.baseline_stat = eta_norm * L;

    const Matrix rgrad_next = pb.rgrad(bt.x_next);

    // Barzilai-Borwein seed for the next iteration, computed at x_k.
    const Matrix y = proj_tangent(X, rgrad_next) - pb.rgrad(X);
    const Matrix s = bt.alpha * sol.eta_hat;
    const double L_next =
        bb_stepsize(y, s, cfg.L_tilde_min, cfg.L_tilde_max, L);

    X = bt.x_next;
    F_x = bt.F_next;
    L = L_next;
    trace.max_feasibility_residual =
        std::max(trace.max_feasibility_residual, feasibility_residual(X));

    if (is_global) {
      if (eta_norm * row.L_tilde <= cfg.stop_factor * trace.baseline_stat &&
          k > 0) {
        trace.status = RunStatus::Converged;
        break;
      }
    } else if (F_x <= target_F) {
      trace.status = RunStatus::TargetReached;
      break;
    }
  }

  trace.final_X = X;
  return trace;
}

void write_trace_csv(const std::string& path, const RunTrace& trace) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open trace file: " + path);
  out << "k,F,eta_norm,L_tilde,alpha,inner_iters,certificate,seconds\n";
  char buf[256];
  for (const auto& r : trace.rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%d,%s,%.6f\n",
                  r.k, r.F_after, r.eta_norm, r.L_tilde, r.alpha, r.inner_iters,
                  r.certificate == Certificate::GlobalResidual ? "global" : "local",
                  r.seconds);
    out << buf;
  }
  out << "# status=" << to_string(trace.status) << " F0=" << trace.F0
      << " baseline=" << trace.baseline_stat
      << " escalations=" << trace.escalations << "\n";
}

}  // namespace irpg
