// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Runs end to end in a few minutes; the large variant-comparison
// block is shared by the last two criteria.

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "irpg/audits.hpp"
#include "irpg/bench.hpp"
#include "irpg/rng.hpp"

using namespace irpg;

namespace {

int g_failures = 0;

void report(int id, bool pass, const std::string& what,
            const std::string& detail) {
  std::printf("[%s] criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL", id,
              what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof(buf), f, args);
  va_end(args);
  return buf;
}

struct PairedRun {
  RunTrace g, u, l;
  bool flagged = false;
};

PairedRun paired_run(int n, int p, int m, double lambda, std::uint64_t seed,
                     int max_outer) {
  const Matrix A = gen_data(m, n, seed);
  CompositeProblem pb = make_spca_problem(A, p, lambda);
  StiefelPoint x0 = init_point(A, p);
  SolverConfig cfg = make_config(default_L0(A));
  cfg.max_outer = max_outer;

  PairedRun out;
  out.g = irpg_run(pb, x0, cfg, make_policy(Variant::G));
  const double target =
      out.g.rows.empty() ? pb.F(x0.matrix()) : out.g.rows.back().F_after;
  out.u = irpg_run(pb, x0, cfg, make_policy(Variant::U), target);
  out.l = irpg_run(pb, x0, cfg, make_policy(Variant::L), target);
  const double d_gu = (out.g.final_X - out.u.final_X).norm();
  const double d_gl = (out.g.final_X - out.l.final_X).norm();
  const double d_ul = (out.u.final_X - out.l.final_X).norm();
  out.flagged = d_gu >= 1e-2 || d_gl >= 1e-2 || d_ul >= 1e-2;
  return out;
}

}  // namespace

int main() {
  // ---- 1. Tangency of returned directions, feasibility of iterates -------
  {
    double max_tan = 0.0, max_feas = 0.0;
    for (std::uint64_t seed : {101ull, 102ull, 103ull}) {
      const Matrix A = gen_data(20, 50, seed);
      CompositeProblem pb = make_spca_problem(A, 3, 2.0);
      StiefelPoint x0 = init_point(A, 3);
      SolverConfig cfg = make_config(default_L0(A));
      cfg.max_outer = 300;
      for (Variant v : {Variant::G, Variant::U, Variant::L}) {
        RunTrace tr =
            irpg_run(pb, x0, cfg, make_policy(v),
                     v == Variant::G ? std::numeric_limits<double>::quiet_NaN()
                                     : -1e300);
        max_tan = std::max(max_tan, tr.max_tangency_residual);
        max_feas = std::max(max_feas, tr.max_feasibility_residual);
      }
      // Direct subsolver calls at random feasible points.
      Rng rng(seed);
      for (int t = 0; t < 3; ++t) {
        StiefelPoint x = StiefelPoint::random(50, 3, rng);
        const double Lt = default_L0(A);
        ProxSolution gs = solve_ssn_global(
            pb, x, Lt, [](double s) { return std::sqrt(s); }, 200);
        max_tan = std::max(max_tan,
                           tangency_residual(x.matrix(), gs.eta_hat) /
                               (1.0 + gs.eta_hat.norm()));
        ProxSolution ls = solve_prox_local(pb, x, Lt,
                                           default_epsilon_schedule(t), 100.0,
                                           psi_bound_l, 0.1, 200, 200);
        max_tan = std::max(max_tan,
                           tangency_residual(x.matrix(), ls.eta_hat) /
                               (1.0 + ls.eta_hat.norm()));
      }
    }
    report(1, max_tan <= 1e-10 && max_feas <= 1e-10,
           "directions tangent, iterates feasible",
           fmt("max tangency %.2e, max feasibility %.2e", max_tan, max_feas));
  }

  // ---- 2. Gradient consistency against central differences ---------------
  {
    const Matrix A = gen_data(20, 50, 1);
    CompositeProblem pb = make_spca_problem(A, 3, 0.0);
    Rng rng(202);
    StiefelPoint x = StiefelPoint::random(50, 3, rng);
    const Matrix& X = x.matrix();
    const Matrix rg = pb.rgrad(X);
    double worst = 0.0;
    for (int t = 0; t < 10; ++t) {
      Matrix eta = proj_tangent(X, rng.normal_matrix(50, 3));
      const double h = 1e-6;
      const double fd = (pb.f.eval(retract_polar(X, Matrix(h * eta))) -
                         pb.f.eval(retract_polar(X, Matrix(-h * eta)))) /
                        (2.0 * h);
      const double ip = (rg.array() * eta.array()).sum();
      worst = std::max(worst, std::abs(fd - ip) / (1.0 + std::abs(ip)));
    }
    report(2, worst <= 1e-5, "Riemannian gradient matches finite differences",
           fmt("worst relative error %.2e over 10 directions", worst));
  }

  // ---- 3. Prox against brute-force grid minimization ---------------------
  {
    NonsmoothCost g = l1_nonsmooth(1.0, 1, 1);
    Rng rng(303);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      const double z = 6.0 * rng.uniform() - 3.0;
      const double tau = 0.01 + rng.uniform();
      double best_v = -4.0, best = 1e300;
      for (double v = -4.0; v <= 4.0 + 1e-12; v += 1e-4) {
        const double obj = 0.5 * (v - z) * (v - z) + tau * std::abs(v);
        if (obj < best) {
          best = obj;
          best_v = v;
        }
      }
      Matrix zm(1, 1);
      zm << z;
      worst = std::max(worst, std::abs(g.prox(zm, tau)(0, 0) - best_v));
    }
    report(3, worst <= 1e-3, "soft-thresholding matches the grid oracle",
           fmt("worst gap %.2e over 100 samples", worst));
  }

  // ---- 4. Linear-case subsolver exactness ---------------------------------
  {
    const Matrix A = gen_data(20, 50, 4);
    CompositeProblem pb = make_spca_problem(A, 3, 0.0);
    Rng rng(404);
    StiefelPoint x = StiefelPoint::random(50, 3, rng);
    const double Lt = default_L0(A);
    const Matrix rg = pb.rgrad(x.matrix());

    // One Newton step from a generic multiplier lands on the root
    // (Lambda* = B^T grad = 0 for the tangent gradient).
    SsnOptions opt;
    opt.max_iters = 1;
    Vector lam0 = rng.normal_vector(6);
    SsnOutcome one = ssn_tangent_prox(
        x.matrix(), rg, pb.g, Lt,
        [](const Matrix&, double pn) { return pn <= 1e-30; }, lam0, opt);
    const double lam_err = one.lambda.norm();

    ProxSolution sol = solve_ssn_global(
        pb, x, Lt, [](double t) { return std::sqrt(t); }, 50);
    const double eta_err =
        (sol.eta_hat + rg / Lt).norm() / (1.0 + rg.norm() / Lt);
    report(4,
           sol.certified && one.iters <= 1 && lam_err <= 1e-10 &&
               eta_err <= 1e-10,
           "smooth case solved in one Newton step",
           fmt("|lambda - lambda*| %.2e, |eta + rgrad/L| %.2e", lam_err,
               eta_err));
  }

  // ---- 5. Certificate soundness over 20 instances -------------------------
  {
    int failures = 0;
    auto phi = [](double t) { return std::sqrt(t); };
    for (int i = 0; i < 20; ++i) {
      const std::uint64_t seed = 500 + i;
      const Matrix A = gen_data(20, 50, seed);
      CompositeProblem pb = make_spca_problem(A, 3, 2.0);
      Rng rng(seed);
      StiefelPoint x = StiefelPoint::random(50, 3, rng);
      const double Lt = default_L0(A);

      ProxSolution gs = solve_ssn_global(pb, x, Lt, phi, 200);
      if (!gs.certified) ++failures;
      for (const auto& rep : audit_certificates(gs, pb, x, Lt, phi))
        if (!rep.pass) ++failures;

      ProxSolution ls =
          solve_prox_local(pb, x, Lt, default_epsilon_schedule(i), 100.0,
                           psi_bound_l, 0.1, 200, 200);
      if (!ls.certified) ++failures;
      for (const auto& rep :
           audit_certificates(ls, pb, x, Lt, phi, psi_bound_l))
        if (!rep.pass) ++failures;
    }
    report(5, failures == 0,
           "subsolver certificates re-verify independently",
           fmt("%d failed checks over 20 instances", failures));
  }

  // ---- 6. Error bound with oracle-computed quantities ---------------------
  {
    int violations = 0;
    int audited = 0;
    for (int i = 0; i < 20; ++i) {
      const std::uint64_t seed = 600 + i;
      const Matrix A = gen_data(8, 10, seed);
      CompositeProblem pb = make_spca_problem(A, 2, 1.0);
      Rng rng(seed);
      StiefelPoint x = StiefelPoint::random(10, 2, rng);
      const double Lt = default_L0(A);
      TangentBasis Q(x);
      Vector c_star;
      try {
        c_star = oracle_coordinate_minimizer(pb, x, Lt, Q);
      } catch (const std::exception&) {
        ++violations;
        continue;
      }
      std::vector<Vector> samples;
      samples.push_back(c_star + 0.02 * rng.normal_vector(Q.dim()));
      Vector far = rng.normal_vector(Q.dim());
      far *= 0.4 / far.norm();
      samples.push_back(far);
      auto audit = audit_error_bound(pb, x, Lt, samples);
      for (const auto& rep : audit.reports) {
        ++audited;
        if (!rep.pass) ++violations;
      }
    }
    report(6, violations == 0, "coordinate error bound |c - c*| <= 2 |r(c)|",
           fmt("%d violations over %d audited samples", violations, audited));
  }

  // ---- 7 & 8. Descent and complexity on a fixed-L run ---------------------
  {
    const Matrix A = gen_data(20, 50, 22);
    CompositeProblem pb = make_spca_problem(A, 3, 2.0);
    StiefelPoint x0 = init_point(A, 3);
    const double L_hat = spca_hessian_bound(A);  // 2 sigma_max^2

    SolverConfig cfg = make_config(2.0 * L_hat);  // L = 4 sigma_max^2
    cfg.L_tilde_min = cfg.L_tilde_max = cfg.L_tilde_0;
    cfg.max_outer = 30000;
    cfg.stop_factor = 5e-3;
    RunTrace tr = irpg_run(pb, x0, cfg, make_policy(Variant::G));

    auto des = audit_descent(tr, L_hat);
    int fails = 0;
    for (const auto& rep : des) fails += !rep.pass;
    report(7,
           tr.status == RunStatus::Converged && !des.empty() && fails == 0,
           "per-iteration descent inequality at fixed L",
           fmt("%zu full steps audited, %d failures", des.size(), fails));

    const double eps = 1e-2 * tr.rows.front().eta_norm;
    AuditReport comp = audit_complexity(tr, L_hat, eps);
    report(8, comp.pass, "iteration complexity bound",
           fmt("first k below eps: %.0f, bound %.0f", comp.measured,
               comp.bound));
  }

  // ---- 9 & 10. Variant comparison over ten seeds ---------------------------
  {
    const int kSeeds = 10;
    double sum_g = 0, sum_u = 0, sum_l = 0;
    int used = 0, stopped_all = 0;
    for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
      PairedRun pr = paired_run(256, 4, 20, 2.0, seed, 5000);
      const bool g_ok = pr.g.status == RunStatus::Converged;
      const bool u_ok = pr.u.status == RunStatus::TargetReached;
      const bool l_ok = pr.l.status == RunStatus::TargetReached;
      if (g_ok && u_ok && l_ok) ++stopped_all;
      if (!pr.flagged) {
        ++used;
        sum_g += static_cast<double>(pr.g.rows.size());
        sum_u += static_cast<double>(pr.u.rows.size());
        sum_l += static_cast<double>(pr.l.rows.size());
      }
    }
    const double mg = sum_g / used, mu = sum_u / used, ml = sum_l / used;
    report(9, used > 0 && mg > mu && mu >= ml,
           "mean iterations order G > U >= L",
           fmt("G %.1f, U %.1f, L %.1f over %d filtered seeds", mg, mu, ml,
               used));
    report(10, stopped_all >= 9,
           "all variants reach their stopping rules; paired finals agree",
           fmt("%d/10 seeds stopped within cap, %d agree within 1e-2",
               stopped_all, used));
  }

  std::printf("%s: %d criterion failure(s)\n",
              g_failures == 0 ? "ACCEPTANCE PASSED" : "ACCEPTANCE FAILED",
              g_failures);
  return g_failures == 0 ? 0 : 1;
}
