#include "irpg/subsolver.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace irpg {

namespace {

Matrix prox_argument(const Matrix& Y, const Matrix& G, double L_tilde,
                     const Matrix& BLambda) {
  return Y - (G - BLambda) / L_tilde;
}

}  // namespace

Matrix v_of_lambda_at(const Matrix& Y, const Matrix& G, const NonsmoothCost& g,
                      double L_tilde, const Vector& lambda) {
  if (L_tilde <= 0.0) throw std::invalid_argument("v_of_lambda: L_tilde <= 0");
  const Matrix BL = normal_basis_apply(Y, lambda);
  const Matrix z = prox_argument(Y, G, L_tilde, BL);
  return g.prox(z, 1.0 / L_tilde) - Y;
}

Vector psi_at(const Matrix& Y, const Matrix& G, const NonsmoothCost& g,
              double L_tilde, const Vector& lambda) {
  return normal_basis_adjoint(Y, v_of_lambda_at(Y, G, g, L_tilde, lambda));
}

Vector psi_jacobian_apply_at(const Matrix& Y, const Matrix& G,
                             const NonsmoothCost& g, double L_tilde,
                             const Vector& lambda, const Vector& d) {
  const Matrix BL = normal_basis_apply(Y, lambda);
  const Matrix z = prox_argument(Y, G, L_tilde, BL);
  const Matrix mask = g.prox_jacobian_diag(z, 1.0 / L_tilde);
  const Matrix Bd = normal_basis_apply(Y, d);
  return normal_basis_adjoint(Y, Matrix(mask.array() * Bd.array())) / L_tilde;
}

Matrix psi_jacobian_dense_at(const Matrix& Y, const Matrix& G,
                             const NonsmoothCost& g, double L_tilde,
                             const Vector& lambda) {
  const int q = stiefel_codim(static_cast<int>(Y.cols()));
  const Matrix BL = normal_basis_apply(Y, lambda);
  const Matrix z = prox_argument(Y, G, L_tilde, BL);
  const Matrix mask = g.prox_jacobian_diag(z, 1.0 / L_tilde);
  Matrix J(q, q);
  Vector e = Vector::Zero(q);
  for (int j = 0; j < q; ++j) {
    e(j) = 1.0;
    const Matrix Bd = normal_basis_apply(Y, e);
    J.col(j) = normal_basis_adjoint(Y, Matrix(mask.array() * Bd.array()));
    e(j) = 0.0;
  }
  J /= L_tilde;
  return Matrix(0.5 * (J + J.transpose()));
}

Matrix v_of_lambda(const CompositeProblem& pb, const StiefelPoint& x,
                   double L_tilde, const Vector& lambda) {
  return v_of_lambda_at(x.matrix(), pb.rgrad(x.matrix()), pb.g, L_tilde,
                        lambda);
}

Vector psi(const CompositeProblem& pb, const StiefelPoint& x, double L_tilde,
           const Vector& lambda) {
  return psi_at(x.matrix(), pb.rgrad(x.matrix()), pb.g, L_tilde, lambda);
}

Vector psi_jacobian_apply(const CompositeProblem& pb, const StiefelPoint& x,
                          double L_tilde, const Vector& lambda,
                          const Vector& d) {
  return psi_jacobian_apply_at(x.matrix(), pb.rgrad(x.matrix()), pb.g, L_tilde,
                               lambda, d);
}

SsnOutcome ssn_tangent_prox(
    const Matrix& Y, const Matrix& G, const NonsmoothCost& g, double L_tilde,
    const std::function<bool(const Matrix& eta, double psi_norm)>& accept,
    const Vector& lambda0, const SsnOptions& opt) {
  const int q = stiefel_codim(static_cast<int>(Y.cols()));
  if (lambda0.size() != q)
    throw std::invalid_argument("ssn: multiplier length mismatch");

  SsnOutcome out;
  out.lambda = lambda0;

  Matrix v = v_of_lambda_at(Y, G, g, L_tilde, out.lambda);
  Vector Psi = normal_basis_adjoint(Y, v);
  out.psi_norm = Psi.norm();
  out.eta = proj_tangent(Y, v);

  for (out.iters = 0; out.iters <= opt.max_iters; ++out.iters) {
    if (accept(out.eta, out.psi_norm) || out.psi_norm <= opt.psi_floor) {
      out.accepted = true;
      return out;
    }
    if (out.iters == opt.max_iters) break;

    const Matrix J =
        psi_jacobian_dense_at(Y, G, g, L_tilde, out.lambda);
    Vector d;
    bool solved = false;
    // The smooth case (identity prox) yields an exactly linear system; one
    // undamped Newton step solves it. Otherwise the Clarke Jacobian may be
    // degenerate and a Tikhonov shift keeps the step well posed.
    if (g.lipschitz == 0.0) {
      Eigen::LDLT<Matrix> ldlt(J);
      if (ldlt.info() == Eigen::Success) {
        d = ldlt.solve(-Psi);
        solved = d.allFinite() &&
                 (J * d + Psi).norm() <= 1e-10 * std::max(1.0, Psi.norm());
      }
    }
    double mu = std::min(opt.mu_cap, out.psi_norm);
    if (opt.mu_scaled_by_L) mu /= L_tilde;
    mu = std::max(mu, opt.mu_floor);
    if (!solved) {
      Eigen::LDLT<Matrix> ldlt(
          Matrix(J + mu * Matrix::Identity(q, q)));
      d = ldlt.solve(-Psi);
      if (!d.allFinite()) {
        // Last resort: gradient-like step on ||Psi||^2.
        d = -Psi;
      }
    }

    // Halving line search on ||Psi||^2.
    const double base = out.psi_norm * out.psi_norm;
    double t = 1.0;
    bool stepped = false;
    for (int h = 0; h <= opt.max_halvings; ++h, t *= 0.5) {
      const Vector cand = out.lambda + t * d;
      const Matrix v_c = v_of_lambda_at(Y, G, g, L_tilde, cand);
      const Vector Psi_c = normal_basis_adjoint(Y, v_c);
      const double val = Psi_c.squaredNorm();
      if (val <= (1.0 - 2.0 * opt.armijo * t) * base) {
        out.lambda = cand;
        v = v_c;
        Psi = Psi_c;
        out.psi_norm = Psi.norm();
        out.eta = proj_tangent(Y, v);
        stepped = true;
        break;
      }
    }
    if (!stepped) {
      // Retry once with a strongly regularized direction before giving up.
      mu = std::max(mu, opt.mu_scaled_by_L ? 0.1 / L_tilde : 0.1);
      Eigen::LDLT<Matrix> ldlt(Matrix(J + mu * Matrix::Identity(q, q)));
      d = ldlt.solve(-Psi);
      t = 1.0;
      for (int h = 0; h <= opt.max_halvings; ++h, t *= 0.5) {
        const Vector cand = out.lambda + t * d;
        const Matrix v_c = v_of_lambda_at(Y, G, g, L_tilde, cand);
        const Vector Psi_c = normal_basis_adjoint(Y, v_c);
        if (Psi_c.squaredNorm() <= (1.0 - 2.0 * opt.armijo * t) * base) {
          out.lambda = cand;
          v = v_c;
          Psi = Psi_c;
          out.psi_norm = Psi.norm();
          out.eta = proj_tangent(Y, v);
          stepped = true;
          break;
        }
      }
      if (!stepped) break;  // stagnated; caller escalates
    }
    if (opt.diagnostics)
      *opt.diagnostics << out.iters << "," << out.psi_norm << "," << mu << ","
                       << t << "\n";
  }
  out.accepted = false;
  return out;
}

ProxSolution solve_ssn_global(const CompositeProblem& pb, const StiefelPoint& x,
                              double L_tilde,
                              const std::function<double(double)>& phi,
                              int cap, const Vector* warm_lambda) {
  const Matrix& X = x.matrix();
  const Matrix rg = pb.rgrad(X);
  const double ell0 = pb.g.eval(X);
  const int q = stiefel_codim(x.cols());

  double ell_eta = 0.0, bound = 0.0;
  auto accept = [&](const Matrix& eta, double psi_norm) {
    bound = std::min(phi(eta.norm()), 0.5);
    if (psi_norm > bound) return false;
    ell_eta = (rg.array() * eta.array()).sum() +
              0.5 * L_tilde * eta.squaredNorm() +
              pb.g.eval(retract_polar(X, eta));
    return ell0 >= ell_eta;
  };

  SsnOptions opt;
  opt.max_iters = cap;
  Vector lam0 = warm_lambda ? *warm_lambda : Vector(Vector::Zero(q));
  SsnOutcome res = ssn_tangent_prox(X, rg, pb.g, L_tilde, accept, lam0, opt);

  ProxSolution sol;
  sol.eta_hat = res.eta;
  sol.lambda_hat = res.lambda;
  sol.psi_norm = res.psi_norm;
  sol.psi_bound = std::min(phi(res.eta.norm()), 0.5);
  sol.model_at_zero = ell0;
  sol.model_at_eta =
      res.accepted ? ell_eta
                   : (rg.array() * res.eta.array()).sum() +
                         0.5 * L_tilde * res.eta.squaredNorm() +
                         pb.g.eval(retract_polar(X, res.eta));
  sol.certificate = Certificate::GlobalResidual;
  sol.inner_iters = res.iters;
  sol.certified = res.accepted;
  return sol;
}

InnerResidual residual_tilde_inner(const CompositeProblem& pb, const Matrix& X,
                                   const Matrix& rgrad_x, const Matrix& xi,
                                   double L_tilde, double delta_r,
                                   const SsnOptions& opt,
                                   const Vector* warm_lambda) {
  if (delta_r <= 0.0 || delta_r >= 1.0)
    throw std::invalid_argument("residual_tilde: delta_r must be in (0,1)");
  InnerResidual out;

  const Matrix Gx = rgrad_x + L_tilde * xi;  // tangent at x
  const Matrix Y = retract_polar(X, xi);
  const Matrix Gy = transport_inverse_adjoint(X, xi, Gx);
  const double kappa =
      1.5 * std::max(1.0, transport_inverse_opnorm(X, xi));
  const double Gy_norm = Gy.norm();
  const double floor_abs =
      std::max(opt.psi_floor, 1e-13 * (1.0 + Gy_norm));

  // ||u_hat - u*|| <= 2 sqrt(theta ||Psi|| / Lt) by strong convexity of the
  // shifted model; kappa converts to the coordinate metric at x.
  auto err_of = [&](double psi_norm) {
    const double theta =
        Gy_norm + 0.5 * L_tilde * psi_norm + pb.g.lipschitz;
    return kappa * 2.0 * std::sqrt(theta * psi_norm / L_tilde);
  };

  Matrix w_cur;
  double w_norm = 0.0;
  auto accept = [&](const Matrix& eta_y, double psi_norm) {
    if (psi_norm <= floor_abs) {
      w_cur = transport_inverse(X, xi, eta_y);
      w_norm = w_cur.norm();
      return true;
    }
    const double err = err_of(psi_norm);
    // Quick reject on the cheap bound ||w|| >= ||eta_y|| / kappa is not
    // available (w may shrink), so evaluate the pullback when plausible.
    w_cur = transport_inverse(X, xi, eta_y);
    w_norm = w_cur.norm();
    return err <= delta_r * w_norm;
  };

  const int q = stiefel_codim(static_cast<int>(X.cols()));
  SsnOptions inner_opt = opt;
  inner_opt.mu_scaled_by_L = true;  // these solves run to tight tolerances
  Vector lam0 = warm_lambda ? *warm_lambda : Vector(Vector::Zero(q));
  SsnOutcome res =
      ssn_tangent_prox(Y, Gy, pb.g, L_tilde, accept, lam0, inner_opt);

  out.w = proj_tangent(X, w_cur);  // clean transport roundoff
  out.norm = w_norm;
  out.err_bound = err_of(res.psi_norm);
  out.lambda = res.lambda;
  out.ssn_iters = res.iters;
  out.ok = res.accepted;
  return out;
}

ResidualReport residual_tilde(const CompositeProblem& pb, const StiefelPoint& x,
                              const Vector& c, double L_tilde, double delta_r) {
  TangentBasis Q(x);
  if (c.size() != Q.dim())
    throw std::invalid_argument("residual_tilde: coordinate length mismatch");
  const Matrix xi = Q.apply(c);
  SsnOptions opt;
  opt.max_iters = 200;
  InnerResidual inner = residual_tilde_inner(pb, x.matrix(),
                                             pb.rgrad(x.matrix()), xi, L_tilde,
                                             delta_r, opt);
  ResidualReport rep;
  rep.c = Q.adjoint(inner.w);
  rep.r_tilde_norm = inner.norm;
  rep.delta_r = delta_r;
  rep.err_bound = inner.err_bound;
  rep.inner_iters = inner.ssn_iters;
  return rep;
}

ProxSolution solve_prox_local(
    const CompositeProblem& pb, const StiefelPoint& x, double L_tilde,
    double eps_k, double rho,
    const std::function<double(double, double, double)>& psi_policy,
    double delta_r, int coord_cap, int ssn_cap, const Vector* warm_lambda,
    const Matrix* xi_start) {
  const Matrix& X = x.matrix();
  const Matrix rg = pb.rgrad(X);
  const double ell0 = pb.g.eval(X);
  const int q = stiefel_codim(x.cols());

  SsnOptions opt;
  opt.max_iters = ssn_cap;

  Matrix xi = xi_start ? proj_tangent(X, *xi_start)
                       : Matrix(Matrix::Zero(X.rows(), X.cols()));
  bool may_stop = xi_start != nullptr && xi.norm() > 0.0;
  Vector lam = warm_lambda ? *warm_lambda : Vector(Vector::Zero(q));

  ProxSolution sol;
  sol.certificate = Certificate::LocalLinearized;
  sol.eps_k = eps_k;
  sol.rho = rho;
  sol.delta_r = delta_r;
  sol.model_at_zero = ell0;

  auto ell_of = [&](const Matrix& eta) {
    return (rg.array() * eta.array()).sum() +
           0.5 * L_tilde * eta.squaredNorm() +
           pb.g.eval(retract_polar(X, eta));
  };

  InnerResidual inner;
  int i = 0;
  for (; i < coord_cap; ++i) {
    inner = residual_tilde_inner(pb, X, rg, xi, L_tilde, delta_r, opt, &lam);
    lam = inner.lambda;
    if (may_stop && inner.ok) {
      const double psi_val = psi_policy(eps_k, rho, xi.norm());
      if (inner.norm <= psi_val / (1.0 + delta_r)) {
        const double ell_eta = ell_of(xi);
        if (ell0 >= ell_eta) {
          sol.eta_hat = xi;
          sol.lambda_hat = lam;
          sol.psi_norm = inner.norm;
          sol.psi_bound = psi_val;
          sol.model_at_eta = ell_eta;
          sol.inner_iters = i;
          sol.certified = true;
          return sol;
        }
      }
    }
    xi = proj_tangent(X, Matrix(xi + inner.w));
    may_stop = true;
  }

  // Cap reached without a certificate: report the last iterate.
  sol.eta_hat = xi;
  sol.lambda_hat = lam;
  sol.psi_norm = inner.norm;
  sol.psi_bound = psi_policy(eps_k, rho, xi.norm());
  sol.model_at_eta = ell_of(xi);
  sol.inner_iters = i;
  sol.certified = false;
  return sol;
}

}  // namespace irpg
