#include "tml/ascent.hpp"

#include <algorithm>
#include <cmath>

#include "tml/linprog.hpp"
#include "tml/matrix_core.hpp"

namespace tml {

namespace {

Matrix inverse_sqrt(const Matrix& rhat) {
  const EigenSystem es = eigh(rhat);
  const int n = static_cast<int>(es.values.size());
  if (es.values(n - 1) <= 0.0)
    throw std::domain_error("equalize: Rhat not positive definite");
  Vector inv_sqrt = es.values.cwiseSqrt().cwiseInverse();
  return hermitize(es.vectors * inv_sqrt.asDiagonal() * es.vectors.adjoint());
}

// Whitened sensitivities: row j holds v_j' A_k v_j over k, with v_j = W u_j,
// W = Rhat^{-1/2} and u_j the j-th eigenvector of D. Real up to rounding.
RealMatrix whitened_sensitivities(const Matrix& w, const EigenSystem& d_es) {
  const int n = static_cast<int>(d_es.values.size());
  RealMatrix b(n, n - 1);
  for (int j = 0; j < n; ++j) {
    const ComplexVector v = w * d_es.vectors.col(j);
    for (int k = 1; k < n; ++k) {
      Complex s = 0.0;
      for (int i = 0; i + k < n; ++i) s += std::conj(v(i)) * v(i + k);
      b(j, k - 1) = 2.0 * s.real();
    }
  }
  return b;
}

struct EqualizeState {
  Matrix w;  // Rhat^{-1/2}, cached per Rhat
};

AscentStep step_impl(const SymToeplitz& t_n, const Matrix& w, double xi,
                     const AscentConfig& cfg) {
  const int n = t_n.size();
  const int nx = n - 1;

  const Matrix d = hermitize(w * to_dense(t_n) * w);
  const EigenSystem d_es = eigh(d);
  const double spread0 = d_es.values(0) - d_es.values(n - 1);
  const RealMatrix b = whitened_sensitivities(w, d_es);

  while (xi >= cfg.xi_floor) {
    // Variables [a_1..a_{N-1}, x_min, x_max]; minimize the predicted spread.
    LpProblem lp = LpProblem::make(nx + 2);
    lp.cost(nx) = -1.0;
    lp.cost(nx + 1) = 1.0;
    lp.ineq_a = RealMatrix::Zero(2 * n, nx + 2);
    lp.ineq_b = Vector(2 * n);
    for (int j = 0; j < n; ++j) {
      // x_min <= lambda_j + (B a)_j
      lp.ineq_a.row(2 * j).head(nx) = -b.row(j);
      lp.ineq_a(2 * j, nx) = 1.0;
      lp.ineq_b(2 * j) = d_es.values(j);
      // lambda_j + (B a)_j <= x_max
      lp.ineq_a.row(2 * j + 1).head(nx) = b.row(j);
      lp.ineq_a(2 * j + 1, nx + 1) = -1.0;
      lp.ineq_b(2 * j + 1) = -d_es.values(j);
    }
    for (int k = 0; k < nx; ++k) {
      lp.lb(k) = -xi;
      lp.ub(k) = xi;
    }
    lp.lb(nx) = 0.0;
    lp.lb(nx + 1) = 0.0;

    const LpSolution sol = solve_lp(lp);
    if (sol.status != LpStatus::Optimal) return {t_n, true};

    Vector lags = t_n.lags();
    for (int k = 0; k < nx; ++k) lags(k + 1) += sol.x(k);
    SymToeplitz t_next(lags);

    Vector predicted = d_es.values + b * sol.x.head(nx);
    std::sort(predicted.data(), predicted.data() + n, std::greater<double>());

    // Accept only when the first-order model held, the iterate stayed
    // positive definite, and the true spread did not grow.
    bool ok = min_eigenvalue(t_next) > 0.0;
    Vector actual;
    if (ok) {
      actual = eigh(hermitize(w * to_dense(t_next) * w)).values;
      for (int j = 0; ok && j < n; ++j) {
        const double denom = std::abs(predicted(j)) + 1e-12;
        if (std::abs(actual(j) - predicted(j)) > cfg.expansion_tol * denom) ok = false;
      }
      if (ok && actual(0) - actual(n - 1) > spread0) ok = false;
    }
    if (ok) return {t_next, false};
    xi *= cfg.xi_shrink;
  }
  return {t_n, true};
}

}  // namespace

AscentStep equalize_step(const SymToeplitz& t_n, const Matrix& rhat, double xi,
                         const AscentConfig& cfg) {
  if (min_eigenvalue(t_n) <= 0.0)
    throw std::domain_error("equalize_step: T must be positive definite");
  return step_impl(t_n, inverse_sqrt(rhat), xi, cfg);
}

SymToeplitz equalize(const SymToeplitz& t0, const Matrix& rhat, const AscentConfig& cfg) {
  if (cfg.max_steps <= 0) return t0;
  if (min_eigenvalue(t0) <= 0.0)
    throw std::domain_error("equalize: T must be positive definite");

  const Matrix w = inverse_sqrt(rhat);
  SymToeplitz current = t0;
  SymToeplitz best = t0;
  double best_log_lr = log_likelihood_ratio(rhat, t0);
  int stalls = 0;

  for (int step = 0; step < cfg.max_steps && stalls < cfg.stall_limit; ++step) {
    const AscentStep s = step_impl(current, w, cfg.xi, cfg);
    if (s.stalled) break;
    current = s.matrix;
    const double ll = log_likelihood_ratio(rhat, current);
    if (ll > best_log_lr) {
      best_log_lr = ll;
      best = current;
      stalls = 0;
    } else {
      ++stalls;
    }
  }
  return best;
}

}  // namespace tml
