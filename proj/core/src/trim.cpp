#include "tml/trim.hpp"

#include <algorithm>
#include <cmath>

#include "tml/linprog.hpp"
#include "tml/matrix_core.hpp"
#include "tml/rng.hpp"

namespace tml {

namespace {

// u' A_k u for the two-diagonal basis matrix: 2 * sum_i u(i) u(i+k).
double lag_quadratic(const Eigen::Ref<const Vector>& u, int k) {
  const int n = static_cast<int>(u.size());
  double s = 0.0;
  for (int i = 0; i + k < n; ++i) s += u(i) * u(i + k);
  return 2.0 * s;
}

Vector real_eigvec(const EigenSystem& es, int j) { return es.vectors.col(j).real(); }

}  // namespace

RealMatrix sensitivity_matrix(const EigenSystem& es) {
  const int n = static_cast<int>(es.values.size());
  const double scale = std::max(std::abs(es.values(0)), std::abs(es.values(n - 1)));
  for (int j = 0; j + 1 < n; ++j)
    if (es.values(j) - es.values(j + 1) <= 1e-10 * std::max(scale, 1e-300))
      throw degeneracy_error("sensitivity_matrix: (near-)degenerate eigenvalues");
  RealMatrix s(n, n - 1);
  for (int j = 0; j < n; ++j) {
    const Vector u = real_eigvec(es, j);
    for (int k = 1; k < n; ++k) s(j, k - 1) = lag_quadratic(u, k);
  }
  return s;
}

RealMatrix sensitivity_matrix(const SymToeplitz& t) {
  return sensitivity_matrix(eigh_real(to_dense_real(t)));
}

SymToeplitz diagonal_load(const SymToeplitz& t_in, double target) {
  const double lam_min = min_eigenvalue(t_in);
  if (lam_min >= target) return t_in;
  Vector lags = t_in.lags();
  lags(0) += target - lam_min;
  return SymToeplitz(std::move(lags));
}

namespace {

struct StepOutcome {
  bool applied = false;
  bool lp_failed = false;
  Vector new_lags;
  Vector predicted;  // descending
};

// Eigensystem with the degeneracy-retry rule: one deterministic Toeplitz
// jitter of relative size 1e-10, then give up.
bool sensitivities_with_retry(Vector& lags, EigenSystem& es, RealMatrix& s) {
  for (int attempt = 0; attempt < 2; ++attempt) {
    es = eigh_real(to_dense_real(SymToeplitz(lags)));
    try {
      s = sensitivity_matrix(es);
      return true;
    } catch (const degeneracy_error&) {
      if (attempt == 1) return false;
      SplitMix64 rng(0x7e11a9u);
      const double t0 = lags(0);
      for (int k = 1; k < lags.size(); ++k)
        lags(k) += 1e-10 * t0 * rng.next_uniform(-1.0, 1.0);
    }
  }
  return false;
}

// One LP step of the single-minimum trim at the current iterate.
//
// Variables [x_1..x_{N-1}, y]: x perturbs the off-diagonal lags within
// |x| <= xi, and y is a uniform lift applied to every predicted eigenvalue.
// Minimizing y subject to  lambda_j + (S x)_j + y >= target  maximizes the
// predicted minimum eigenvalue; once y* <= 0 the floor is reachable within
// the box and a second L1-minimal LP picks the smallest perturbation that
// reaches it without overshooting.
StepOutcome single_lp_step(const Vector& lags, const EigenSystem& es, const RealMatrix& s,
                           double target, double xi) {
  const int n = static_cast<int>(lags.size());
  const int nx = n - 1;
  StepOutcome out;

  LpProblem lp = LpProblem::make(nx + 1);
  lp.cost(nx) = 1.0;  // min y
  lp.ineq_a = RealMatrix::Zero(n, nx + 1);
  lp.ineq_b = Vector(n);
  for (int j = 0; j < n; ++j) {
    lp.ineq_a.row(j).head(nx) = -s.row(j);
    lp.ineq_a(j, nx) = -1.0;
    lp.ineq_b(j) = es.values(j) - target;
  }
  for (int k = 0; k < nx; ++k) {
    lp.lb(k) = -xi;
    lp.ub(k) = xi;
  }
  LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::Optimal) {
    out.lp_failed = true;
    return out;
  }

  Vector x = sol.x.head(nx);
  if (sol.objective <= 0.0) {
    // Target reachable: re-solve for the L1-smallest x that still clears the
    // floor, so the minimum is driven to the target rather than past it.
    LpProblem lp2 = LpProblem::make(2 * nx);  // [x; |x| majorants]
    for (int k = 0; k < nx; ++k) lp2.cost(nx + k) = 1.0;
    lp2.ineq_a = RealMatrix::Zero(n + 2 * nx, 2 * nx);
    lp2.ineq_b = Vector(n + 2 * nx);
    for (int j = 0; j < n; ++j) {
      lp2.ineq_a.row(j).head(nx) = -s.row(j);
      lp2.ineq_b(j) = es.values(j) - target;
    }
    for (int k = 0; k < nx; ++k) {
      lp2.ineq_a(n + 2 * k, k) = 1.0;
      lp2.ineq_a(n + 2 * k, nx + k) = -1.0;
      lp2.ineq_b(n + 2 * k) = 0.0;
      lp2.ineq_a(n + 2 * k + 1, k) = -1.0;
      lp2.ineq_a(n + 2 * k + 1, nx + k) = -1.0;
      lp2.ineq_b(n + 2 * k + 1) = 0.0;
    }
    for (int k = 0; k < nx; ++k) {
      lp2.lb(k) = -xi;
      lp2.ub(k) = xi;
      lp2.lb(nx + k) = 0.0;
    }
    LpSolution sol2 = solve_lp(lp2);
    if (sol2.status == LpStatus::Optimal) x = sol2.x.head(nx);
  }

  out.applied = true;
  out.new_lags = lags;
  for (int k = 0; k < nx; ++k) out.new_lags(k + 1) += x(k);
  Vector pred = es.values + s * x;
  std::sort(pred.data(), pred.data() + n, std::greater<double>());
  out.predicted = std::move(pred);
  return out;
}

bool prediction_ok(const Vector& predicted, const Vector& actual, double tol, double floor) {
  for (int j = 0; j < predicted.size(); ++j) {
    const double denom = std::abs(predicted(j)) + floor;
    if (std::abs(actual(j) - predicted(j)) > tol * denom) return false;
  }
  return true;
}

TrimReport finish_by_loading(Vector lags, double target, int iters, int failures) {
  SymToeplitz loaded = diagonal_load(SymToeplitz(std::move(lags)), target);
  TrimReport rep{loaded, iters, min_eigenvalue(loaded), failures, true, false};
  return rep;
}

}  // namespace

TrimReport trim_single(const SymToeplitz& t_in, const TrimConfig& cfg) {
  if (!(cfg.lambda_min_target > 0.0))
    throw std::domain_error("trim_single: positive eigenvalue target required");
  const double target = cfg.lambda_min_target;
  const double done_tol = target * (1.0 - 1e-6);

  Vector lags = t_in.lags();
  Vector eigs = eigvals_lags(t_in);
  const int n = t_in.size();
  if (eigs(n - 1) >= done_tol)
    return TrimReport{t_in, 0, eigs(n - 1), 0, false, false};

  double xi = cfg.xi0;
  int failures = 0;
  int iter = 0;
  for (; iter < cfg.max_outer_iters; ++iter) {
    EigenSystem es;
    RealMatrix s;
    if (!sensitivities_with_retry(lags, es, s))
      return finish_by_loading(std::move(lags), target, iter, failures);
    if (es.values(n - 1) >= done_tol) break;

    bool accepted = false;
    while (xi >= cfg.xi_floor) {
      StepOutcome step = single_lp_step(lags, es, s, target, xi);
      if (step.lp_failed)
        return finish_by_loading(std::move(lags), target, iter, failures);
      const Vector actual = eigvals_lags(SymToeplitz(step.new_lags));
      const bool faithful =
          prediction_ok(step.predicted, actual, cfg.expansion_tol, target);
      const bool monotone = actual(n - 1) >= es.values(n - 1) - 1e-12 * std::abs(target);
      if (faithful && monotone) {
        lags = step.new_lags;
        accepted = true;
        break;
      }
      ++failures;
      xi *= cfg.xi_shrink;
    }
    if (!accepted)
      return finish_by_loading(std::move(lags), target, iter, failures);
  }

  SymToeplitz out(lags);
  const double lam_min = min_eigenvalue(out);
  if (lam_min < done_tol)
    return finish_by_loading(std::move(lags), target, iter, failures);
  return TrimReport{out, iter, lam_min, failures, false, false};
}

namespace {

// One LP step of the K-equal stage. The coupled equality conditions tying the
// shifted noise sub-blocks together are realized as a band: all predicted
// noise eigenvalues must lie in [mu_min, mu_max] with mu_min >= target, and
// the band width mu_max - mu_min is minimized; signal eigenvalues keep the
// plain floor. Variables are [x_1..x_{N-1}, mu_min, mu_max].
StepOutcome multi_lp_step(const Vector& lags, const EigenSystem& es, const RealMatrix& s,
                          double target, double xi, int k_equal) {
  const int n = static_cast<int>(lags.size());
  const int nx = n - 1;
  const int n_sig = n - k_equal;
  StepOutcome out;

  LpProblem lp = LpProblem::make(nx + 2);
  lp.cost(nx) = -1.0;  // min (mu_max - mu_min)
  lp.cost(nx + 1) = 1.0;
  const int rows = n_sig + 2 * k_equal;
  lp.ineq_a = RealMatrix::Zero(rows, nx + 2);
  lp.ineq_b = Vector(rows);
  int r = 0;
  for (int j = 0; j < n_sig; ++j, ++r) {
    lp.ineq_a.row(r).head(nx) = -s.row(j);
    lp.ineq_b(r) = es.values(j) - target;
  }
  for (int j = n_sig; j < n; ++j) {
    // mu_min <= lambda_j + (S x)_j
    lp.ineq_a.row(r).head(nx) = -s.row(j);
    lp.ineq_a(r, nx) = 1.0;
    lp.ineq_b(r) = es.values(j);
    ++r;
    // lambda_j + (S x)_j <= mu_max
    lp.ineq_a.row(r).head(nx) = s.row(j);
    lp.ineq_a(r, nx + 1) = -1.0;
    lp.ineq_b(r) = -es.values(j);
    ++r;
  }
  for (int k = 0; k < nx; ++k) {
    lp.lb(k) = -xi;
    lp.ub(k) = xi;
  }
  lp.lb(nx) = target * (1.0 - 1e-6);  // mu_min floor
  lp.lb(nx + 1) = 0.0;

  LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::Optimal) {
    out.lp_failed = true;
    return out;
  }
  const Vector x = sol.x.head(nx);
  out.applied = true;
  out.new_lags = lags;
  for (int k = 0; k < nx; ++k) out.new_lags(k + 1) += x(k);
  Vector pred = es.values + s * x;
  std::sort(pred.data(), pred.data() + n, std::greater<double>());
  out.predicted = std::move(pred);
  return out;
}

}  // namespace

TrimReport trim_multi(const SymToeplitz& t_in, const TrimConfig& cfg) {
  if (cfg.k_equal < 1 || cfg.k_equal > t_in.size() - 1)
    throw std::domain_error("trim_multi: K in [1, N-1] required");

  // Stage one establishes the floor; with K = 1 the band stage below is a
  // no-op by construction, which keeps the two routines identical there.
  TrimReport rep = trim_single(t_in, cfg);
  if (rep.fallback_used || cfg.k_equal == 1) return rep;

  const int n = t_in.size();
  const int k_equal = cfg.k_equal;
  const double target = cfg.lambda_min_target;
  Vector lags = rep.matrix.lags();
  double xi = cfg.xi0;

  for (; rep.iters < cfg.max_outer_iters; ++rep.iters) {
    EigenSystem es;
    RealMatrix s;
    if (!sensitivities_with_retry(lags, es, s)) {
      rep.coalesced = true;  // cluster already collapsed numerically
      break;
    }
    const double noise_level = std::max(target, es.values.tail(k_equal).mean());
    const double spread = es.values(n - k_equal) - es.values(n - 1);
    if (spread <= cfg.expansion_tol * noise_level && es.values(n - 1) >= target * (1.0 - 1e-6))
      break;

    bool accepted = false;
    while (xi >= cfg.xi_floor) {
      StepOutcome step = multi_lp_step(lags, es, s, target, xi, k_equal);
      if (step.lp_failed) break;
      const Vector actual = eigvals_lags(SymToeplitz(step.new_lags));
      const double new_spread = actual(n - k_equal) - actual(n - 1);
      const bool faithful =
          prediction_ok(step.predicted, actual, cfg.expansion_tol, target);
      if (faithful && new_spread <= spread && actual(n - 1) >= target * (1.0 - 1e-6)) {
        lags = step.new_lags;
        accepted = true;
        break;
      }
      ++rep.expansion_failures;
      xi *= cfg.xi_shrink;
    }
    if (!accepted) {
      rep.coalesced = true;
      break;
    }
  }

  rep.matrix = SymToeplitz(lags);
  rep.final_min_eig = min_eigenvalue(rep.matrix);
  return rep;
}

}  // namespace tml
