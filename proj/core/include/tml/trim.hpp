#pragma once

#include "tml/types.hpp"

namespace tml {

/// Settings for the LP-driven minimum-eigenvalue trim. xi bounds the per-lag
/// innovation of one step; it is halved whenever the recomputed spectrum
/// disagrees with the first-order prediction by more than expansion_tol.
struct TrimConfig {
  double lambda_min_target = 0.0;
  int k_equal = 1;  // K: number of equal minimum eigenvalues to produce
  double xi0 = 0.0;
  double xi_shrink = 0.5;
  double xi_floor = 0.0;
  int max_outer_iters = 200;
  double expansion_tol = 1e-2;

  static TrimConfig defaults(double t0, double target, int k_equal = 1) {
    TrimConfig c;
    c.lambda_min_target = target;
    c.k_equal = k_equal;
    c.xi0 = 0.05 * t0;
    c.xi_shrink = 0.5;
    c.xi_floor = 1e-7 * t0;
    c.max_outer_iters = 200;
    c.expansion_tol = 1e-2;
    return c;
  }
};

struct TrimReport {
  SymToeplitz matrix;
  int iters = 0;
  double final_min_eig = 0.0;
  int expansion_failures = 0;
  bool fallback_used = false;  // diagonal loading took over
  bool coalesced = false;      // K-equal stage stopped on eigenvalue coalescence
};

/// First-order eigenvalue sensitivities: entry (j,k) = u_j' A_{k+1} u_j where
/// A_k carries ones on the +-k-th diagonals. Requires simple eigenvalues
/// (relative gap > 1e-10); throws degeneracy_error otherwise.
RealMatrix sensitivity_matrix(const SymToeplitz& t);
RealMatrix sensitivity_matrix(const EigenSystem& es);

/// Raise the minimum eigenvalue to the target through iterated small lag
/// perturbations, each chosen by a linear program over the first-order
/// eigenvalue model and validated against the recomputed spectrum. Falls back
/// to diagonal loading (flagged) when the step bound collapses, the LP fails,
/// or the iteration budget runs out.
TrimReport trim_single(const SymToeplitz& t_in, const TrimConfig& cfg);

/// Same contract plus a second stage that squeezes the K smallest eigenvalues
/// to a common value at or above the target.
TrimReport trim_multi(const SymToeplitz& t_in, const TrimConfig& cfg);

/// Exact spectral shift: raises lag 0 so the minimum eigenvalue equals the
/// target (identity when already compliant).
SymToeplitz diagonal_load(const SymToeplitz& t_in, double target);

}  // namespace tml
