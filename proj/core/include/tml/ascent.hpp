#pragma once

#include "tml/types.hpp"

namespace tml {

struct AscentConfig {
  double xi = 0.0;          // per-lag step bound; defaults to 0.02 * t_0
  double xi_shrink = 0.5;
  double xi_floor = 0.0;    // defaults to 1e-7 * t_0
  double expansion_tol = 1e-2;
  int max_steps = 50;
  int stall_limit = 5;

  static AscentConfig defaults(double t0) {
    AscentConfig c;
    c.xi = 0.02 * t0;
    c.xi_floor = 1e-7 * t0;
    return c;
  }
};

struct AscentStep {
  SymToeplitz matrix;
  bool stalled = false;  // LP infeasible or step bound collapsed; matrix unchanged
};

/// One LP step that narrows the spread of the eigenvalues of
/// D = Rhat^{-1/2} T Rhat^{-1/2} under the first-order model, validated
/// against the recomputed spectrum (shrinking xi on mismatch). The accepted
/// matrix stays symmetric Toeplitz and positive definite, and the true spread
/// of D never grows.
AscentStep equalize_step(const SymToeplitz& t_n, const Matrix& rhat, double xi,
                         const AscentConfig& cfg);

/// Iterated equalization tracking the likelihood ratio; returns the best-LR
/// iterate seen, so the output LR is never below the input LR.
SymToeplitz equalize(const SymToeplitz& t0, const Matrix& rhat, const AscentConfig& cfg);

}  // namespace tml
