#pragma once

#include <variant>
#include <vector>

#include "tml/types.hpp"

namespace tml {

struct OptimizerConfig {
  /// Positive-definiteness floor for the smallest eigenvalue. Zero selects
  /// the default 1e-6 * t_0 of the (normalized) iterate.
  double min_eig_floor = 0.0;
  double barrier_weight0 = 1e-2;
  double barrier_decay = 0.2;
  double barrier_min = 1e-12;
  double grad_tol = 1e-8;
  double lr_tol = 1e-9;   // relative LR change, three consecutive iterations
  int max_iters = 2000;
  bool normalize_t0 = true;
};

enum class OptimizeStatus { Converged, NonPositiveDefiniteExit, IterLimit };

struct TracePoint {
  int iter = 0;
  double lr = 0.0;
  double min_eig = 0.0;
};

struct OptimizeOutcome {
  std::variant<SymToeplitz, HermToeplitz> matrix;
  double lr = 0.0;
  int iters = 0;
  OptimizeStatus status = OptimizeStatus::IterLimit;
  std::vector<TracePoint> trace;

  bool is_hermitian() const { return std::holds_alternative<HermToeplitz>(matrix); }
  const SymToeplitz& real_matrix() const { return std::get<SymToeplitz>(matrix); }
  const HermToeplitz& hermitian_matrix() const { return std::get<HermToeplitz>(matrix); }
};

/// Gradient of J(t) = -log det T - N log(tr(Rhat T^{-1})/N) with respect to
/// the off-diagonal lags (t_0 held fixed). Size N-1 for the real class; the
/// Hermitian class interleaves nothing: first N-1 entries are d/dRe(t_k),
/// the next N-1 are d/dIm(t_k).
Vector lr_gradient(const SymToeplitz& t, const Matrix& rhat);
Vector lr_gradient(const HermToeplitz& t, const Matrix& rhat);

/// Maximize the sphericity likelihood ratio over symmetric Toeplitz matrices
/// by quasi-Newton ascent with a vanishing log-det barrier on the
/// minimum-eigenvalue floor. The reported LR never falls below the starting
/// LR; a run pinned against the floor exits as NonPositiveDefiniteExit.
OptimizeOutcome maximize_lr(const Matrix& rhat, const SymToeplitz& t0, const OptimizerConfig& cfg);

/// Same ascent over the Hermitian Toeplitz class.
OptimizeOutcome maximize_lr(const Matrix& rhat, const HermToeplitz& t0, const OptimizerConfig& cfg);

/// Hermitian-class ascent initialized from a real solution (imaginary lag
/// parts start at zero).
OptimizeOutcome maximize_lr_hermitian(const Matrix& rhat, const SymToeplitz& t0,
                                      const OptimizerConfig& cfg);

/// Global-extremum identification for Monte-Carlo use: (1) the candidate LR
/// is at least the LR of the true matrix and (2) re-optimizing from the true
/// matrix lands on the same solution (normalized lags within 1e-4, LR within
/// 1e-6).
bool is_global(const OptimizeOutcome& candidate, const Matrix& rhat, const SymToeplitz& t_true,
               const OptimizerConfig& cfg);

}  // namespace tml
