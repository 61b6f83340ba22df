#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "tml/spectrum.hpp"
#include "tml/trim.hpp"
#include "tml/types.hpp"

namespace tml {

/// +-1 assignment to lags 1..N-1. Entries over zero moduli are canonically +1.
struct SignPattern {
  std::vector<int> signs;  // each +1 or -1, length N-1

  bool operator==(const SignPattern& other) const { return signs == other.signs; }
  /// Lexicographic order with +1 < -1, so the all-positive pattern is smallest.
  bool operator<(const SignPattern& other) const;
};

SymToeplitz compose(const ModuliVector& m, const SignPattern& s);

enum class CriterionKind { L2, Minimax, Rho, LogLR };

/// Scoring specification; lower is always better (the likelihood ratio is
/// stored negated in the log domain).
struct CriterionSpec {
  CriterionKind kind = CriterionKind::L2;
  Vector target_eigs;  // required for L2/Minimax

  static CriterionSpec l2(Vector target);
  static CriterionSpec minimax(Vector target);
  /// The rho spread criterion needs the retained snapshots.
  static CriterionSpec rho(const SnapshotSet& snapshots);
  static CriterionSpec log_lr(const Matrix& rhat);

  const Matrix* rhat = nullptr;
  const SnapshotSet* snapshots = nullptr;
  // Snapshot gram matrix (1/T) sum_t x_t x_t^H, precomputed for rho.
  std::shared_ptr<const Matrix> snapshot_gram;
};

double eval_criterion(const SymToeplitz& m, const CriterionSpec& c);

struct SearchResult {
  SignPattern pattern;
  SymToeplitz matrix;  // the scored matrix (trimmed when a trim policy ran)
  double score = 0.0;
  double lr = std::numeric_limits<double>::quiet_NaN();
  bool pd = false;
  int branch_id = -1;             // forced-flip lag of the branch, 0 if none
  std::vector<int> flip_history;  // accepted flip lags, oldest first (1-based)
  bool degraded = false;          // scored after a diagonal-loading fallback
};

/// When present, every probed candidate is first converted to a positive
/// definite matrix before scoring; candidates whose trim falls back to
/// diagonal loading are marked degraded and lose ties.
struct TrimPolicy {
  TrimConfig cfg;
};

/// Greedy "maximum element" pass: starting from the all-positive matrix,
/// repeatedly accept the single sign flip with the best criterion
/// improvement; ties go to the lowest lag index.
SearchResult max_element_search(const ModuliVector& m, const CriterionSpec& c,
                                const TrimPolicy* trim = nullptr);

/// Branch search: branch b opens with a forced flip at lag b, then continues
/// greedily. Returns all branches sorted by (score, pattern); branches run
/// concurrently when threads > 1 with a deterministic merge.
std::vector<SearchResult> dp_branch_search(const ModuliVector& m, const CriterionSpec& c,
                                           const TrimPolicy* trim = nullptr, int threads = 1);

/// Second-stage pass: cycle through accepted flips oldest-first, reverting
/// each and re-placing it wherever the criterion improves most, for at most
/// three full passes. The criterion may differ from the first stage's.
SearchResult redistribute(const SearchResult& r, const ModuliVector& m, const CriterionSpec& c,
                          const TrimPolicy* trim = nullptr);

struct ExhaustiveResult {
  struct Match {
    SignPattern pattern;
    double deviation = 0.0;
    bool pd = false;
  };
  std::vector<Match> matches;  // sorted by (deviation, pattern)
  long pd_count = 0;
  long tested = 0;
};

/// Enumerates every canonical sign pattern (zero-modulus lags pinned to +1)
/// and returns those whose spectrum matches target_eigs within the relative
/// tolerance, plus the count of positive definite patterns. Capacity-guarded
/// to N <= 20.
ExhaustiveResult exhaustive_search(const ModuliVector& m, const Vector& target_eigs, double tol,
                                   int threads = 1);

}  // namespace tml
