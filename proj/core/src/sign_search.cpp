#include "tml/sign_search.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include <Eigen/Cholesky>

#include "tml/matrix_core.hpp"

namespace tml {

bool SignPattern::operator<(const SignPattern& other) const {
  // +1 before -1, elementwise.
  const size_t n = std::min(signs.size(), other.signs.size());
  for (size_t i = 0; i < n; ++i) {
    if (signs[i] != other.signs[i]) return signs[i] > other.signs[i];
  }
  return signs.size() < other.signs.size();
}

SymToeplitz compose(const ModuliVector& m, const SignPattern& s) {
  const int n = m.size();
  if (static_cast<int>(s.signs.size()) != n - 1)
    throw std::domain_error("compose: pattern length must be N-1");
  Vector lags(n);
  lags(0) = m.moduli(0);
  for (int k = 1; k < n; ++k) lags(k) = s.signs[k - 1] * m.moduli(k);
  return SymToeplitz(std::move(lags));
}

CriterionSpec CriterionSpec::l2(Vector target) {
  CriterionSpec c;
  c.kind = CriterionKind::L2;
  c.target_eigs = std::move(target);
  return c;
}

CriterionSpec CriterionSpec::minimax(Vector target) {
  CriterionSpec c;
  c.kind = CriterionKind::Minimax;
  c.target_eigs = std::move(target);
  return c;
}

CriterionSpec CriterionSpec::rho(const SnapshotSet& snapshots) {
  CriterionSpec c;
  c.kind = CriterionKind::Rho;
  c.snapshots = &snapshots;
  c.snapshot_gram = std::make_shared<Matrix>(sample_covariance(snapshots));
  return c;
}

CriterionSpec CriterionSpec::log_lr(const Matrix& rhat) {
  CriterionSpec c;
  c.kind = CriterionKind::LogLR;
  c.rhat = &rhat;
  return c;
}

namespace {

double eval_with_eigs(const SymToeplitz& m, const Vector& eigs, const CriterionSpec& c) {
  const int n = m.size();
  switch (c.kind) {
    case CriterionKind::L2: {
      if (c.target_eigs.size() != n) throw std::domain_error("eval_criterion: target size");
      return (eigs - c.target_eigs).squaredNorm();
    }
    case CriterionKind::Minimax: {
      if (c.target_eigs.size() != n) throw std::domain_error("eval_criterion: target size");
      double worst = 0.0;
      for (int j = 0; j < n; ++j) {
        const double denom = std::abs(c.target_eigs(j));
        if (denom <= 0.0) throw std::domain_error("eval_criterion: zero target eigenvalue");
        worst = std::max(worst, std::abs(eigs(j) - c.target_eigs(j)) / denom);
      }
      return worst;
    }
    case CriterionKind::Rho: {
      if (!c.snapshots || !c.snapshot_gram)
        throw std::domain_error("eval_criterion: rho needs snapshots");
      if (eigs(n - 1) <= 0.0)
        throw std::domain_error("eval_criterion: rho needs a positive definite matrix");
      Eigen::LLT<RealMatrix> llt(to_dense_real(m));
      if (llt.info() != Eigen::Success)
        throw std::domain_error("eval_criterion: rho needs a positive definite matrix");
      const RealMatrix minv = llt.solve(RealMatrix::Identity(n, n));
      // (1/T) sum_t diag(x_t^*) M^{-1} diag(x_t) == M^{-1} .* conj(gram),
      // with gram = (1/T) sum_t x_t x_t^H formed from the retained snapshots.
      const Matrix d = minv.cast<Complex>().cwiseProduct(c.snapshot_gram->conjugate());
      const Vector ev = eigh(d).values;
      const double total = ev.sum();
      if (!(total > 0.0)) throw std::domain_error("eval_criterion: degenerate rho trace");
      return (ev(0) - ev(n - 1)) / total;
    }
    case CriterionKind::LogLR: {
      if (!c.rhat) throw std::domain_error("eval_criterion: LogLR needs Rhat");
      if (eigs(n - 1) <= 0.0)
        throw std::domain_error("eval_criterion: LogLR needs a positive definite matrix");
      return -log_likelihood_ratio(*c.rhat, m);
    }
  }
  throw std::domain_error("eval_criterion: unknown kind");
}

struct Scored {
  SymToeplitz matrix;
  Vector eigs;
  double score = std::numeric_limits<double>::infinity();
  bool pd = false;
  bool degraded = false;
};

Scored score_candidate(const ModuliVector& m, const SignPattern& s, const CriterionSpec& c,
                       const TrimPolicy* trim) {
  SymToeplitz mat = compose(m, s);
  bool degraded = false;
  if (trim) {
    TrimReport rep = trim_single(mat, trim->cfg);
    mat = rep.matrix;
    degraded = rep.fallback_used;
  }
  Vector eigs = eigvals_lags(mat);
  double score;
  try {
    score = eval_with_eigs(mat, eigs, c);
  } catch (const std::domain_error&) {
    score = std::numeric_limits<double>::infinity();
  }
  const bool pd = eigs(eigs.size() - 1) > 0.0;
  return Scored{std::move(mat), std::move(eigs), score, pd, degraded};
}

// Strictly better: smaller score; equal scores prefer non-degraded.
bool improves(const Scored& cand, const Scored& cur) {
  if (cand.score < cur.score) return true;
  return cand.score == cur.score && !cand.degraded && cur.degraded;
}

SearchResult make_result(const ModuliVector& m, SignPattern pattern, Scored scored,
                         int branch_id, std::vector<int> history, const CriterionSpec& c) {
  SearchResult r{std::move(pattern), std::move(scored.matrix), scored.score,
                 std::numeric_limits<double>::quiet_NaN(), scored.pd,
                 branch_id, std::move(history), scored.degraded};
  const Matrix* rhat = c.rhat;
  if (!rhat && c.snapshot_gram) rhat = c.snapshot_gram.get();
  if (rhat && r.pd) r.lr = likelihood_ratio(*rhat, r.matrix);
  return r;
}

// Greedy descent from the given start pattern. Lags with zero modulus are
// never flipped; ties go to the lowest lag.
void greedy_descend(const ModuliVector& m, const CriterionSpec& c, const TrimPolicy* trim,
                    SignPattern& pattern, Scored& cur, std::vector<int>& history) {
  const int n = m.size();
  while (true) {
    int best_lag = -1;
    std::optional<Scored> best;
    for (int k = 1; k < n; ++k) {
      if (pattern.signs[k - 1] < 0 || m.moduli(k) == 0.0) continue;
      SignPattern cand = pattern;
      cand.signs[k - 1] = -1;
      Scored sc = score_candidate(m, cand, c, trim);
      if (improves(sc, cur) && (!best || improves(sc, *best))) {
        best = std::move(sc);
        best_lag = k;
      }
    }
    if (best_lag < 0) break;
    pattern.signs[best_lag - 1] = -1;
    cur = std::move(*best);
    history.push_back(best_lag);
  }
}

SignPattern all_positive(int n) { return SignPattern{std::vector<int>(n - 1, 1)}; }

}  // namespace

double eval_criterion(const SymToeplitz& m, const CriterionSpec& c) {
  return eval_with_eigs(m, eigvals_lags(m), c);
}

SearchResult max_element_search(const ModuliVector& m, const CriterionSpec& c,
                                const TrimPolicy* trim) {
  SignPattern pattern = all_positive(m.size());
  Scored cur = score_candidate(m, pattern, c, trim);
  std::vector<int> history;
  greedy_descend(m, c, trim, pattern, cur, history);
  return make_result(m, std::move(pattern), std::move(cur), 0, std::move(history), c);
}

std::vector<SearchResult> dp_branch_search(const ModuliVector& m, const CriterionSpec& c,
                                           const TrimPolicy* trim, int threads) {
  const int n = m.size();
  std::vector<int> branch_lags;
  for (int b = 1; b < n; ++b)
    if (m.moduli(b) != 0.0) branch_lags.push_back(b);

  std::vector<SearchResult> results(branch_lags.size(),
                                    SearchResult{SignPattern{}, SymToeplitz(Vector::Ones(2)), 0.0});
  auto run_branch = [&](size_t i) {
    const int b = branch_lags[i];
    SignPattern pattern = all_positive(n);
    pattern.signs[b - 1] = -1;
    Scored cur = score_candidate(m, pattern, c, trim);
    std::vector<int> history{b};
    greedy_descend(m, c, trim, pattern, cur, history);
    results[i] = make_result(m, std::move(pattern), std::move(cur), b, std::move(history), c);
  };

  const int nthreads = std::max(1, std::min<int>(threads, static_cast<int>(branch_lags.size())));
  if (nthreads <= 1) {
    for (size_t i = 0; i < branch_lags.size(); ++i) run_branch(i);
  } else {
    std::vector<std::thread> pool;
    std::atomic<size_t> next{0};
    for (int t = 0; t < nthreads; ++t)
      pool.emplace_back([&] {
        for (size_t i = next.fetch_add(1); i < branch_lags.size(); i = next.fetch_add(1))
          run_branch(i);
      });
    for (auto& th : pool) th.join();
  }

  std::stable_sort(results.begin(), results.end(), [](const SearchResult& a, const SearchResult& b) {
    if (a.score != b.score) return a.score < b.score;
    if (a.degraded != b.degraded) return !a.degraded;
    return a.pattern < b.pattern;
  });
  return results;
}

SearchResult redistribute(const SearchResult& r, const ModuliVector& m, const CriterionSpec& c,
                          const TrimPolicy* trim) {
  const int n = m.size();
  SignPattern pattern = r.pattern;
  std::vector<int> history = r.flip_history;
  Scored cur = score_candidate(m, pattern, c, trim);  // stage-two criterion

  constexpr int kMaxPasses = 3;
  for (int pass = 0; pass < kMaxPasses; ++pass) {
    bool improved = false;
    const std::vector<int> order = history;  // snapshot; moved flips re-age
    for (int f : order) {
      auto it = std::find(history.begin(), history.end(), f);
      if (it == history.end()) continue;

      // Revert f, then look for the best position for this one sign change.
      SignPattern base = pattern;
      base.signs[f - 1] = 1;
      int best_lag = -1;
      std::optional<Scored> best;
      for (int g = 1; g < n; ++g) {
        if (m.moduli(g) == 0.0 || base.signs[g - 1] < 0) continue;
        SignPattern cand = base;
        cand.signs[g - 1] = -1;
        Scored sc = score_candidate(m, cand, c, trim);
        if (improves(sc, cur) && (!best || improves(sc, *best))) {
          best = std::move(sc);
          best_lag = g;
        }
      }
      if (best_lag >= 0) {
        pattern = base;
        pattern.signs[best_lag - 1] = -1;
        cur = std::move(*best);
        history.erase(it);
        history.push_back(best_lag);
        improved = true;
      }
    }
    if (!improved) break;
  }

  SearchResult out = make_result(m, std::move(pattern), std::move(cur), r.branch_id,
                                 std::move(history), c);
  return out;
}

ExhaustiveResult exhaustive_search(const ModuliVector& m, const Vector& target_eigs, double tol,
                                   int threads) {
  const int n = m.size();
  if (n > 20) throw std::length_error("exhaustive_search: N <= 20 required");
  if (target_eigs.size() != n) throw std::domain_error("exhaustive_search: target size");

  std::vector<int> free_lags;
  for (int k = 1; k < n; ++k)
    if (m.moduli(k) != 0.0) free_lags.push_back(k);
  const int nfree = static_cast<int>(free_lags.size());
  const std::uint64_t total = 1ULL << nfree;

  const int nthreads = std::max(1, threads);
  std::vector<std::vector<ExhaustiveResult::Match>> local_matches(nthreads);
  std::vector<long> local_pd(nthreads, 0);

  auto run_range = [&](int tid, std::uint64_t lo, std::uint64_t hi) {
    RealMatrix dense(n, n);
    SignPattern pattern = all_positive(n);
    for (std::uint64_t code = lo; code < hi; ++code) {
      for (int i = 0; i < nfree; ++i)
        pattern.signs[free_lags[i] - 1] = (code >> i) & 1ULL ? -1 : 1;
      Vector lags(n);
      lags(0) = m.moduli(0);
      for (int k = 1; k < n; ++k) lags(k) = pattern.signs[k - 1] * m.moduli(k);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) dense(i, j) = lags(std::abs(i - j));
      const Vector eigs = eigvals_real(dense);
      if (eigs(n - 1) > 0.0) ++local_pd[tid];
      double dev = 0.0;
      for (int j = 0; j < n; ++j) {
        const double denom = std::max(std::abs(target_eigs(j)), 1e-300);
        dev = std::max(dev, std::abs(eigs(j) - target_eigs(j)) / denom);
      }
      if (dev <= tol)
        local_matches[tid].push_back({pattern, dev, eigs(n - 1) > 0.0});
    }
  };

  if (nthreads <= 1) {
    run_range(0, 0, total);
  } else {
    std::vector<std::thread> pool;
    const std::uint64_t chunk = (total + nthreads - 1) / nthreads;
    for (int t = 0; t < nthreads; ++t) {
      const std::uint64_t lo = std::min<std::uint64_t>(t * chunk, total);
      const std::uint64_t hi = std::min<std::uint64_t>(lo + chunk, total);
      pool.emplace_back(run_range, t, lo, hi);
    }
    for (auto& th : pool) th.join();
  }

  ExhaustiveResult out;
  out.tested = static_cast<long>(total);
  for (int t = 0; t < nthreads; ++t) {
    out.pd_count += local_pd[t];
    out.matches.insert(out.matches.end(), local_matches[t].begin(), local_matches[t].end());
  }
  std::stable_sort(out.matches.begin(), out.matches.end(),
                   [](const ExhaustiveResult::Match& a, const ExhaustiveResult::Match& b) {
                     if (a.deviation != b.deviation) return a.deviation < b.deviation;
                     return a.pattern < b.pattern;
                   });
  return out;
}

}  // namespace tml
