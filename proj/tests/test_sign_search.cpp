#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "tml/matrix_core.hpp"
#include "tml/rng.hpp"
#include "tml/sign_search.hpp"
#include "tml/spectrum.hpp"

using namespace tml;

namespace {

SymToeplitz sinc17() { return build_sinc_model(17, 0.1, 0.01); }

ModuliVector moduli_of(const SymToeplitz& t) {
  return ModuliVector{t.lags().cwiseAbs()};
}

SignPattern pattern_of(const SymToeplitz& t) {
  SignPattern p;
  p.signs.resize(t.size() - 1);
  for (int k = 1; k < t.size(); ++k)
    p.signs[k - 1] = (t.lag(k) < 0.0 && t.lag(k) != 0.0) ? -1 : 1;
  return p;
}

// Brute-force oracle: best achievable criterion value over all canonical
// patterns (test-side enumeration, independent of the search code).
double oracle_best_score(const ModuliVector& m, const CriterionSpec& c) {
  const int n = m.size();
  std::vector<int> free_lags;
  for (int k = 1; k < n; ++k)
    if (m.moduli(k) != 0.0) free_lags.push_back(k);
  double best = std::numeric_limits<double>::infinity();
  for (std::uint64_t code = 0; code < (1ULL << free_lags.size()); ++code) {
    SignPattern p;
    p.signs.assign(n - 1, 1);
    for (size_t i = 0; i < free_lags.size(); ++i)
      if ((code >> i) & 1ULL) p.signs[free_lags[i] - 1] = -1;
    double sc;
    try {
      sc = eval_criterion(compose(m, p), c);
    } catch (const std::domain_error&) {
      continue;
    }
    best = std::min(best, sc);
  }
  return best;
}

SymToeplitz random_pd_toeplitz(int n, SplitMix64& rng) {
  while (true) {
    Vector lags(n);
    lags(0) = 1.0;
    for (int k = 1; k < n; ++k) lags(k) = rng.next_uniform(-0.35, 0.35);
    SymToeplitz t(lags);
    if (min_eigenvalue(t) > 1e-3) return t;
  }
}

}  // namespace

TEST_CASE("criterion basics") {
  const SymToeplitz t = sinc17();
  const Vector eigs = eigvals_lags(t);
  CHECK(eval_criterion(t, CriterionSpec::l2(eigs)) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(eval_criterion(t, CriterionSpec::minimax(eigs)) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("rho criterion: nonnegative, zero only for a flat spread") {
  const SymToeplitz t = sinc17();
  const SnapshotSet s = generate_snapshots(t, 120, PhaseVector::zero(17), 8);
  const CriterionSpec c = CriterionSpec::rho(s);
  const double rho = eval_criterion(t, c);
  CHECK(rho >= 0.0);
  CHECK(rho < 2.0);
  CHECK_THROWS_AS(eval_criterion(SymToeplitz((Vector(2) << 1.0, 2.0).finished()), c),
                  std::domain_error);
}

TEST_CASE("rho is invariant under per-element phases on the snapshots") {
  const SymToeplitz t = sinc17();
  const SnapshotSet plain = generate_snapshots(t, 85, PhaseVector::zero(17), 21);

  SplitMix64 rng(5150);
  Vector angles = Vector::Zero(17);
  for (int k = 1; k < 17; ++k) angles(k) = rng.next_uniform(-3.0, 3.0);
  SnapshotSet phased = plain;
  for (int i = 0; i < 17; ++i)
    phased.snapshots.row(i) *= std::polar(1.0, angles(i));

  const double a = eval_criterion(t, CriterionSpec::rho(plain));
  const double b = eval_criterion(t, CriterionSpec::rho(phased));
  CHECK(std::abs(a - b) < 1e-12);
}

TEST_CASE("max_element_search reconstructs the true matrix from true data") {
  const SymToeplitz t = sinc17();
  const ModuliVector m = moduli_of(t);
  const CriterionSpec c = CriterionSpec::l2(eigvals_lags(t));
  const SearchResult r = max_element_search(m, c);
  CHECK(r.pattern == pattern_of(t));
  CHECK((r.matrix.lags() - t.lags()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(r.score < 1e-18);
  CHECK(r.pd);
}

TEST_CASE("max_element_search accepts no flips on an all-positive target") {
  SplitMix64 rng(31);
  while (true) {
    Vector lags(8);
    lags(0) = 1.0;
    for (int k = 1; k < 8; ++k) lags(k) = rng.next_uniform(0.01, 0.3) / k;
    SymToeplitz t(lags);
    if (min_eigenvalue(t) < 1e-3) continue;
    const SearchResult r = max_element_search(moduli_of(t), CriterionSpec::l2(eigvals_lags(t)));
    CHECK(r.flip_history.empty());
    CHECK(r.score < 1e-18);
    break;
  }
}

TEST_CASE("greedy beats or matches the oracle most of the time at N = 8") {
  SplitMix64 rng(808);
  int optimal = 0, branch_never_worse = 0;
  const int reps = 100;
  for (int rep = 0; rep < reps; ++rep) {
    const SymToeplitz t = random_pd_toeplitz(8, rng);
    const ModuliVector m = moduli_of(t);
    const CriterionSpec c = CriterionSpec::l2(eigvals_lags(t));

    const SearchResult greedy = max_element_search(m, c);
    const double best = oracle_best_score(m, c);
    if (greedy.score <= best + 1e-10) ++optimal;

    const std::vector<SearchResult> branches = dp_branch_search(m, c);
    REQUIRE_FALSE(branches.empty());
    if (branches.front().score <= greedy.score + 1e-12) ++branch_never_worse;

    // The oracle lower-bounds every heuristic.
    CHECK(greedy.score >= best - 1e-10);
    CHECK(branches.front().score >= best - 1e-10);
  }
  CHECK(optimal >= 90);
  CHECK(branch_never_worse == reps);
}

TEST_CASE("branch search on an all-positive target differs only by the forced flip") {
  SplitMix64 rng(99);
  while (true) {
    Vector lags(7);
    lags(0) = 1.0;
    for (int k = 1; k < 7; ++k) lags(k) = rng.next_uniform(0.02, 0.25) / k;
    SymToeplitz t(lags);
    if (min_eigenvalue(t) < 1e-3) continue;
    const std::vector<SearchResult> branches =
        dp_branch_search(moduli_of(t), CriterionSpec::l2(eigvals_lags(t)));
    CHECK(branches.size() == 6);
    for (const SearchResult& b : branches) {
      int flips = 0;
      for (int s : b.pattern.signs) flips += (s < 0);
      CHECK(flips == 1);
      CHECK(b.pattern.signs[b.branch_id - 1] == -1);
    }
    break;
  }
}

TEST_CASE("parallel and serial branch searches agree exactly") {
  const SymToeplitz t = sinc17();
  const SnapshotSet s = generate_snapshots(t, 85, PhaseVector::zero(17), 3);
  const Matrix rhat = sample_covariance(s);
  const ModuliVector m = redundancy_moduli(rhat);
  const Vector eigs = eigh(rhat).values;
  const CriterionSpec c = CriterionSpec::l2(eigs);
  const std::vector<SearchResult> serial = dp_branch_search(m, c, nullptr, 1);
  const std::vector<SearchResult> parallel = dp_branch_search(m, c, nullptr, 4);
  REQUIRE(serial.size() == parallel.size());
  for (size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].pattern == parallel[i].pattern);
    CHECK(serial[i].score == parallel[i].score);
  }
}

TEST_CASE("redistribute never worsens and is idempotent at a local optimum") {
  SplitMix64 rng(1234);
  for (int rep = 0; rep < 20; ++rep) {
    const SymToeplitz t = random_pd_toeplitz(8, rng);
    const ModuliVector m = moduli_of(t);
    const CriterionSpec c = CriterionSpec::l2(eigvals_lags(t));
    const std::vector<SearchResult> branches = dp_branch_search(m, c);
    const SearchResult& b = branches.front();
    const SearchResult r = redistribute(b, m, c);
    CHECK(r.score <= b.score + 1e-12);
    const SearchResult r2 = redistribute(r, m, c);
    CHECK(r2.score == r.score);
    CHECK(r2.pattern == r.pattern);
  }
}

TEST_CASE("exhaustive search: Chu pair from true data at N = 11") {
  const SymToeplitz t = build_sinc_model(11, 0.1, 0.01);
  const ModuliVector m = moduli_of(t);
  const ExhaustiveResult ex = exhaustive_search(m, eigvals_lags(t), 1e-8, 2);

  REQUIRE(ex.matches.size() == 2);
  // One is the true pattern, the other its odd-lag conjugation (zero-modulus
  // lags canonical +1).
  SignPattern truth = pattern_of(t);
  SignPattern flipped = truth;
  for (int k = 1; k < 11; ++k)
    if (k % 2 == 1 && m.moduli(k) != 0.0) flipped.signs[k - 1] = -flipped.signs[k - 1];
  CHECK((ex.matches[0].pattern == truth || ex.matches[1].pattern == truth));
  CHECK((ex.matches[0].pattern == flipped || ex.matches[1].pattern == flipped));
  CHECK(ex.matches[0].pd);
}

TEST_CASE("Chu pair symmetry: odd-lag flip preserves the spectrum exactly") {
  SplitMix64 rng(610);
  for (int rep = 0; rep < 10; ++rep) {
    const SymToeplitz t = random_pd_toeplitz(9, rng);
    Vector flipped = t.lags();
    for (int k = 1; k < 9; k += 2) flipped(k) = -flipped(k);
    const Vector e0 = eigvals_lags(t);
    const Vector e1 = eigvals_lags(SymToeplitz(flipped));
    CHECK((e0 - e1).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("exhaustive search canonicalizes zero-modulus lags") {
  Vector m(6);
  m << 1.0, 0.0, 0.0, 0.0, 0.0, 0.0;  // identity moduli
  Vector target = Vector::Constant(6, 1.0);
  const ExhaustiveResult ex = exhaustive_search(ModuliVector{m}, target, 1e-10);
  CHECK(ex.tested == 1);  // all sign patterns coincide; one canonical form
  REQUIRE(ex.matches.size() == 1);
  CHECK(ex.matches[0].pattern == SignPattern{std::vector<int>(5, 1)});
  CHECK(ex.pd_count == 1);
}

TEST_CASE("exhaustive search guards capacity") {
  Vector m = Vector::Constant(21, 0.1);
  m(0) = 1.0;
  CHECK_THROWS_AS(exhaustive_search(ModuliVector{m}, Vector::Constant(21, 1.0), 1e-6),
                  std::length_error);
}

TEST_CASE("heuristic results appear in the exhaustive ranking at their score") {
  SplitMix64 rng(55);
  for (int rep = 0; rep < 10; ++rep) {
    const SymToeplitz t = random_pd_toeplitz(8, rng);
    const ModuliVector m = moduli_of(t);
    const CriterionSpec c = CriterionSpec::l2(eigvals_lags(t));
    const SearchResult r = max_element_search(m, c);
    const double oracle = oracle_best_score(m, c);
    // Greedy surfaces a score the enumeration can reproduce (recompute the
    // criterion on the greedy pattern and compare).
    const double rescored = eval_criterion(compose(m, r.pattern), c);
    CHECK(std::abs(rescored - r.score) < 1e-10);
    CHECK(r.score >= oracle - 1e-10);
  }
}
