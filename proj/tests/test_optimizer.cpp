#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "tml/matrix_core.hpp"
#include "tml/optimizer.hpp"
#include "tml/rng.hpp"

using namespace tml;

namespace {

SymToeplitz sinc17() { return build_sinc_model(17, 0.1, 0.01); }

SymToeplitz random_pd_toeplitz(int n, SplitMix64& rng) {
  while (true) {
    Vector lags(n);
    lags(0) = 1.0;
    for (int k = 1; k < n; ++k) lags(k) = rng.next_uniform(-0.3, 0.3) / k;
    SymToeplitz t(lags);
    if (min_eigenvalue(t) > 1e-2) return t;
  }
}

Matrix random_pd(int n, SplitMix64& rng) {
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.next_complex_gaussian();
  return hermitize(a * a.adjoint() / double(n) + 0.3 * Matrix::Identity(n, n));
}

}  // namespace

TEST_CASE("gradient matches central finite differences on 100 random instances") {
  SplitMix64 rng(314);
  const double h = 1e-6;
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 5 + static_cast<int>(rng.next_u64() % 6);
    const SymToeplitz t = random_pd_toeplitz(n, rng);
    const Matrix rhat = random_pd(n, rng);
    const Vector g = lr_gradient(t, rhat);
    for (int k = 1; k < n; ++k) {
      Vector up = t.lags(), dn = t.lags();
      up(k) += h;
      dn(k) -= h;
      const double fd = (log_likelihood_ratio(rhat, SymToeplitz(up)) -
                         log_likelihood_ratio(rhat, SymToeplitz(dn))) /
                        (2 * h);
      const double denom = std::max(1.0, std::abs(fd));
      CHECK(std::abs(g(k - 1) - fd) / denom < 1e-4);
    }
  }
}

TEST_CASE("hermitian gradient matches finite differences") {
  SplitMix64 rng(217);
  const double h = 1e-6;
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 5;
    const SymToeplitz base = random_pd_toeplitz(n, rng);
    ComplexVector lags(n - 1);
    for (int k = 1; k < n; ++k)
      lags(k - 1) = Complex(base.lag(k), 0.2 * base.lag(k));
    HermToeplitz t(base.t0(), lags);
    {
      Eigen::SelfAdjointEigenSolver<Matrix> s(to_dense(t), Eigen::EigenvaluesOnly);
      if (s.eigenvalues()(0) < 1e-3) continue;
    }
    const Matrix rhat = random_pd(n, rng);
    const Vector g = lr_gradient(t, rhat);
    for (int k = 1; k < n; ++k) {
      for (int part = 0; part < 2; ++part) {
        ComplexVector up = lags, dn = lags;
        const Complex delta = part == 0 ? Complex(h, 0) : Complex(0, h);
        up(k - 1) += delta;
        dn(k - 1) -= delta;
        const double fd = (log_likelihood_ratio(rhat, to_dense(HermToeplitz(t.lag0(), up))) -
                           log_likelihood_ratio(rhat, to_dense(HermToeplitz(t.lag0(), dn)))) /
                          (2 * h);
        const double got = part == 0 ? g(k - 1) : g(n - 1 + k - 1);
        CHECK(std::abs(got - fd) / std::max(1.0, std::abs(fd)) < 1e-4);
      }
    }
  }
}

TEST_CASE("gradient vanishes when T matches a Toeplitz Rhat") {
  SplitMix64 rng(11);
  const SymToeplitz t = random_pd_toeplitz(7, rng);
  const Matrix rhat = to_dense(t);
  const Vector g = lr_gradient(t, rhat);
  CHECK(g.cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("gradient is invariant under joint scaling in normalized coordinates") {
  SplitMix64 rng(23);
  const SymToeplitz t = random_pd_toeplitz(6, rng);
  const Matrix rhat = random_pd(6, rng);
  const Vector g = lr_gradient(t, rhat);
  const Vector g_scaled = lr_gradient(SymToeplitz(3.0 * t.lags()), Matrix(3.0 * rhat));
  // d/dt_k at (cT, cR) equals (1/c) d/dt_k at (T, R); in unit-diagonal
  // coordinates the two gradients coincide.
  CHECK((g - 3.0 * g_scaled).cwiseAbs().maxCoeff() < 1e-9 * g.cwiseAbs().maxCoeff());
}

TEST_CASE("maximize_lr returns LR = 1 when Rhat is itself symmetric Toeplitz") {
  SplitMix64 rng(37);
  const SymToeplitz t = random_pd_toeplitz(6, rng);
  const Matrix rhat = to_dense(t);
  Vector rough = t.lags();
  rough.tail(5) *= 0.5;
  const OptimizeOutcome out = maximize_lr(rhat, SymToeplitz(rough), OptimizerConfig{});
  CHECK(out.status == OptimizeStatus::Converged);
  CHECK(out.lr == doctest::Approx(1.0).epsilon(1e-6));
  CHECK((out.real_matrix().lags() / out.real_matrix().t0() - t.lags() / t.t0())
            .cwiseAbs()
            .maxCoeff() < 1e-4);
}

TEST_CASE("maximize_lr on a T = 85 sinc trial") {
  const SymToeplitz t = sinc17();
  const SnapshotSet snaps = generate_snapshots(t, 85, PhaseVector::zero(17), 2);
  const Matrix rhat = sample_covariance(snaps);
  const double lr_true = likelihood_ratio(rhat, t);

  const OptimizeOutcome out = maximize_lr(rhat, t, OptimizerConfig{});
  CHECK(out.status == OptimizeStatus::Converged);
  CHECK(out.lr >= lr_true);
  CHECK(out.lr < 1.0);
  // The optimized minimum eigenvalue stays well away from the floor and
  // well below the signal scale, as in the published trajectory.
  const double lam = min_eigenvalue(out.real_matrix()) / out.real_matrix().t0();
  CHECK(lam > 1e-4);
  CHECK(lam < 0.2);
  // Monotone trace bookkeeping.
  REQUIRE_FALSE(out.trace.empty());
  CHECK(out.trace.back().lr >= out.trace.front().lr - 1e-12);
  CHECK(out.lr >= likelihood_ratio(rhat, t) * 0.999);
}

TEST_CASE("hermitian optimization dominates the real class per trial") {
  const SymToeplitz t = sinc17();
  for (int rep = 0; rep < 3; ++rep) {
    const SnapshotSet snaps = generate_snapshots(t, 85, PhaseVector::zero(17), 100 + rep);
    const Matrix rhat = sample_covariance(snaps);
    const OptimizeOutcome real = maximize_lr(rhat, t, OptimizerConfig{});
    if (real.status != OptimizeStatus::Converged) continue;
    const OptimizeOutcome herm =
        maximize_lr_hermitian(rhat, real.real_matrix(), OptimizerConfig{});
    CHECK(herm.lr >= real.lr - 1e-9);
  }
}

TEST_CASE("is_global on trivially global and stunted candidates") {
  const SymToeplitz t = sinc17();
  const SnapshotSet snaps = generate_snapshots(t, 85, PhaseVector::zero(17), 55);
  const Matrix rhat = sample_covariance(snaps);
  OptimizerConfig cfg;

  const OptimizeOutcome from_true = maximize_lr(rhat, t, cfg);
  REQUIRE(from_true.status == OptimizeStatus::Converged);
  CHECK(is_global(from_true, rhat, t, cfg));

  OptimizerConfig stunted = cfg;
  stunted.max_iters = 2;
  Vector rough = t.lags();
  rough.tail(16) *= 0.4;  // start well below the true-matrix LR
  const OptimizeOutcome weak = maximize_lr(rhat, SymToeplitz(rough), stunted);
  CHECK(weak.lr < likelihood_ratio(rhat, t));  // condition (1) fails
  CHECK_FALSE(is_global(weak, rhat, t, cfg));
}
