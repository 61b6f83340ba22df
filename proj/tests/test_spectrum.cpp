#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "tml/matrix_core.hpp"
#include "tml/rng.hpp"
#include "tml/spectrum.hpp"

using namespace tml;

namespace {

SymToeplitz sinc17() { return build_sinc_model(17, 0.1, 0.01); }

// Independent order-selection oracle: direct evaluation of the penalized
// sphericity objective in plain product/power form (long double).
int mdl_oracle(const Vector& eigs, int t_count) {
  const int n = static_cast<int>(eigs.size());
  long double best = std::numeric_limits<long double>::infinity();
  int best_k = -1;
  for (int k = 0; k < n; ++k) {
    const int m = n - k;
    long double geo = 1.0L, arith = 0.0L;
    for (int j = k; j < n; ++j) {
      geo *= std::pow((long double)eigs(j), 1.0L / m);
      arith += eigs(j);
    }
    arith /= m;
    const long double sph = -std::log(std::pow(geo / arith, (long double)m * t_count));
    const long double pen = 0.5L * k * (2.0L * n - k) * std::log((long double)t_count);
    if (sph + pen < best) {
      best = sph + pen;
      best_k = k;
    }
  }
  return n - best_k;
}

}  // namespace

TEST_CASE("redundancy moduli: exact on the noiseless model, phase invariant") {
  const SymToeplitz t = sinc17();
  const Matrix dense = to_dense(t);
  const ModuliVector m = redundancy_moduli(dense);
  for (int k = 0; k < 17; ++k)
    CHECK(m.moduli(k) == doctest::Approx(std::abs(t.lag(k))).epsilon(1e-12));

  SplitMix64 rng(11);
  Vector angles = Vector::Zero(17);
  for (int k = 1; k < 17; ++k) angles(k) = rng.next_uniform(-3.0, 3.0);
  const ModuliVector mp = redundancy_moduli(apply_phase(dense, PhaseVector::from_angles(angles)));
  CHECK((m.moduli - mp.moduli).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("order selection is phase invariant through the eigenvalues") {
  const SymToeplitz t = sinc17();
  const SnapshotSet s = generate_snapshots(t, 340, PhaseVector::zero(17), 4);
  const Matrix rhat = sample_covariance(s);
  SplitMix64 rng(12);
  Vector angles = Vector::Zero(17);
  for (int k = 1; k < 17; ++k) angles(k) = rng.next_uniform(-3.0, 3.0);
  const Matrix phased = apply_phase(rhat, PhaseVector::from_angles(angles));

  const OrderSelection a = select_order(eigh(rhat).values, 340, OrderMethod::MDL);
  const OrderSelection b = select_order(eigh(phased).values, 340, OrderMethod::MDL);
  CHECK(a.k_noise == b.k_noise);
}

TEST_CASE("select_order: flat spectrum selects everything as noise") {
  Vector eigs = Vector::Constant(10, 2.5);
  CHECK(select_order(eigs, 100, OrderMethod::MDL).k_noise == 10);
  CHECK(select_order(eigs, 100000, OrderMethod::AIC).k_noise == 10);
}

TEST_CASE("select_order: two-spike spectrum against the direct oracle") {
  Vector eigs(10);
  eigs << 100, 50, 1, 1, 1, 1, 1, 1, 1, 1;
  CHECK(mdl_oracle(eigs, 500) == 8);  // the frozen oracle value
  CHECK(select_order(eigs, 500, OrderMethod::MDL).k_noise == 8);
}

TEST_CASE("select_order on sinc-model samples finds the wide noise cluster") {
  const SymToeplitz t = sinc17();
  for (int rep = 0; rep < 5; ++rep) {
    const SnapshotSet s = generate_snapshots(t, 1000, PhaseVector::zero(17), 900 + rep);
    const Vector eigs = eigh(sample_covariance(s)).values;
    const int k = select_order(eigs, 1000, OrderMethod::MDL).k_noise;
    CHECK(k >= 10);
    CHECK(k <= 11);
    CHECK(select_order(eigs, 1000, OrderMethod::MDL).k_noise == mdl_oracle(eigs, 1000));
  }
}

TEST_CASE("MDL and AIC agree on clean two-cluster spectra") {
  Vector eigs(12);
  eigs << 500, 400, 300, 30, 30, 30, 30, 30, 30, 30, 30, 30;
  for (int t_count : {1000, 5000, 20000}) {
    CHECK(select_order(eigs, t_count, OrderMethod::MDL).k_noise == 9);
    CHECK(select_order(eigs, t_count, OrderMethod::AIC).k_noise == 9);
  }
}

TEST_CASE("select_order rejects bad input") {
  Vector eigs(3);
  eigs << 3, 2, 1;
  CHECK_THROWS_AS(select_order(eigs, 2, OrderMethod::MDL), std::domain_error);
  Vector nonpos(3);
  nonpos << 3, 2, 0;
  CHECK_THROWS_AS(select_order(nonpos, 100, OrderMethod::MDL), std::domain_error);
}

TEST_CASE("rmt_correct: flat spectrum passes through") {
  Vector eigs = Vector::Constant(8, 0.37);
  const CorrectedSpectrum c = rmt_correct(eigs, 100, 8);
  CHECK(c.noise_value == doctest::Approx(0.37).epsilon(1e-12));
  for (int j = 0; j < 8; ++j) CHECK(c.values(j) == doctest::Approx(0.37).epsilon(1e-12));
}

TEST_CASE("rmt_correct: invariants on sampled sinc spectra") {
  const SymToeplitz t = sinc17();
  int closer = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const SnapshotSet s = generate_snapshots(t, 170, PhaseVector::zero(17), 3000 + rep);
    const Vector eigs = eigh(sample_covariance(s)).values;
    const CorrectedSpectrum c = rmt_correct(eigs, 170, 11);

    // Structure: last 11 equal the noise value exactly, descending, positive.
    for (int j = 17 - 11; j < 17; ++j) CHECK(c.values(j) == c.noise_value);
    for (int j = 0; j + 1 < 17; ++j) CHECK(c.values(j) >= c.values(j + 1));
    CHECK(c.values(16) > 0.0);

    // Dynamic range never grows.
    CHECK(c.values(0) / c.values(16) <= eigs(0) / eigs(16) * (1.0 + 1e-9));

    // Energy preserved (exact up to root finding, 5% is generous).
    CHECK(std::abs(c.values.sum() - eigs.sum()) < 0.05 * eigs.sum());

    const double sample_noise_mean = eigs.tail(11).mean();
    if (std::abs(c.noise_value - 0.01) <= std::abs(sample_noise_mean - 0.01)) ++closer;
  }
  // The corrected noise level should usually beat the raw sample mean.
  CHECK(closer >= 60);
}

TEST_CASE("rmt_correct approaches the true spectrum for huge T") {
  const SymToeplitz t = sinc17();
  const Vector true_eigs = eigvals_lags(t);
  const SnapshotSet s = generate_snapshots(t, 17000, PhaseVector::zero(17), 77);
  const Vector eigs = eigh(sample_covariance(s)).values;
  const int k = select_order(eigs, 17000, OrderMethod::MDL).k_noise;
  const CorrectedSpectrum c = rmt_correct(eigs, 17000, k);
  for (int j = 0; j < 17; ++j)
    CHECK(std::abs(c.values(j) - true_eigs(j)) / true_eigs(j) < 0.05);
}

TEST_CASE("rmt_correct argument validation") {
  Vector eigs(4);
  eigs << 4, 3, 2, 1;
  CHECK_THROWS_AS(rmt_correct(eigs, 4, 2), std::domain_error);   // T > N required
  CHECK_THROWS_AS(rmt_correct(eigs, 40, 0), std::domain_error);  // k_noise in [1, N]
  CHECK_THROWS_AS(rmt_correct(eigs, 40, 5), std::domain_error);
}
