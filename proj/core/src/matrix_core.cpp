#include "tml/matrix_core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace tml {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_angle(double a) {
  // into (-pi, pi]
  a = std::fmod(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  if (a > kPi) a -= 2.0 * kPi;
  return a;
}

}  // namespace

PhaseVector PhaseVector::zero(int n) { return PhaseVector(Vector::Zero(n)); }

PhaseVector PhaseVector::steering(int n, double theta_o, double d_over_lambda) {
  Vector a(n);
  const double step = 2.0 * kPi * d_over_lambda * std::sin(theta_o);
  for (int k = 0; k < n; ++k) a(k) = wrap_angle(k * step);
  return PhaseVector(a);
}

PhaseVector PhaseVector::alternating(int n) {
  Vector a(n);
  for (int k = 0; k < n; ++k) a(k) = wrap_angle(k * kPi);
  return PhaseVector(a);
}

PhaseVector PhaseVector::from_angles(Vector angles) {
  if (angles.size() < 1) throw std::domain_error("PhaseVector: empty");
  for (int k = 0; k < angles.size(); ++k) angles(k) = wrap_angle(angles(k));
  if (angles(0) != 0.0) throw std::domain_error("PhaseVector: angles[0] must be 0");
  return PhaseVector(std::move(angles));
}

PhaseVector PhaseVector::composed_with(const PhaseVector& other) const {
  if (other.size() != size()) throw std::domain_error("PhaseVector: size mismatch");
  Vector a = angles_ + other.angles_;
  for (int k = 0; k < a.size(); ++k) a(k) = wrap_angle(a(k));
  return PhaseVector(a);
}

PhaseVector random_calibration_errors(int n, double phi_max, SplitMix64& rng) {
  Vector a = Vector::Zero(n);
  for (int k = 1; k < n; ++k) a(k) = rng.next_uniform(-phi_max, phi_max);
  return PhaseVector::from_angles(std::move(a));
}

SymToeplitz build_sinc_model(int n, double w2, double sigma2) {
  if (n < 2) throw std::domain_error("build_sinc_model: N >= 2 required");
  if (!(w2 > 0.0 && w2 < 0.5)) throw std::domain_error("build_sinc_model: W2 in (0, 0.5)");
  if (!(sigma2 > 0.0)) throw std::domain_error("build_sinc_model: sigma2 > 0");
  Vector lags(n);
  lags(0) = 2.0 * w2 + sigma2;
  for (int k = 1; k < n; ++k) lags(k) = std::sin(2.0 * kPi * w2 * k) / (kPi * k);
  return SymToeplitz(std::move(lags));
}

RealMatrix to_dense_real(const SymToeplitz& t) {
  const int n = t.size();
  RealMatrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = t.lag(std::abs(i - j));
  return m;
}

Matrix to_dense(const SymToeplitz& t) {
  return to_dense_real(t).cast<Complex>();
}

Matrix to_dense(const HermToeplitz& t) {
  const int n = t.size();
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) {
    m(i, i) = t.lag0();
    for (int j = i + 1; j < n; ++j) {
      m(i, j) = t.lags()(j - i - 1);
      m(j, i) = std::conj(m(i, j));
    }
  }
  return m;
}

Matrix hermitize(const Matrix& m) {
  return 0.5 * (m + m.adjoint().eval());
}

EigenSystem eigh(const Matrix& m) {
  if (m.rows() != m.cols()) throw std::domain_error("eigh: square matrix required");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(hermitize(m));
  if (solver.info() != Eigen::Success) throw numerical_error("eigh: no convergence");
  const int n = static_cast<int>(m.rows());
  EigenSystem es;
  es.values = solver.eigenvalues().reverse();
  es.vectors = Matrix(n, n);
  for (int j = 0; j < n; ++j) es.vectors.col(j) = solver.eigenvectors().col(n - 1 - j);
  return es;
}

EigenSystem eigh_real(const RealMatrix& m) {
  Eigen::SelfAdjointEigenSolver<RealMatrix> solver(m);
  if (solver.info() != Eigen::Success) throw numerical_error("eigh_real: no convergence");
  const int n = static_cast<int>(m.rows());
  EigenSystem es;
  es.values = solver.eigenvalues().reverse();
  es.vectors = Matrix(n, n);
  for (int j = 0; j < n; ++j)
    es.vectors.col(j) = solver.eigenvectors().col(n - 1 - j).cast<Complex>();
  return es;
}

Vector eigvals_real(const RealMatrix& m) {
  Eigen::SelfAdjointEigenSolver<RealMatrix> solver(m, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw numerical_error("eigvals_real: no convergence");
  return solver.eigenvalues().reverse();
}

Vector eigvals_lags(const SymToeplitz& t) { return eigvals_real(to_dense_real(t)); }

double min_eigenvalue(const SymToeplitz& t) {
  const Vector v = eigvals_lags(t);
  return v(v.size() - 1);
}

Matrix apply_phase(const Matrix& m, const PhaseVector& p) {
  if (m.rows() != p.size()) throw std::domain_error("apply_phase: size mismatch");
  const int n = static_cast<int>(m.rows());
  ComplexVector d(n);
  for (int k = 0; k < n; ++k) d(k) = std::polar(1.0, p.angles()(k));
  Matrix out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out(i, j) = d(i) * m(i, j) * std::conj(d(j));
  return out;
}

SnapshotSet generate_snapshots(const SymToeplitz& t_true, int t_count,
                               const PhaseVector& p, std::uint64_t seed) {
  if (t_count < 1) throw std::domain_error("generate_snapshots: T >= 1 required");
  const int n = t_true.size();
  if (p.size() != n) throw std::domain_error("generate_snapshots: phase size mismatch");

  const EigenSystem es = eigh_real(to_dense_real(t_true));
  if (es.values(n - 1) <= 0.0)
    throw std::domain_error("generate_snapshots: model matrix is not positive definite");

  // T^{1/2} = U diag(sqrt(max(lambda, 0))) U^T, then rows get the phase factors.
  RealMatrix sqrt_t(n, n);
  {
    RealMatrix u(n, n);
    for (int j = 0; j < n; ++j) u.col(j) = es.vectors.col(j).real();
    Vector s = es.values.cwiseMax(0.0).cwiseSqrt();
    sqrt_t = u * s.asDiagonal() * u.transpose();
  }
  ComplexVector d(n);
  for (int k = 0; k < n; ++k) d(k) = std::polar(1.0, p.angles()(k));

  SplitMix64 rng(seed);
  SnapshotSet out;
  out.seed = seed;
  out.snapshots = Matrix(n, t_count);
  ComplexVector xi(n);
  for (int t = 0; t < t_count; ++t) {
    for (int i = 0; i < n; ++i) xi(i) = rng.next_complex_gaussian();
    out.snapshots.col(t) = d.asDiagonal() * (sqrt_t * xi);
  }
  return out;
}

Matrix sample_covariance(const SnapshotSet& s) {
  if (s.count() < 1) throw std::domain_error("sample_covariance: T >= 1 required");
  Matrix r = (s.snapshots * s.snapshots.adjoint()) / static_cast<double>(s.count());
  return hermitize(r);
}

namespace {

// log det of a Hermitian p.d. matrix via LLT; throws if not p.d.
double logdet_pd(const Matrix& m, const char* what) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success)
    throw std::domain_error(std::string(what) + ": matrix not positive definite");
  double s = 0.0;
  for (int i = 0; i < m.rows(); ++i) s += std::log(llt.matrixL()(i, i).real());
  return 2.0 * s;
}

double logdet_pd_real(const RealMatrix& m, const char* what) {
  Eigen::LLT<RealMatrix> llt(m);
  if (llt.info() != Eigen::Success)
    throw std::domain_error(std::string(what) + ": matrix not positive definite");
  double s = 0.0;
  for (int i = 0; i < m.rows(); ++i) s += std::log(llt.matrixL()(i, i));
  return 2.0 * s;
}

}  // namespace

double log_likelihood_ratio(const Matrix& rhat, const Matrix& t0) {
  if (rhat.rows() != t0.rows()) throw std::domain_error("likelihood_ratio: size mismatch");
  const int n = static_cast<int>(rhat.rows());
  Eigen::LLT<Matrix> llt(hermitize(t0));
  if (llt.info() != Eigen::Success)
    throw std::domain_error("likelihood_ratio: T not positive definite");
  double logdet_t = 0.0;
  for (int i = 0; i < n; ++i) logdet_t += 2.0 * std::log(llt.matrixL()(i, i).real());

  const double logdet_r = logdet_pd(rhat, "likelihood_ratio");
  const double tr = llt.solve(rhat).trace().real();
  if (!(tr > 0.0)) throw std::domain_error("likelihood_ratio: non-positive trace");
  return logdet_r - logdet_t - n * std::log(tr / n);
}

double log_likelihood_ratio(const Matrix& rhat, const SymToeplitz& t0) {
  const int n = t0.size();
  if (rhat.rows() != n) throw std::domain_error("likelihood_ratio: size mismatch");
  Eigen::LLT<RealMatrix> llt(to_dense_real(t0));
  if (llt.info() != Eigen::Success)
    throw std::domain_error("likelihood_ratio: T not positive definite");
  double logdet_t = 0.0;
  for (int i = 0; i < n; ++i) logdet_t += 2.0 * std::log(llt.matrixL()(i, i));

  const double logdet_r = logdet_pd(rhat, "likelihood_ratio");
  // tr(Rhat T^{-1}) = tr(T^{-1} Re(Rhat)); T^{-1} is real symmetric.
  const RealMatrix tinv_re_r = llt.solve(rhat.real());
  const double tr = tinv_re_r.trace();
  if (!(tr > 0.0)) throw std::domain_error("likelihood_ratio: non-positive trace");
  return logdet_r - logdet_t - n * std::log(tr / n);
}

double likelihood_ratio(const Matrix& rhat, const Matrix& t0) {
  return std::exp(log_likelihood_ratio(rhat, t0));
}

double likelihood_ratio(const Matrix& rhat, const SymToeplitz& t0) {
  return std::exp(log_likelihood_ratio(rhat, t0));
}

double likelihood_ratio(const Matrix& rhat, const HermToeplitz& t0) {
  return likelihood_ratio(rhat, to_dense(t0));
}

double likelihood_ratio_eig(const Matrix& rhat, const Matrix& t0) {
  const int n = static_cast<int>(rhat.rows());
  const EigenSystem er = eigh(rhat);
  if (er.values(n - 1) <= 0.0)
    throw std::domain_error("likelihood_ratio_eig: Rhat not positive definite");
  Matrix sqrt_r = er.vectors * er.values.cwiseSqrt().asDiagonal() * er.vectors.adjoint();
  Eigen::LLT<Matrix> llt(hermitize(t0));
  if (llt.info() != Eigen::Success)
    throw std::domain_error("likelihood_ratio_eig: T not positive definite");
  const Matrix w = hermitize(sqrt_r * llt.solve(sqrt_r));
  const Vector e = eigh(w).values;
  if (e(n - 1) <= 0.0) throw std::domain_error("likelihood_ratio_eig: whitened spectrum not positive");
  double log_geo = 0.0;
  for (int i = 0; i < n; ++i) log_geo += std::log(e(i));
  log_geo /= n;
  const double arith = e.mean();
  return std::exp(n * (log_geo - std::log(arith)));
}

double sigma2_ml(const Matrix& rhat, const Matrix& t0_normalized) {
  const int n = static_cast<int>(rhat.rows());
  for (int i = 0; i < n; ++i)
    if (std::abs(t0_normalized(i, i).real() - 1.0) > 1e-6 ||
        std::abs(t0_normalized(i, i).imag()) > 1e-12)
      throw std::domain_error("sigma2_ml: T0 must have unit diagonal");
  Eigen::LLT<Matrix> llt(hermitize(t0_normalized));
  if (llt.info() != Eigen::Success)
    throw std::domain_error("sigma2_ml: T0 not positive definite");
  const double tr = llt.solve(rhat).trace().real();
  if (!(tr > 0.0)) throw std::domain_error("sigma2_ml: non-positive trace");
  return tr / n;
}

double sigma2_ml(const Matrix& rhat, const SymToeplitz& t0_normalized) {
  return sigma2_ml(rhat, to_dense(t0_normalized));
}

}  // namespace tml
