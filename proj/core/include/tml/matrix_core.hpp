#pragma once

#include "tml/rng.hpp"
#include "tml/types.hpp"

namespace tml {

/// Band-limited covariance model: t_0 = 2*W2 + sigma2 and
/// t_k = sin(2*pi*W2*k)/(pi*k) for k >= 1. The kernel value at lag 0 is the
/// 2*W2 limit of the off-diagonal expression; the noise power adds on the
/// diagonal only.
SymToeplitz build_sinc_model(int n, double w2, double sigma2);

Matrix to_dense(const SymToeplitz& t);
Matrix to_dense(const HermToeplitz& t);
RealMatrix to_dense_real(const SymToeplitz& t);

/// Force exact Hermitian symmetry: (M + M^H)/2.
Matrix hermitize(const Matrix& m);

/// Full eigendecomposition with descending values. Throws numerical_error if
/// the underlying solver does not converge.
EigenSystem eigh(const Matrix& m);

/// Real symmetric fast paths used in the search/trim hot loops.
EigenSystem eigh_real(const RealMatrix& m);
Vector eigvals_real(const RealMatrix& m);        // descending, values only
Vector eigvals_lags(const SymToeplitz& t);       // descending, values only
double min_eigenvalue(const SymToeplitz& t);

/// Congruence by the diagonal phase matrix: out(i,j) = e^{i a_i} m(i,j) e^{-i a_j}.
/// Element moduli and the eigenvalue spectrum are invariant.
Matrix apply_phase(const Matrix& m, const PhaseVector& p);

/// X_t = diag-phase * T^{1/2} * xi_t with xi_t ~ CN(0, I). The square root is
/// taken by eigendecomposition with eigenvalues clamped at zero. Throws
/// std::domain_error when t_true is not positive definite.
SnapshotSet generate_snapshots(const SymToeplitz& t_true, int t_count,
                               const PhaseVector& p, std::uint64_t seed);

/// Rhat = (1/T) sum_t X_t X_t^H.
Matrix sample_covariance(const SnapshotSet& s);

/// Sphericity likelihood ratio det(Rhat T^{-1}) / [(1/N) tr(Rhat T^{-1})]^N,
/// evaluated in the log domain through symmetric-definite factorizations.
/// Scale-invariant in T (and jointly in Rhat). Throws std::domain_error when
/// either matrix is not positive definite.
double likelihood_ratio(const Matrix& rhat, const Matrix& t0);
double likelihood_ratio(const Matrix& rhat, const SymToeplitz& t0);
double likelihood_ratio(const Matrix& rhat, const HermToeplitz& t0);

/// log of the above, for scores that would underflow.
double log_likelihood_ratio(const Matrix& rhat, const Matrix& t0);
double log_likelihood_ratio(const Matrix& rhat, const SymToeplitz& t0);

/// Same functional through the whitened spectrum: the ratio of geometric to
/// arithmetic mean of eig(Rhat^{1/2} T^{-1} Rhat^{1/2}), raised to the power N.
double likelihood_ratio_eig(const Matrix& rhat, const Matrix& t0);

/// ML scale estimate (1/N) tr(Rhat T0^{-1}) for a T0 normalized to unit
/// diagonal; sigma2_ml * T0 then has the same trace as Rhat.
double sigma2_ml(const Matrix& rhat, const Matrix& t0_normalized);
double sigma2_ml(const Matrix& rhat, const SymToeplitz& t0_normalized);

/// Uniform calibration errors in (-phi_max, phi_max) on elements 1..N-1.
PhaseVector random_calibration_errors(int n, double phi_max, SplitMix64& rng);

}  // namespace tml
