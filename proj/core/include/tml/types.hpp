#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace tml {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;
using ComplexVector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;  // dense Hermitian storage

/// Thrown when an eigensystem is too degenerate for first-order
/// perturbation machinery.
struct degeneracy_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown on root-bracketing / convergence failures.
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Real symmetric Toeplitz matrix stored as its first-row lags t_0..t_{N-1}.
/// t_0 > 0 is required; |t_k| <= t_0 is necessary for positive
/// semidefiniteness but is not enforced (search and trim iterates are
/// allowed to be indefinite).
class SymToeplitz {
 public:
  explicit SymToeplitz(Vector lags) : lags_(std::move(lags)) {
    if (lags_.size() < 2) throw std::domain_error("SymToeplitz: need N >= 2 lags");
    if (!(lags_(0) > 0.0)) throw std::domain_error("SymToeplitz: t_0 must be positive");
  }

  int size() const { return static_cast<int>(lags_.size()); }
  const Vector& lags() const { return lags_; }
  double lag(int k) const { return lags_(k); }
  double t0() const { return lags_(0); }

  /// Mutation goes through here so the t_0 > 0 invariant stays checked.
  void set_lags(Vector lags) {
    if (lags.size() != lags_.size()) throw std::domain_error("SymToeplitz: size change");
    if (!(lags(0) > 0.0)) throw std::domain_error("SymToeplitz: t_0 must be positive");
    lags_ = std::move(lags);
  }

 private:
  Vector lags_;
};

/// Hermitian Toeplitz matrix: real positive diagonal lag plus N-1 complex lags.
class HermToeplitz {
 public:
  HermToeplitz(double lag0, ComplexVector lags) : lag0_(lag0), lags_(std::move(lags)) {
    if (!(lag0_ > 0.0)) throw std::domain_error("HermToeplitz: t_0 must be positive");
    if (lags_.size() < 1) throw std::domain_error("HermToeplitz: need N >= 2");
  }

  int size() const { return static_cast<int>(lags_.size()) + 1; }
  double lag0() const { return lag0_; }
  const ComplexVector& lags() const { return lags_; }

 private:
  double lag0_;
  ComplexVector lags_;  // t_1..t_{N-1}
};

/// Eigendecomposition with values sorted descending and orthonormal columns.
struct EigenSystem {
  Vector values;   // descending
  Matrix vectors;  // column j pairs with values(j)
};

/// Diagonal phase vector: angles[0] == 0, each angle in (-pi, pi].
/// Composes a beam-steering progression with bounded random calibration
/// errors; both leave element moduli and eigenvalues of the matrix invariant.
class PhaseVector {
 public:
  static PhaseVector zero(int n);
  static PhaseVector steering(int n, double theta_o, double d_over_lambda);
  /// angles[k] = k*pi (the conjugating direction of the reconstruction
  /// ambiguity: flips the sign of every odd lag).
  static PhaseVector alternating(int n);
  static PhaseVector from_angles(Vector angles);

  PhaseVector composed_with(const PhaseVector& other) const;

  int size() const { return static_cast<int>(angles_.size()); }
  const Vector& angles() const { return angles_; }

 private:
  explicit PhaseVector(Vector angles) : angles_(std::move(angles)) {}
  Vector angles_;
};

/// T complex snapshots of dimension N (one per column) plus the seed that
/// generated them; regeneration with the same seed is bit-for-bit identical.
struct SnapshotSet {
  Matrix snapshots;  // N x T
  std::uint64_t seed = 0;

  int dim() const { return static_cast<int>(snapshots.rows()); }
  int count() const { return static_cast<int>(snapshots.cols()); }
};

}  // namespace tml
