#pragma once

#include <utility>
#include <vector>

#include "tml/types.hpp"

namespace tml {

/// Per-lag element moduli |t_0|..|t_{N-1}|. Invariant under diagonal phase
/// congruence of the source matrix.
struct ModuliVector {
  Vector moduli;

  int size() const { return static_cast<int>(moduli.size()); }
};

enum class OrderMethod { MDL, AIC };

/// Noise-subspace size selection. criterion_curve[k] is the minimized
/// objective for k assumed signal eigenvalues, k = 0..N-1, and
/// k_noise = N - argmin.
struct OrderSelection {
  int k_noise = 0;
  Vector criterion_curve;
  OrderMethod method = OrderMethod::MDL;
};

/// Consistently re-estimated spectrum: the k_noise smallest values are merged
/// into one cluster and share noise_value exactly.
struct CorrectedSpectrum {
  Vector values;  // descending, all positive
  double noise_value = 0.0;
  std::vector<std::pair<int, int>> clusters;  // (start index, multiplicity)
};

/// Redundancy averaging of element moduli along each diagonal:
/// moduli[n] = (1/(N-n)) sum_k |Rhat(k, k+n)|.
ModuliVector redundancy_moduli(const Matrix& rhat);

/// MDL/AIC order selection on a descending positive spectrum; T is the
/// training sample count. Ties break toward larger k_noise.
OrderSelection select_order(const Vector& eigs_descending, int t_count, OrderMethod method);

/// Random-matrix-theory eigenvalue re-estimation. Clusters the k_noise
/// smallest sample eigenvalues as one group (all remaining eigenvalues are
/// singleton clusters), finds the N roots of the rank-one-downdate secular
/// equation sum_n lambda_n/(lambda_n - mu) = T by bracketed bisection, and
/// maps each cluster to the average of T*(lambda_k - mu_k). Shrinks the
/// dynamic range of the sample spectrum.
CorrectedSpectrum rmt_correct(const Vector& eigs_descending, int t_count, int k_noise);

}  // namespace tml
