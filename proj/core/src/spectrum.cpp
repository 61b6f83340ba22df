#include "tml/spectrum.hpp"

#include <algorithm>
#include <cmath>

namespace tml {

ModuliVector redundancy_moduli(const Matrix& rhat) {
  const int n = static_cast<int>(rhat.rows());
  if (rhat.cols() != n) throw std::domain_error("redundancy_moduli: square matrix required");
  Vector m(n);
  for (int d = 0; d < n; ++d) {
    double acc = 0.0;
    for (int k = 0; k + d < n; ++k) acc += std::abs(rhat(k, k + d));
    m(d) = acc / (n - d);
  }
  return ModuliVector{std::move(m)};
}

OrderSelection select_order(const Vector& eigs, int t_count, OrderMethod method) {
  const int n = static_cast<int>(eigs.size());
  if (t_count < n) throw std::domain_error("select_order: T >= N required");
  for (int i = 0; i < n; ++i)
    if (!(eigs(i) > 0.0)) throw std::domain_error("select_order: eigenvalues must be positive");
  for (int i = 0; i + 1 < n; ++i)
    if (eigs(i) < eigs(i + 1)) throw std::domain_error("select_order: descending order required");

  // Suffix sums of lambda and log(lambda) for the trailing N-k values.
  Vector curve(n);
  double sum = 0.0, logsum = 0.0;
  std::vector<double> suf_sum(n + 1, 0.0), suf_log(n + 1, 0.0);
  for (int i = n - 1; i >= 0; --i) {
    sum += eigs(i);
    logsum += std::log(eigs(i));
    suf_sum[i] = sum;
    suf_log[i] = logsum;
  }

  int best_k = 0;
  for (int k = 0; k < n; ++k) {
    const int m = n - k;
    const double arith = suf_sum[k] / m;
    const double log_geo = suf_log[k] / m;
    // -(N-k) T log(G/A) >= 0, plus the free-parameter penalty.
    const double sphericity = static_cast<double>(m) * t_count * (std::log(arith) - log_geo);
    const double penalty = (method == OrderMethod::MDL)
                               ? 0.5 * k * (2.0 * n - k) * std::log(static_cast<double>(t_count))
                               : 2.0 * k * (2.0 * n - k);
    curve(k) = sphericity + penalty;
    if (curve(k) < curve(best_k)) best_k = k;  // ties keep the smaller k
  }

  OrderSelection sel;
  sel.k_noise = n - best_k;
  sel.criterion_curve = std::move(curve);
  sel.method = method;
  return sel;
}

namespace {

// g(mu) = sum_n lambda_n / (lambda_n - mu); increasing between poles.
double secular(const Vector& eigs, double mu) {
  double s = 0.0;
  for (int i = 0; i < eigs.size(); ++i) s += eigs(i) / (eigs(i) - mu);
  return s;
}

// One root of g(mu) = T in the open bracket (lo, hi). g is increasing between
// consecutive poles, from -inf just above the lower pole to +inf just below
// the upper one, so bisection on g - T is safe.
double bisect_root(const Vector& eigs, double t_count, double lo, double hi) {
  const double tol = 1e-12 * std::max(1.0, std::abs(hi));
  double a = lo, b = hi;
  for (int it = 0; it < 400 && (b - a) > tol; ++it) {
    const double mid = 0.5 * (a + b);
    if (secular(eigs, mid) - t_count > 0.0)
      b = mid;
    else
      a = mid;
  }
  if ((b - a) > 1e3 * tol)
    throw numerical_error("rmt_correct: root bracketing failed to converge");
  return 0.5 * (a + b);
}

}  // namespace

CorrectedSpectrum rmt_correct(const Vector& eigs, int t_count, int k_noise) {
  const int n = static_cast<int>(eigs.size());
  if (!(t_count > n)) throw std::domain_error("rmt_correct: T > N required");
  if (k_noise < 1 || k_noise > n) throw std::domain_error("rmt_correct: k_noise in [1, N]");
  for (int i = 0; i < n; ++i)
    if (!(eigs(i) > 0.0)) throw std::domain_error("rmt_correct: eigenvalues must be positive");

  CorrectedSpectrum out;

  // Degenerate flat spectrum: all roots coincide, pass through.
  if (eigs(0) - eigs(n - 1) < 1e-12 * std::max(1.0, eigs(0))) {
    out.values = eigs;
    out.noise_value = eigs.mean();
    out.values.setConstant(out.noise_value);
    out.clusters = {{0, n}};
    return out;
  }

  // Descending interlacing: mu_j in (lambda_{j+1}, lambda_j), and the lowest
  // root below lambda_N. Open brackets are shrunk inward by a relative eps
  // to stay off the poles; equal adjacent sample eigenvalues pin the root.
  const double scale = std::max(1.0, eigs(0));
  const double eps = 1e-14 * scale;
  Vector mu(n);
  for (int j = 0; j < n - 1; ++j) {
    const double hi = eigs(j), lo = eigs(j + 1);
    if (hi - lo <= 2 * eps) {
      mu(j) = lo;
      continue;
    }
    mu(j) = bisect_root(eigs, t_count, lo + eps, hi - eps);
  }
  {
    // Lowest root: expand downward until g < T.
    double hi = eigs(n - 1) - eps;
    double span = std::max(eigs(0) - eigs(n - 1), eigs(n - 1));
    double lo = eigs(n - 1) - span;
    int guard = 0;
    while (secular(eigs, lo) - t_count > 0.0) {
      span *= 2.0;
      lo = eigs(n - 1) - span;
      if (++guard > 120) throw numerical_error("rmt_correct: no lower bracket");
    }
    mu(n - 1) = bisect_root(eigs, t_count, lo, hi);
  }

  // Cluster map: singletons for the N - k_noise signal values, one merged
  // noise cluster at the tail.
  const int n_sig = n - k_noise;
  Vector corrected(n);
  for (int j = 0; j < n_sig; ++j) corrected(j) = t_count * (eigs(j) - mu(j));
  double noise = 0.0;
  for (int j = n_sig; j < n; ++j) noise += t_count * (eigs(j) - mu(j));
  noise /= k_noise;

  // Keep the output a valid descending spectrum: signal estimates never dip
  // below the noise estimate, and are sorted among themselves.
  for (int j = 0; j < n_sig; ++j) corrected(j) = std::max(corrected(j), noise);
  std::sort(corrected.data(), corrected.data() + n_sig, std::greater<double>());
  for (int j = n_sig; j < n; ++j) corrected(j) = noise;

  out.values = std::move(corrected);
  out.noise_value = noise;
  for (int j = 0; j < n_sig; ++j) out.clusters.emplace_back(j, 1);
  out.clusters.emplace_back(n_sig, k_noise);
  return out;
}

}  // namespace tml
