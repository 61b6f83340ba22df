#include "tml/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>

#include "tml/matrix_core.hpp"

namespace tml {

namespace {

double logdet_llt_real(const Eigen::LLT<RealMatrix>& llt) {
  double s = 0.0;
  for (int i = 0; i < llt.matrixLLT().rows(); ++i) s += std::log(llt.matrixL()(i, i));
  return 2.0 * s;
}

double logdet_llt_cplx(const Eigen::LLT<Matrix>& llt) {
  double s = 0.0;
  for (int i = 0; i < llt.matrixLLT().rows(); ++i) s += std::log(llt.matrixL()(i, i).real());
  return 2.0 * s;
}

// 2 * sum_i M(i, i+k): trace of M against the two-diagonal lag basis.
double diag_sum_real(const RealMatrix& m, int k) {
  double s = 0.0;
  for (int i = 0; i + k < m.rows(); ++i) s += m(i, i + k);
  return 2.0 * s;
}

double diag_sum_re(const Matrix& m, int k) {
  double s = 0.0;
  for (int i = 0; i + k < m.rows(); ++i) s += m(i, i + k).real();
  return 2.0 * s;
}

double diag_sum_im(const Matrix& m, int k) {
  double s = 0.0;
  for (int i = 0; i + k < m.rows(); ++i) s += m(i, i + k).imag();
  return 2.0 * s;
}

// Real-class model over x = normalized off-diagonal lags (t_0 fixed at 1).
struct RealModel {
  int n = 0;
  RealMatrix rr;  // Re(Rhat); the imaginary part cancels in every trace here
  double floor = 0.0;

  int dim() const { return n - 1; }

  RealMatrix dense(const Vector& x) const {
    RealMatrix t(n, n);
    for (int i = 0; i < n; ++i) {
      t(i, i) = 1.0;
      for (int j = i + 1; j < n; ++j) {
        t(i, j) = x(j - i - 1);
        t(j, i) = t(i, j);
      }
    }
    return t;
  }

  bool eval(const Vector& x, double beta, double& f, double& j_val, Vector* grad) const {
    const RealMatrix t = dense(x);
    RealMatrix shifted = t;
    shifted.diagonal().array() -= floor;
    Eigen::LLT<RealMatrix> llt_f(shifted);
    if (llt_f.info() != Eigen::Success) return false;
    Eigen::LLT<RealMatrix> llt_t(t);
    if (llt_t.info() != Eigen::Success) return false;

    const double logdet_t = logdet_llt_real(llt_t);
    const double tr = llt_t.solve(rr).trace();
    if (!(tr > 0.0)) return false;
    j_val = -logdet_t - n * std::log(tr / n);
    const double barrier = logdet_llt_real(llt_f);
    f = -j_val - beta * barrier;

    if (grad) {
      const RealMatrix tinv = llt_t.solve(RealMatrix::Identity(n, n));
      const RealMatrix g2 = tinv * rr * tinv;
      const RealMatrix finv = llt_f.solve(RealMatrix::Identity(n, n));
      grad->resize(dim());
      for (int k = 1; k < n; ++k) {
        const double gj = -diag_sum_real(tinv, k) + n * diag_sum_real(g2, k) / tr;
        (*grad)(k - 1) = -gj - beta * diag_sum_real(finv, k);
      }
    }
    return true;
  }

  double min_eig(const Vector& x) const { return eigvals_real(dense(x))(n - 1); }
};

// Hermitian-class model: x = [Re t_1..t_{N-1}, Im t_1..t_{N-1}], t_0 = 1.
struct HermModel {
  int n = 0;
  Matrix rhat;
  double floor = 0.0;

  int dim() const { return 2 * (n - 1); }

  Matrix dense(const Vector& x) const {
    Matrix t(n, n);
    const int nx = n - 1;
    for (int i = 0; i < n; ++i) {
      t(i, i) = 1.0;
      for (int j = i + 1; j < n; ++j) {
        const int k = j - i;
        t(i, j) = Complex(x(k - 1), x(nx + k - 1));
        t(j, i) = std::conj(t(i, j));
      }
    }
    return t;
  }

  bool eval(const Vector& x, double beta, double& f, double& j_val, Vector* grad) const {
    const Matrix t = dense(x);
    Matrix shifted = t;
    shifted.diagonal().array() -= Complex(floor, 0.0);
    Eigen::LLT<Matrix> llt_f(shifted);
    if (llt_f.info() != Eigen::Success) return false;
    Eigen::LLT<Matrix> llt_t(t);
    if (llt_t.info() != Eigen::Success) return false;

    const double logdet_t = logdet_llt_cplx(llt_t);
    const double tr = llt_t.solve(rhat).trace().real();
    if (!(tr > 0.0)) return false;
    j_val = -logdet_t - n * std::log(tr / n);
    const double barrier = logdet_llt_cplx(llt_f);
    f = -j_val - beta * barrier;

    if (grad) {
      const Matrix tinv = llt_t.solve(Matrix::Identity(n, n));
      const Matrix g2 = tinv * rhat * tinv;
      const Matrix finv = llt_f.solve(Matrix::Identity(n, n));
      grad->resize(dim());
      const int nx = n - 1;
      for (int k = 1; k < n; ++k) {
        const double gj_re = -diag_sum_re(tinv, k) + n * diag_sum_re(g2, k) / tr;
        const double gj_im = -diag_sum_im(tinv, k) + n * diag_sum_im(g2, k) / tr;
        (*grad)(k - 1) = -gj_re - beta * diag_sum_re(finv, k);
        (*grad)(nx + k - 1) = -gj_im - beta * diag_sum_im(finv, k);
      }
    }
    return true;
  }

  double min_eig(const Vector& x) const {
    Eigen::SelfAdjointEigenSolver<Matrix> s(dense(x), Eigen::EigenvaluesOnly);
    return s.eigenvalues()(0);
  }
};

struct DriveResult {
  Vector x;
  double j_val = 0.0;
  int iters = 0;
  bool hit_iter_limit = false;
  std::vector<TracePoint> trace;
};

template <class Model>
DriveResult drive(const Model& model, Vector x0, double logdet_r, const OptimizerConfig& cfg) {
  DriveResult res;
  res.x = std::move(x0);

  double f = 0.0, j_val = 0.0;
  Vector g(model.dim());
  const int dim = model.dim();

  Vector best_x = res.x;
  double best_j = -std::numeric_limits<double>::infinity();

  bool first_round = true;
  for (double beta = cfg.barrier_weight0; beta >= cfg.barrier_min;
       beta *= cfg.barrier_decay) {
    if (!model.eval(res.x, beta, f, j_val, &g)) {
      if (first_round) throw std::domain_error("maximize_lr: infeasible starting point");
      break;  // should not happen: previous round left a feasible iterate
    }
    first_round = false;
    if (j_val > best_j) {
      best_j = j_val;
      best_x = res.x;
    }

    RealMatrix h = RealMatrix::Identity(dim, dim);
    int consec_small = 0;
    while (res.iters < cfg.max_iters) {
      if (g.lpNorm<Eigen::Infinity>() < cfg.grad_tol) break;

      Vector p = -(h * g);
      if (p.dot(g) >= 0.0) {
        h.setIdentity();
        p = -g;
      }

      // Armijo backtracking; infeasible trial points (floor violated) just
      // shrink the step.
      const double slope = g.dot(p);
      double alpha = 1.0;
      double f_new = 0.0, j_new = 0.0;
      Vector g_new(dim);
      bool found = false;
      while (alpha > 1e-14) {
        const Vector x_try = res.x + alpha * p;
        if (model.eval(x_try, beta, f_new, j_new, &g_new) &&
            f_new <= f + 1e-4 * alpha * slope) {
          found = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!found) break;

      const Vector s = alpha * p;
      const Vector y = g_new - g;
      res.x += s;
      ++res.iters;

      const double rel_change = std::abs(j_new - j_val) / std::max(1.0, std::abs(j_new));
      consec_small = (rel_change < cfg.lr_tol) ? consec_small + 1 : 0;

      f = f_new;
      j_val = j_new;
      g = g_new;
      if (j_val > best_j) {
        best_j = j_val;
        best_x = res.x;
      }
      res.trace.push_back({res.iters, std::exp(j_val + logdet_r), model.min_eig(res.x)});

      const double sy = s.dot(y);
      if (sy > 1e-12 * s.norm() * y.norm()) {
        const Vector hy = h * y;
        const double yhy = y.dot(hy);
        const double rho = 1.0 / sy;
        // BFGS inverse update.
        h += ((sy + yhy) * rho * rho) * (s * s.transpose());
        h -= rho * (hy * s.transpose() + s * hy.transpose());
      }

      if (consec_small >= 3) break;
    }
    if (res.iters >= cfg.max_iters) {
      res.hit_iter_limit = true;
      break;
    }
  }

  // The reported solution never scores below the best iterate seen.
  if (best_j > j_val) {
    res.x = best_x;
    res.j_val = best_j;
  } else {
    res.j_val = j_val;
  }
  return res;
}

double logdet_pd_cplx(const Matrix& m, const char* what) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success)
    throw std::domain_error(std::string(what) + ": matrix not positive definite");
  return logdet_llt_cplx(llt);
}

}  // namespace

Vector lr_gradient(const SymToeplitz& t, const Matrix& rhat) {
  const int n = t.size();
  if (rhat.rows() != n) throw std::domain_error("lr_gradient: size mismatch");
  Eigen::LLT<RealMatrix> llt(to_dense_real(t));
  if (llt.info() != Eigen::Success) throw std::domain_error("lr_gradient: T not positive definite");
  const RealMatrix rr = rhat.real();
  const double tr = llt.solve(rr).trace();
  if (!(tr > 0.0)) throw std::domain_error("lr_gradient: non-positive trace");
  const RealMatrix tinv = llt.solve(RealMatrix::Identity(n, n));
  const RealMatrix g2 = tinv * rr * tinv;
  Vector g(n - 1);
  for (int k = 1; k < n; ++k)
    g(k - 1) = -diag_sum_real(tinv, k) + n * diag_sum_real(g2, k) / tr;
  return g;
}

Vector lr_gradient(const HermToeplitz& t, const Matrix& rhat) {
  const int n = t.size();
  if (rhat.rows() != n) throw std::domain_error("lr_gradient: size mismatch");
  Eigen::LLT<Matrix> llt(to_dense(t));
  if (llt.info() != Eigen::Success) throw std::domain_error("lr_gradient: T not positive definite");
  const double tr = llt.solve(rhat).trace().real();
  if (!(tr > 0.0)) throw std::domain_error("lr_gradient: non-positive trace");
  const Matrix tinv = llt.solve(Matrix::Identity(n, n));
  const Matrix g2 = tinv * rhat * tinv;
  Vector g(2 * (n - 1));
  for (int k = 1; k < n; ++k) {
    g(k - 1) = -diag_sum_re(tinv, k) + n * diag_sum_re(g2, k) / tr;
    g(n - 1 + k - 1) = -diag_sum_im(tinv, k) + n * diag_sum_im(g2, k) / tr;
  }
  return g;
}

namespace {

// Normalized starting point with the floor honored: lags scaled to t_0 = 1,
// then diagonally loaded if the smallest eigenvalue starts below 2x floor.
Vector normalized_start_real(const SymToeplitz& t0, double floor) {
  Vector u = t0.lags() / t0.t0();
  const double lam = min_eigenvalue(SymToeplitz(u));
  if (lam <= 2.0 * floor) {
    u(0) += 2.0 * floor - lam;
    u /= u(0);
  }
  return u;
}

OptimizeStatus classify(double min_eig_final, double floor, bool hit_iter_limit) {
  if (min_eig_final <= 10.0 * floor) return OptimizeStatus::NonPositiveDefiniteExit;
  if (hit_iter_limit) return OptimizeStatus::IterLimit;
  return OptimizeStatus::Converged;
}

}  // namespace

OptimizeOutcome maximize_lr(const Matrix& rhat, const SymToeplitz& t0,
                            const OptimizerConfig& cfg) {
  const int n = t0.size();
  if (rhat.rows() != n) throw std::domain_error("maximize_lr: size mismatch");
  const double floor = cfg.min_eig_floor > 0.0 ? cfg.min_eig_floor : 1e-6;

  RealModel model{n, rhat.real(), floor};
  const double logdet_r = logdet_pd_cplx(rhat, "maximize_lr");

  const Vector u = normalized_start_real(t0, floor);
  DriveResult res = drive(model, u.tail(n - 1), logdet_r, cfg);

  Vector final_lags(n);
  final_lags(0) = 1.0;
  final_lags.tail(n - 1) = res.x;
  SymToeplitz unit(final_lags);
  const double scale = cfg.normalize_t0 ? sigma2_ml(rhat, unit) : 1.0;

  OptimizeOutcome out{SymToeplitz(unit.lags() * scale), std::exp(res.j_val + logdet_r),
                      res.iters, OptimizeStatus::Converged, std::move(res.trace)};
  out.status = classify(model.min_eig(res.x), floor, res.hit_iter_limit);
  return out;
}

OptimizeOutcome maximize_lr(const Matrix& rhat, const HermToeplitz& t0,
                            const OptimizerConfig& cfg) {
  const int n = t0.size();
  if (rhat.rows() != n) throw std::domain_error("maximize_lr: size mismatch");
  const double floor = cfg.min_eig_floor > 0.0 ? cfg.min_eig_floor : 1e-6;

  HermModel model{n, hermitize(rhat), floor};
  const double logdet_r = logdet_pd_cplx(rhat, "maximize_lr");

  Vector x0(2 * (n - 1));
  for (int k = 1; k < n; ++k) {
    x0(k - 1) = t0.lags()(k - 1).real() / t0.lag0();
    x0(n - 1 + k - 1) = t0.lags()(k - 1).imag() / t0.lag0();
  }
  {
    const double lam = model.min_eig(x0);
    if (lam <= 2.0 * floor) {
      // Shrink the off-diagonal mass until the floor clears.
      const double shrink = (1.0 - 2.0 * floor) / std::max(1e-12, 1.0 - lam);
      x0 *= std::max(0.0, shrink);
    }
  }

  DriveResult res = drive(model, std::move(x0), logdet_r, cfg);

  ComplexVector lags(n - 1);
  for (int k = 1; k < n; ++k)
    lags(k - 1) = Complex(res.x(k - 1), res.x(n - 1 + k - 1));
  HermToeplitz unit(1.0, lags);
  const double scale = cfg.normalize_t0 ? sigma2_ml(rhat, to_dense(unit)) : 1.0;

  ComplexVector scaled = lags * scale;
  OptimizeOutcome out{HermToeplitz(scale, std::move(scaled)),
                      std::exp(res.j_val + logdet_r), res.iters, OptimizeStatus::Converged,
                      std::move(res.trace)};
  out.status = classify(model.min_eig(res.x), floor, res.hit_iter_limit);
  return out;
}

OptimizeOutcome maximize_lr_hermitian(const Matrix& rhat, const SymToeplitz& t0,
                                      const OptimizerConfig& cfg) {
  const int n = t0.size();
  ComplexVector lags(n - 1);
  for (int k = 1; k < n; ++k) lags(k - 1) = Complex(t0.lag(k), 0.0);
  return maximize_lr(rhat, HermToeplitz(t0.t0(), std::move(lags)), cfg);
}

bool is_global(const OptimizeOutcome& candidate, const Matrix& rhat, const SymToeplitz& t_true,
               const OptimizerConfig& cfg) {
  const double lr_true = likelihood_ratio(rhat, t_true);
  if (!(candidate.lr >= lr_true)) return false;

  OptimizeOutcome ref = candidate.is_hermitian() ? maximize_lr_hermitian(rhat, t_true, cfg)
                                                 : maximize_lr(rhat, t_true, cfg);
  if (ref.status == OptimizeStatus::NonPositiveDefiniteExit) return false;
  if (std::abs(ref.lr - candidate.lr) > 1e-6) return false;

  if (candidate.is_hermitian()) {
    const HermToeplitz& a = candidate.hermitian_matrix();
    const HermToeplitz& b = ref.hermitian_matrix();
    const ComplexVector ua = a.lags() / a.lag0();
    const ComplexVector ub = b.lags() / b.lag0();
    return (ua - ub).cwiseAbs().maxCoeff() <= 1e-4;
  }
  const Vector ua = candidate.real_matrix().lags() / candidate.real_matrix().t0();
  const Vector ub = ref.real_matrix().lags() / ref.real_matrix().t0();
  return (ua - ub).cwiseAbs().maxCoeff() <= 1e-4;
}

}  // namespace tml
