#include "tml/linprog.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/LU>

namespace tml {

LpProblem LpProblem::make(int n) {
  LpProblem p;
  p.cost = Vector::Zero(n);
  p.ineq_a = RealMatrix(0, n);
  p.ineq_b = Vector(0);
  p.eq_a = RealMatrix(0, n);
  p.eq_b = Vector(0);
  p.lb = Vector::Constant(n, -kInf);
  p.ub = Vector::Constant(n, kInf);
  return p;
}

const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::NumericalFailure: return "numerical-failure";
  }
  return "unknown";
}

namespace {

constexpr double kPivotTol = 1e-11;
constexpr double kFeasTol = 1e-9;
constexpr int kRefactorEvery = 50;
constexpr int kMaxPivots = 10000;

enum class VarState : std::uint8_t { Basic, AtLower, AtUpper };

// How an original variable maps onto the nonnegative computational variables.
struct VarMap {
  enum Kind { ShiftLower, NegUpper, Split } kind;
  int col = -1;    // first computational column
  double shift = 0.0;  // lower bound (ShiftLower) or upper bound (NegUpper)
};

// Bounded-variable revised simplex working set. Computational form:
//   minimize c.z   s.t.  W z = d,  0 <= z <= u   (u may be +inf)
struct Tableau {
  RealMatrix w;      // rows x cols
  Vector d;
  Vector upper;      // per computational variable
  Vector cost;       // current phase costs
  int rows = 0;
  int cols = 0;          // all columns including artificials
  int structural = 0;    // columns that are not artificial

  std::vector<int> basis;         // size rows
  std::vector<VarState> state;    // size cols
  RealMatrix b_inv;
  Vector x_basic;
  int pivots = 0;

  double nonbasic_value(int j) const {
    return state[j] == VarState::AtUpper ? upper(j) : 0.0;
  }

  void refactor() {
    RealMatrix b(rows, rows);
    for (int i = 0; i < rows; ++i) b.col(i) = w.col(basis[i]);
    Eigen::FullPivLU<RealMatrix> lu(b);
    if (!lu.isInvertible()) throw numerical_error("solve_lp: singular basis");
    b_inv = lu.inverse();
    recompute_basics();
  }

  void recompute_basics() {
    Vector rhs = d;
    for (int j = 0; j < cols; ++j)
      if (state[j] == VarState::AtUpper) rhs -= w.col(j) * upper(j);
    x_basic = b_inv * rhs;
  }

  // Returns true on optimality, throws LpStatus codes via out-params.
  enum class StepResult { Optimal, Pivoted, Unbounded, IterLimit };

  StepResult step(double cost_scale) {
    const double dj_tol = kFeasTol * cost_scale;
    // Price: y = c_B' B_inv
    Vector y = Vector::Zero(rows);
    for (int i = 0; i < rows; ++i)
      if (cost(basis[i]) != 0.0) y += cost(basis[i]) * b_inv.row(i).transpose();

    // Bland: lowest-index eligible entering column.
    int enter = -1;
    double enter_dir = 0.0;  // +1 increase from lower, -1 decrease from upper
    for (int j = 0; j < structural; ++j) {
      if (state[j] == VarState::Basic) continue;
      const double dj = cost(j) - y.dot(w.col(j));
      if (state[j] == VarState::AtLower && dj < -dj_tol) {
        enter = j;
        enter_dir = 1.0;
        break;
      }
      if (state[j] == VarState::AtUpper && dj > dj_tol) {
        enter = j;
        enter_dir = -1.0;
        break;
      }
    }
    if (enter < 0) return StepResult::Optimal;

    const Vector wcol = b_inv * w.col(enter);

    // Ratio test: theta is the movement of the entering variable along
    // enter_dir. Basic variable i changes by -enter_dir * wcol(i) * theta.
    double theta = kInf;
    int leave_pos = -1;      // basis position, or -1 for a bound flip
    int leave_var = enter;   // variable index used for Bland tie-breaking
    bool leave_to_upper = false;
    if (std::isfinite(upper(enter))) theta = upper(enter);

    for (int i = 0; i < rows; ++i) {
      const double delta = enter_dir * wcol(i);
      double cap = kInf;
      bool to_upper = false;
      if (delta > kPivotTol) {
        cap = x_basic(i) / delta;
      } else if (delta < -kPivotTol) {
        const double ub_i = upper(basis[i]);
        if (std::isfinite(ub_i)) {
          cap = (ub_i - x_basic(i)) / (-delta);
          to_upper = true;
        }
      } else {
        continue;
      }
      if (!std::isfinite(cap)) continue;
      if (cap < -1e-12) cap = 0.0;  // numerical dust
      const double tie = 1e-10 * (1.0 + std::min(theta, cap));
      if (cap < theta - tie || (cap <= theta + tie && basis[i] < leave_var)) {
        theta = std::max(cap, 0.0);
        leave_pos = i;
        leave_var = basis[i];
        leave_to_upper = to_upper;
      }
    }

    if (!std::isfinite(theta)) return StepResult::Unbounded;

    if (leave_pos < 0) {
      // Entering variable runs to its own opposite bound.
      x_basic -= theta * enter_dir * wcol;
      state[enter] = (enter_dir > 0) ? VarState::AtUpper : VarState::AtLower;
    } else {
      x_basic -= theta * enter_dir * wcol;
      const int old_var = basis[leave_pos];
      state[old_var] = leave_to_upper ? VarState::AtUpper : VarState::AtLower;
      basis[leave_pos] = enter;
      state[enter] = VarState::Basic;
      x_basic(leave_pos) =
          (enter_dir > 0) ? theta : (std::isfinite(upper(enter)) ? upper(enter) - theta : -theta);
      // Product-form update of the inverse.
      const double piv = wcol(leave_pos);
      if (std::abs(piv) < kPivotTol) throw numerical_error("solve_lp: tiny pivot");
      b_inv.row(leave_pos) /= piv;
      for (int i = 0; i < rows; ++i) {
        if (i == leave_pos) continue;
        const double f = wcol(i);
        if (f != 0.0) b_inv.row(i) -= f * b_inv.row(leave_pos);
      }
    }
    ++pivots;
    if (pivots % kRefactorEvery == 0) refactor();
    return StepResult::Pivoted;
  }
};

}  // namespace

LpSolution solve_lp(const LpProblem& p) {
  const int n = p.num_vars();
  const int m_ineq = p.num_ineq();
  const int m_eq = p.num_eq();
  const int rows = m_ineq + m_eq;

  LpSolution sol;
  sol.x = Vector::Zero(n);

  if (p.ineq_a.rows() != m_ineq || (m_ineq > 0 && p.ineq_a.cols() != n) ||
      p.eq_a.rows() != m_eq || (m_eq > 0 && p.eq_a.cols() != n) ||
      p.lb.size() != n || p.ub.size() != n)
    throw std::domain_error("solve_lp: inconsistent dimensions");
  for (int j = 0; j < n; ++j)
    if (p.lb(j) > p.ub(j)) {
      sol.status = LpStatus::Infeasible;
      return sol;
    }

  // Build the computational form: every variable shifted/split to [0, u].
  std::vector<VarMap> vmap(n);
  int ncols = 0;
  for (int j = 0; j < n; ++j) {
    const bool lb_fin = std::isfinite(p.lb(j));
    const bool ub_fin = std::isfinite(p.ub(j));
    if (lb_fin) {
      vmap[j] = {VarMap::ShiftLower, ncols, p.lb(j)};
      ncols += 1;
    } else if (ub_fin) {
      vmap[j] = {VarMap::NegUpper, ncols, p.ub(j)};
      ncols += 1;
    } else {
      vmap[j] = {VarMap::Split, ncols, 0.0};
      ncols += 2;
    }
  }
  const int slack0 = ncols;
  ncols += m_ineq;
  const int structural = ncols;
  const int art0 = ncols;
  ncols += rows;

  Tableau t;
  t.rows = rows;
  t.cols = ncols;
  t.structural = structural;
  t.w = RealMatrix::Zero(rows, ncols);
  t.d = Vector::Zero(rows);
  t.upper = Vector::Constant(ncols, kInf);

  auto fill_row = [&](int r, const auto& a_row, double b) {
    double rhs = b;
    for (int j = 0; j < n; ++j) {
      const double a = a_row(j);
      if (a == 0.0) continue;
      switch (vmap[j].kind) {
        case VarMap::ShiftLower:
          t.w(r, vmap[j].col) = a;
          rhs -= a * vmap[j].shift;
          break;
        case VarMap::NegUpper:
          t.w(r, vmap[j].col) = -a;
          rhs -= a * vmap[j].shift;
          break;
        case VarMap::Split:
          t.w(r, vmap[j].col) = a;
          t.w(r, vmap[j].col + 1) = -a;
          break;
      }
    }
    t.d(r) = rhs;
  };

  for (int r = 0; r < m_ineq; ++r) {
    fill_row(r, p.ineq_a.row(r), p.ineq_b(r));
    t.w(r, slack0 + r) = 1.0;
  }
  for (int r = 0; r < m_eq; ++r) fill_row(m_ineq + r, p.eq_a.row(r), p.eq_b(r));

  for (int j = 0; j < n; ++j)
    if (vmap[j].kind == VarMap::ShiftLower && std::isfinite(p.ub(j)))
      t.upper(vmap[j].col) = p.ub(j) - p.lb(j);

  // Phase I setup: nonnegative right-hand side, artificial basis.
  for (int r = 0; r < rows; ++r) {
    if (t.d(r) < 0.0) {
      t.w.row(r) *= -1.0;
      t.d(r) = -t.d(r);
    }
    t.w(r, art0 + r) = 1.0;
  }
  t.basis.resize(rows);
  t.state.assign(ncols, VarState::AtLower);
  for (int r = 0; r < rows; ++r) {
    t.basis[r] = art0 + r;
    t.state[art0 + r] = VarState::Basic;
  }
  t.b_inv = RealMatrix::Identity(rows, rows);
  t.x_basic = t.d;

  auto run_phase = [&](double cost_scale) -> Tableau::StepResult {
    while (t.pivots < kMaxPivots) {
      Tableau::StepResult r;
      try {
        r = t.step(cost_scale);
      } catch (const numerical_error&) {
        return Tableau::StepResult::IterLimit;
      }
      if (r != Tableau::StepResult::Pivoted) return r;
    }
    return Tableau::StepResult::IterLimit;
  };

  // Phase I: minimize the sum of artificials. Artificials may enter again
  // while their cost is 1, so they count as structural for this phase.
  t.cost = Vector::Zero(ncols);
  for (int r = 0; r < rows; ++r) t.cost(art0 + r) = 1.0;
  t.structural = ncols;
  Tableau::StepResult r1 = run_phase(1.0);
  if (r1 == Tableau::StepResult::IterLimit) {
    sol.status = LpStatus::NumericalFailure;
    sol.pivots = t.pivots;
    return sol;
  }
  double art_sum = 0.0;
  for (int i = 0; i < rows; ++i)
    if (t.basis[i] >= art0) art_sum += std::abs(t.x_basic(i));
  const double d_scale = std::max(1.0, t.d.lpNorm<Eigen::Infinity>());
  if (art_sum > 1e-8 * d_scale) {
    sol.status = LpStatus::Infeasible;
    sol.pivots = t.pivots;
    return sol;
  }

  // Drive residual basic artificials out with degenerate pivots; rows with no
  // eligible column are redundant and keep a pinned artificial at zero.
  for (int i = 0; i < rows; ++i) {
    if (t.basis[i] < art0) continue;
    int piv_col = -1;
    for (int j = 0; j < structural; ++j) {
      if (t.state[j] == VarState::Basic) continue;
      const double v = t.b_inv.row(i).dot(t.w.col(j));
      if (std::abs(v) > 1e-7) {
        piv_col = j;
        break;
      }
    }
    if (piv_col < 0) continue;
    const Vector wcol = t.b_inv * t.w.col(piv_col);
    const int old_var = t.basis[i];
    const double piv = wcol(i);
    t.b_inv.row(i) /= piv;
    for (int k = 0; k < rows; ++k)
      if (k != i && wcol(k) != 0.0) t.b_inv.row(k) -= wcol(k) * t.b_inv.row(i);
    t.state[old_var] = VarState::AtLower;
    t.basis[i] = piv_col;
    t.state[piv_col] = VarState::Basic;
  }
  for (int r = 0; r < rows; ++r) t.upper(art0 + r) = 0.0;  // freeze artificials
  t.recompute_basics();

  // Phase II.
  t.cost = Vector::Zero(ncols);
  for (int j = 0; j < n; ++j) {
    const double c = p.cost(j);
    switch (vmap[j].kind) {
      case VarMap::ShiftLower: t.cost(vmap[j].col) = c; break;
      case VarMap::NegUpper: t.cost(vmap[j].col) = -c; break;
      case VarMap::Split:
        t.cost(vmap[j].col) = c;
        t.cost(vmap[j].col + 1) = -c;
        break;
    }
  }
  t.structural = structural;
  const double cost_scale = std::max(1.0, p.cost.lpNorm<Eigen::Infinity>());
  Tableau::StepResult r2 = run_phase(cost_scale);
  sol.pivots = t.pivots;
  if (r2 == Tableau::StepResult::Unbounded) {
    sol.status = LpStatus::Unbounded;
    return sol;
  }
  if (r2 == Tableau::StepResult::IterLimit) {
    sol.status = LpStatus::NumericalFailure;
    return sol;
  }

  // Extract the solution.
  t.refactor();
  Vector z = Vector::Zero(ncols);
  for (int j = 0; j < ncols; ++j)
    if (t.state[j] == VarState::AtUpper && std::isfinite(t.upper(j))) z(j) = t.upper(j);
  for (int i = 0; i < rows; ++i) z(t.basis[i]) = t.x_basic(i);

  for (int j = 0; j < n; ++j) {
    switch (vmap[j].kind) {
      case VarMap::ShiftLower: sol.x(j) = vmap[j].shift + z(vmap[j].col); break;
      case VarMap::NegUpper: sol.x(j) = vmap[j].shift - z(vmap[j].col); break;
      case VarMap::Split: sol.x(j) = z(vmap[j].col) - z(vmap[j].col + 1); break;
    }
  }
  sol.objective = p.cost.dot(sol.x);

  // Duals from the final basis; rows made nonnegative in phase I were negated
  // in place, so the multipliers already refer to the stored row signs.
  Vector y = Vector::Zero(rows);
  for (int i = 0; i < rows; ++i)
    if (t.cost(t.basis[i]) != 0.0) y += t.cost(t.basis[i]) * t.b_inv.row(i).transpose();
  double dual_obj = y.dot(t.d);
  for (int j = 0; j < structural; ++j) {
    if (t.state[j] == VarState::AtUpper && std::isfinite(t.upper(j))) {
      const double dj = t.cost(j) - y.dot(t.w.col(j));
      dual_obj += dj * t.upper(j);
    }
  }
  // Constant offset between the computational and original objective.
  dual_obj += sol.objective - t.cost.dot(z);
  sol.dual_objective = dual_obj;
  sol.dual_ineq = y.head(m_ineq);
  sol.dual_eq = y.tail(m_eq);

  // Validate the advertised primal tolerances before declaring optimality.
  bool ok = true;
  if (m_ineq > 0) ok &= ((p.ineq_a * sol.x - p.ineq_b).maxCoeff() <= 1e-8 * d_scale);
  if (m_eq > 0) ok &= ((p.eq_a * sol.x - p.eq_b).cwiseAbs().maxCoeff() <= 1e-8 * d_scale);
  for (int j = 0; j < n; ++j) {
    if (std::isfinite(p.lb(j))) ok &= (sol.x(j) >= p.lb(j) - 1e-10);
    if (std::isfinite(p.ub(j))) ok &= (sol.x(j) <= p.ub(j) + 1e-10);
  }
  sol.status = ok ? LpStatus::Optimal : LpStatus::NumericalFailure;
  return sol;
}

}  // namespace tml
