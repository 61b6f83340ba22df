#pragma once

#include <limits>

#include "tml/types.hpp"

namespace tml {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Canonical dense linear program:
///   minimize cost . x
///   subject to ineq_a x <= ineq_b, eq_a x = eq_b, lb <= x <= ub.
/// Bounds may be infinite in either direction.
struct LpProblem {
  Vector cost;
  RealMatrix ineq_a;
  Vector ineq_b;
  RealMatrix eq_a;
  Vector eq_b;
  Vector lb;
  Vector ub;

  /// n variables, no rows, free bounds.
  static LpProblem make(int n);

  int num_vars() const { return static_cast<int>(cost.size()); }
  int num_ineq() const { return static_cast<int>(ineq_b.size()); }
  int num_eq() const { return static_cast<int>(eq_b.size()); }
};

enum class LpStatus { Optimal, Infeasible, Unbounded, NumericalFailure };

struct LpSolution {
  Vector x;
  double objective = 0.0;
  LpStatus status = LpStatus::NumericalFailure;
  Vector dual_ineq;        // row multipliers (valid when Optimal)
  Vector dual_eq;
  double dual_objective = 0.0;  // equals the primal objective at an optimum
  int pivots = 0;
};

/// Two-phase revised simplex on bounded variables with Bland's anti-cycling
/// rule and a dense basis inverse refreshed every 50 pivots. Deterministic:
/// repeated solves of the same problem take the same pivot path, and scaling
/// the cost vector by a positive constant does not change the returned point.
LpSolution solve_lp(const LpProblem& p);

const char* to_string(LpStatus s);

}  // namespace tml
