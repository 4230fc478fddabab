#pragma once

#include <vector>

#include "drpanel/linprog.hpp"
#include "drpanel/types.hpp"

namespace drpanel::qp {

/// minimize 0.5 x'Hx + c'x  subject to  A_eq x = b_eq,  A_ge x >= b_ge.
/// H must be symmetric positive definite.
struct QuadraticProgram {
  Matrix H;
  Vector c;
  lp::LinearSystem constraints;
};

struct KktResiduals {
  double stationarity = 0.0;   ///< |Hx + c - A_eq'y_eq - A_ge'y_ge|_inf
  double primal = 0.0;         ///< largest constraint violation
  double dual = 0.0;           ///< largest negative inequality multiplier
  double complementarity = 0.0;///< largest |y_j (a_j'x - b_j)|

  [[nodiscard]] double max() const;
};

struct QpResult {
  Vector x;
  Vector y_eq;
  Vector y_ge;
  double objective = 0.0;
  int iterations = 0;
  /// Indices of inequality rows active at the solution.
  std::vector<Eigen::Index> active;
  KktResiduals kkt;
};

KktResiduals kkt_residuals(const QuadraticProgram& prob, const Vector& x, const Vector& y_eq, const Vector& y_ge);

/// Primal active-set method started from a phase-one simplex vertex.
/// Throws NumericalError if the feasible set is empty or the iteration cap is hit.
QpResult solve(const QuadraticProgram& prob, int max_iter = 0);

}  // namespace drpanel::qp
