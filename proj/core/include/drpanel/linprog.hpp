#pragma once

#include "drpanel/types.hpp"

namespace drpanel::lp {

/// Polyhedron { x free : A_eq x = b_eq, A_ge x >= b_ge }.
struct LinearSystem {
  Matrix A_eq;
  Vector b_eq;
  Matrix A_ge;
  Vector b_ge;

  [[nodiscard]] Eigen::Index n_vars() const { return A_eq.rows() > 0 ? A_eq.cols() : A_ge.cols(); }
  /// Largest violation of any row at x (0 when x is feasible).
  [[nodiscard]] double max_violation(const Vector& x) const;
};

struct FeasibilityResult {
  bool feasible = false;
  /// A vertex of the polyhedron when feasible.
  Vector point;
  /// Farkas multipliers when infeasible: z_ge >= 0, A_eq' z_eq + A_ge' z_ge = 0, b'z > 0.
  Vector farkas_eq;
  Vector farkas_ge;
  /// Optimal phase-one objective (sum of artificial variables).
  double infeasibility = 0.0;
  int pivots = 0;
};

/// Phase-one simplex on a dense tableau with Bland's rule (terminates on degenerate problems).
FeasibilityResult find_feasible_point(const LinearSystem& system, double tol = 1e-9);

}  // namespace drpanel::lp
