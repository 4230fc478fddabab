#include "drpanel/linprog.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "drpanel/error.hpp"

namespace drpanel::lp {

double LinearSystem::max_violation(const Vector& x) const {
  double v = 0.0;
  if (A_eq.rows() > 0) v = std::max(v, (A_eq * x - b_eq).cwiseAbs().maxCoeff());
  if (A_ge.rows() > 0) v = std::max(v, (b_ge - A_ge * x).cwiseMax(0.0).maxCoeff());
  return v;
}

FeasibilityResult find_feasible_point(const LinearSystem& sys, double tol) {
  const Eigen::Index n = sys.n_vars();
  const Eigen::Index me = sys.A_eq.rows();
  const Eigen::Index mg = sys.A_ge.rows();
  if ((me > 0 && sys.A_eq.cols() != n) || (mg > 0 && sys.A_ge.cols() != n) || sys.b_eq.size() != me ||
      sys.b_ge.size() != mg) {
    throw ValidationError("linear system has inconsistent dimensions");
  }
  const Eigen::Index m = me + mg;
  FeasibilityResult res;
  if (m == 0) {
    res.feasible = true;
    res.point = Vector::Zero(n);
    return res;
  }

  // Columns: x+ (n), x- (n), surplus (mg), artificial (m); last column is the rhs.
  const Eigen::Index n_struct = 2 * n + mg;
  const Eigen::Index art0 = n_struct;
  const Eigen::Index cols = n_struct + m;
  Matrix tab = Matrix::Zero(m, cols + 1);
  Vector sign(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const bool eq = i < me;
    const auto row = eq ? sys.A_eq.row(i) : sys.A_ge.row(i - me);
    const double b = eq ? sys.b_eq(i) : sys.b_ge(i - me);
    const double s = b < 0 ? -1.0 : 1.0;
    sign(i) = s;
    tab.block(i, 0, 1, n) = s * row;
    tab.block(i, n, 1, n) = -s * row;
    if (!eq) tab(i, 2 * n + (i - me)) = -s;
    tab(i, art0 + i) = 1.0;
    tab(i, cols) = s * b;
  }
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = art0 + i;

  // Reduced costs of the phase-one objective: sum of artificials.
  Vector cost = Vector::Zero(cols);
  cost.tail(m).setOnes();
  auto reduced = [&]() {
    Vector r = cost;
    for (Eigen::Index i = 0; i < m; ++i) r -= cost(basis[static_cast<std::size_t>(i)]) * tab.row(i).head(cols).transpose();
    return r;
  };

  const double scale = std::max(1.0, tab.cwiseAbs().maxCoeff());
  const double piv_tol = 1e-11 * scale;
  const int max_pivots = static_cast<int>(50 * (m + cols)) + 1000;
  Vector rc = reduced();
  while (true) {
    Eigen::Index enter = -1;
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (rc(j) < -1e-12 * scale) {
        enter = j;
        break;
      }
    }
    if (enter < 0) break;
    Eigen::Index leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < m; ++i) {
      const double a = tab(i, enter);
      if (a > piv_tol) {
        const double ratio = tab(i, cols) / a;
        if (ratio < best - 1e-14 * scale ||
            (std::abs(ratio - best) <= 1e-14 * scale && leave >= 0 &&
             basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
          best = ratio;
          leave = i;
        }
      }
    }
    if (leave < 0) break;  // unbounded direction cannot occur in phase one; treat as optimal
    const double p = tab(leave, enter);
    tab.row(leave) /= p;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (i != leave && tab(i, enter) != 0.0) tab.row(i) -= tab(i, enter) * tab.row(leave);
    }
    rc -= rc(enter) * tab.row(leave).head(cols).transpose();
    basis[static_cast<std::size_t>(leave)] = enter;
    if (++res.pivots > max_pivots) throw NumericalError("simplex pivot limit exceeded");
  }

  Vector v = Vector::Zero(cols);
  for (Eigen::Index i = 0; i < m; ++i) v(basis[static_cast<std::size_t>(i)]) = std::max(0.0, tab(i, cols));
  res.infeasibility = v.tail(m).sum();
  const double bnorm = std::max({1.0, me ? sys.b_eq.cwiseAbs().maxCoeff() : 0.0, mg ? sys.b_ge.cwiseAbs().maxCoeff() : 0.0});
  res.point = v.head(n) - v.segment(n, n);
  res.feasible = res.infeasibility <= tol * bnorm && sys.max_violation(res.point) <= 10 * tol * bnorm;
  if (!res.feasible) {
    // Duals of the phase-one program: y_i = 1 - reduced cost of artificial i.
    Vector y = Vector::Ones(m) - rc.tail(m);
    Vector z = sign.cwiseProduct(y);
    res.farkas_eq = z.head(me);
    res.farkas_ge = z.tail(mg).cwiseMax(0.0);
  }
  return res;
}

}  // namespace drpanel::lp
