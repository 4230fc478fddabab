#include "drpanel/quadprog.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "drpanel/error.hpp"

namespace drpanel::qp {
namespace {

// Indices of a maximal linearly independent subset of the rows of A.
std::vector<Eigen::Index> independent_rows(const Matrix& A) {
  std::vector<Eigen::Index> keep;
  if (A.rows() == 0) return keep;
  Eigen::ColPivHouseholderQR<Matrix> qr(A.transpose());
  qr.setThreshold(1e-10);
  const auto rank = qr.rank();
  const auto& perm = qr.colsPermutation().indices();
  for (Eigen::Index j = 0; j < rank; ++j) keep.push_back(perm(j));
  std::sort(keep.begin(), keep.end());
  return keep;
}

struct EqualitySolve {
  Vector x;
  Vector y;  // multipliers, one per working row
};

// Solves min 0.5 x'Hx + c'x s.t. A x = b through the full KKT matrix.
EqualitySolve solve_equality(const Matrix& H, const Vector& c, const Matrix& A, const Vector& b) {
  const auto n = H.rows();
  const auto m = A.rows();
  Matrix K = Matrix::Zero(n + m, n + m);
  K.topLeftCorner(n, n) = H;
  if (m > 0) {
    K.topRightCorner(n, m) = A.transpose();
    K.bottomLeftCorner(m, n) = A;
  }
  Vector rhs(n + m);
  rhs.head(n) = -c;
  rhs.tail(m) = b;
  Eigen::PartialPivLU<Matrix> lu(K);
  Vector sol = lu.solve(rhs);
  // One step of iterative refinement.
  sol += lu.solve(rhs - K * sol);
  // K [x; v] = [-c; b] with v = -y.
  return {sol.head(n), -sol.tail(m)};
}

}  // namespace

double KktResiduals::max() const { return std::max({stationarity, primal, dual, complementarity}); }

KktResiduals kkt_residuals(const QuadraticProgram& prob, const Vector& x, const Vector& y_eq, const Vector& y_ge) {
  const auto& s = prob.constraints;
  KktResiduals r;
  Vector grad = prob.H * x + prob.c;
  if (s.A_eq.rows() > 0) grad -= s.A_eq.transpose() * y_eq;
  if (s.A_ge.rows() > 0) grad -= s.A_ge.transpose() * y_ge;
  r.stationarity = grad.size() ? grad.cwiseAbs().maxCoeff() : 0.0;
  r.primal = s.max_violation(x);
  if (s.A_ge.rows() > 0) {
    r.dual = (-y_ge).cwiseMax(0.0).maxCoeff();
    r.complementarity = (y_ge.array() * (s.A_ge * x - s.b_ge).array()).abs().maxCoeff();
  }
  return r;
}

QpResult solve(const QuadraticProgram& prob, int max_iter) {
  const auto& sys = prob.constraints;
  const auto n = prob.H.rows();
  if (prob.H.cols() != n || prob.c.size() != n || sys.n_vars() != n) {
    throw ValidationError("quadratic program has inconsistent dimensions");
  }
  const auto start = lp::find_feasible_point(sys);
  if (!start.feasible) throw NumericalError("quadratic program is infeasible");

  const auto eq_rows = independent_rows(sys.A_eq);
  const auto me = static_cast<Eigen::Index>(eq_rows.size());
  const auto mg = sys.A_ge.rows();
  Matrix Aeq(me, n);
  Vector beq(me);
  for (Eigen::Index r = 0; r < me; ++r) {
    Aeq.row(r) = sys.A_eq.row(eq_rows[static_cast<std::size_t>(r)]);
    beq(r) = sys.b_eq(eq_rows[static_cast<std::size_t>(r)]);
  }

  const double scale = std::max(1.0, prob.H.cwiseAbs().maxCoeff());
  const double feas_tol = 1e-10;
  if (max_iter <= 0) max_iter = static_cast<int>(20 * (n + mg)) + 100;

  Vector x = start.point;
  std::vector<Eigen::Index> work;  // active inequality rows
  std::vector<bool> in_work(static_cast<std::size_t>(mg), false);
  QpResult res;

  auto working_matrix = [&](Matrix& A, Vector& b) {
    const auto m = me + static_cast<Eigen::Index>(work.size());
    A.resize(m, n);
    b.resize(m);
    if (me) {
      A.topRows(me) = Aeq;
      b.head(me) = beq;
    }
    for (std::size_t j = 0; j < work.size(); ++j) {
      A.row(me + static_cast<Eigen::Index>(j)) = sys.A_ge.row(work[j]);
      b(me + static_cast<Eigen::Index>(j)) = sys.b_ge(work[j]);
    }
  };

  for (res.iterations = 0; res.iterations < max_iter; ++res.iterations) {
    Matrix A;
    Vector b;
    working_matrix(A, b);
    const Vector g = prob.H * x + prob.c;
    // Step to the minimizer on the current working face.
    auto eqp = solve_equality(prob.H, g, A, Vector::Zero(A.rows()));
    const Vector& p = eqp.x;
    if (p.cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, x.cwiseAbs().maxCoeff())) {
      // Stationary on the face: drop the most negative inequality multiplier, if any.
      Eigen::Index drop = -1;
      double most = -1e-10 * scale;
      for (std::size_t j = 0; j < work.size(); ++j) {
        const double yj = eqp.y(me + static_cast<Eigen::Index>(j));
        if (yj < most) {
          most = yj;
          drop = static_cast<Eigen::Index>(j);
        }
      }
      if (drop < 0) break;
      in_work[static_cast<std::size_t>(work[static_cast<std::size_t>(drop)])] = false;
      work.erase(work.begin() + drop);
      continue;
    }
    double alpha = 1.0;
    Eigen::Index block = -1;
    for (Eigen::Index j = 0; j < mg; ++j) {
      if (in_work[static_cast<std::size_t>(j)]) continue;
      const double ap = sys.A_ge.row(j).dot(p);
      if (ap < -1e-14) {
        const double slack = std::max(0.0, sys.A_ge.row(j).dot(x) - sys.b_ge(j));
        const double step = slack / -ap;
        if (step < alpha) {
          alpha = step;
          block = j;
        }
      }
    }
    x += alpha * p;
    if (block >= 0) {
      work.push_back(block);
      in_work[static_cast<std::size_t>(block)] = true;
    }
  }
  if (res.iterations >= max_iter) throw NumericalError("active-set QP iteration limit exceeded");

  // Polish: solve the KKT system of the final working set directly.
  Matrix A;
  Vector b;
  working_matrix(A, b);
  auto fin = solve_equality(prob.H, prob.c, A, b);
  if (sys.max_violation(fin.x) <= feas_tol * 10) x = fin.x;
  res.x = x;
  res.y_eq = Vector::Zero(sys.A_eq.rows());
  for (Eigen::Index r = 0; r < me; ++r) res.y_eq(eq_rows[static_cast<std::size_t>(r)]) = fin.y(r);
  res.y_ge = Vector::Zero(mg);
  for (std::size_t j = 0; j < work.size(); ++j) res.y_ge(work[j]) = fin.y(me + static_cast<Eigen::Index>(j));
  res.active = work;
  std::sort(res.active.begin(), res.active.end());
  res.objective = 0.5 * x.dot(prob.H * x) + prob.c.dot(x);
  res.kkt = kkt_residuals(prob, res.x, res.y_eq, res.y_ge);
  return res;
}

}  // namespace drpanel::qp
