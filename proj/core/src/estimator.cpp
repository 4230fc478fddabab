#include "drpanel/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "drpanel/csv.hpp"
#include "drpanel/linprog.hpp"
#include "drpanel/quadprog.hpp"

namespace drpanel {
namespace {

constexpr double kDamping = 1e-8;
constexpr double kArmijo = 1e-4;
constexpr int kMaxHalvings = 60;
constexpr Eigen::Index kMaxOverlapCells = 4000;

void check_shapes(const BinaryMatrix& w, const Matrix& psi) {
  if (psi.rows() != w.rows() * w.cols()) {
    throw ValidationError("basis matrix must have one row per (unit, period) cell");
  }
  if (!psi.allFinite()) throw ValidationError("non-finite basis value");
}

// W_t - lambda_t - psi_t'gamma for one unit; lambda_t(0) is pinned to zero.
Vector partial_residual(const IntVector& w, const Matrix& psi_rows, const Vector& lambda_t, const Vector& gamma) {
  Vector h(w.size());
  for (Eigen::Index t = 0; t < w.size(); ++t) {
    h(t) = static_cast<double>(w(t)) - lambda_t(t);
    if (gamma.size() > 0) h(t) -= psi_rows.row(t).dot(gamma);
  }
  return h;
}

double unnormalized_weight(double r, int w) { return w ? std::max(r, 0.0) : r; }

}  // namespace

double rho(double x, int z) {
  if (z) return x > 0.0 ? x * x : 0.0;
  return x * x;
}

double rho_derivative(double x, int z) {
  if (z) return x > 0.0 ? 2.0 * x : 0.0;
  return 2.0 * x;
}

double unit_intercept(const Vector& h, const IntVector& w) {
  if (h.size() != w.size() || h.size() == 0) throw ValidationError("unit_intercept: h and w must have equal positive length");
  double sum = 0.0;
  Eigen::Index count = 0;
  std::vector<double> treated;
  for (Eigen::Index t = 0; t < h.size(); ++t) {
    if (w(t)) {
      treated.push_back(h(t));
    } else {
      sum += h(t);
      ++count;
    }
  }
  if (count == 0) return h.maxCoeff();
  std::sort(treated.begin(), treated.end(), std::greater<>());
  double g = sum / static_cast<double>(count);
  for (double v : treated) {
    if (v < g) break;
    sum += v;
    ++count;
    g = sum / static_cast<double>(count);
  }
  return g;
}

SolverConfig SolverConfig::from(const KeyValueConfig& cfg) {
  SolverConfig c;
  c.tol_obj = cfg.get_double("tol_obj", c.tol_obj);
  c.tol_grad = cfg.get_double("tol_grad", c.tol_grad);
  c.max_iter = static_cast<int>(cfg.get_int("max_iter", c.max_iter));
  c.min_normalizer = cfg.get_double("min_normalizer", c.min_normalizer);
  c.basis = cfg.get_or("basis", c.basis);
  if (!(c.tol_obj >= 0.0) || !(c.tol_grad > 0.0) || c.max_iter < 1 || !(c.min_normalizer >= 0.0)) {
    throw ValidationError("solver config: tolerances must be nonnegative (tol_grad positive) and max_iter >= 1");
  }
  return c;
}

SolverConfig SolverConfig::load(const std::string& path) { return from(KeyValueConfig::load(path)); }

DualObjective::DualObjective(const BinaryMatrix& treatments, const Matrix& psi, const Vector& multiplicity)
    : periods_(treatments.cols()), basis_(psi.cols()) {
  check_shapes(treatments, psi);
  const auto n = treatments.rows();
  std::map<std::vector<double>, std::size_t> index;
  group_of_.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<double> key;
    key.reserve(static_cast<std::size_t>(periods_ * (1 + basis_)));
    for (Eigen::Index t = 0; t < periods_; ++t) key.push_back(treatments(i, t));
    for (Eigen::Index t = 0; t < periods_; ++t) {
      for (Eigen::Index j = 0; j < basis_; ++j) key.push_back(psi(i * periods_ + t, j));
    }
    auto [it, fresh] = index.emplace(std::move(key), groups_.size());
    if (fresh) {
      Group g;
      g.w = treatments.row(i).transpose();
      g.psi = psi.middleRows(i * periods_, periods_);
      groups_.push_back(std::move(g));
    }
    groups_[it->second].members.push_back(i);
    group_of_[static_cast<std::size_t>(i)] = static_cast<Eigen::Index>(it->second);
  }
  set_multiplicity(multiplicity.size() ? multiplicity : Vector::Ones(n));
}

void DualObjective::set_multiplicity(const Vector& multiplicity) {
  if (multiplicity.size() != n_units()) throw ValidationError("multiplicity must have one entry per unit");
  if ((multiplicity.array() < 0.0).any() || !multiplicity.allFinite()) {
    throw ValidationError("multiplicities must be finite and nonnegative");
  }
  for (auto& g : groups_) {
    g.weight = 0.0;
    for (auto i : g.members) g.weight += multiplicity(i);
  }
  multiplicity_ = multiplicity;
  total_ = multiplicity.sum();
  if (!(total_ > 0.0)) throw ValidationError("multiplicities must have a positive total");
}

Vector DualObjective::pack(const Vector& lambda_t, const Vector& gamma) const {
  Vector theta(n_params());
  theta.head(periods_ - 1) = lambda_t.tail(periods_ - 1);
  theta.tail(basis_) = gamma;
  return theta;
}

void DualObjective::unpack(const Vector& theta, Vector& lambda_t, Vector& gamma) const {
  if (theta.size() != n_params()) throw ValidationError("parameter vector has the wrong length");
  lambda_t.resize(periods_);
  lambda_t(0) = 0.0;
  lambda_t.tail(periods_ - 1) = theta.head(periods_ - 1);
  gamma = theta.tail(basis_);
}

Vector DualObjective::group_h(const Group& g, const Vector& theta) const {
  Vector lambda_t, gamma;
  unpack(theta, lambda_t, gamma);
  return partial_residual(g.w, g.psi, lambda_t, gamma);
}

double DualObjective::value(const Vector& theta) const { return evaluate(theta, nullptr, nullptr); }

double DualObjective::evaluate(const Vector& theta, Vector* grad, Matrix* hess) const {
  Vector lambda_t, gamma;
  unpack(theta, lambda_t, gamma);
  const auto p = n_params();
  if (grad) grad->setZero(p);
  if (hess) hess->setZero(p, p);
  double f = 0.0;
  Matrix z(periods_, p);
  for (const auto& g : groups_) {
    if (g.weight == 0.0) continue;
    const Vector h = partial_residual(g.w, g.psi, lambda_t, gamma);
    const double a = unit_intercept(h, g.w);
    const double c = g.weight / (total_ * static_cast<double>(periods_));
    double part = 0.0;
    for (Eigen::Index t = 0; t < periods_; ++t) part += rho(h(t) - a, g.w(t));
    f += c * part;
    if (!grad && !hess) continue;
    // Row t of z is d(lambda_t + gamma'psi_t)/d theta.
    z.setZero();
    for (Eigen::Index t = 1; t < periods_; ++t) z(t, t - 1) = 1.0;
    if (basis_ > 0) z.rightCols(basis_) = g.psi;
    if (grad) {
      for (Eigen::Index t = 0; t < periods_; ++t) {
        const double d = rho_derivative(h(t) - a, g.w(t));
        if (d != 0.0) *grad -= c * d * z.row(t).transpose();
      }
    }
    if (hess) {
      std::vector<Eigen::Index> active;
      for (Eigen::Index t = 0; t < periods_; ++t) {
        if (!g.w(t) || h(t) - a > 0.0) active.push_back(t);
      }
      if (active.empty()) continue;
      Matrix za(static_cast<Eigen::Index>(active.size()), p);
      for (std::size_t k = 0; k < active.size(); ++k) za.row(static_cast<Eigen::Index>(k)) = z.row(active[k]);
      za.rowwise() -= za.colwise().mean();
      hess->noalias() += 2.0 * c * za.transpose() * za;
    }
  }
  return f;
}

double DualObjective::loss(const Vector& lambda_t, const Vector& lambda_i, const Vector& gamma) const {
  if (lambda_t.size() != periods_ || lambda_i.size() != n_units() || gamma.size() != basis_) {
    throw ValidationError("loss: parameter dimensions do not match the problem");
  }
  double f = 0.0;
  for (const auto& g : groups_) {
    if (g.weight == 0.0) continue;
    const Vector h = partial_residual(g.w, g.psi, lambda_t, gamma);
    for (auto i : g.members) {
      double part = 0.0;
      for (Eigen::Index t = 0; t < periods_; ++t) part += rho(h(t) - lambda_i(i), g.w(t));
      f += multiplicity_(i) * part;
    }
  }
  return f / (total_ * static_cast<double>(periods_));
}

Vector DualObjective::unit_intercepts(const Vector& theta) const {
  Vector out(n_units());
  for (const auto& g : groups_) {
    const double a = unit_intercept(group_h(g, theta), g.w);
    for (auto i : g.members) out(i) = a;
  }
  return out;
}

Matrix DualObjective::residuals(const Vector& theta) const {
  Matrix r(n_units(), periods_);
  for (const auto& g : groups_) {
    const Vector h = group_h(g, theta);
    const double a = unit_intercept(h, g.w);
    for (auto i : g.members) r.row(i) = (h.array() - a).matrix().transpose();
  }
  return r;
}

DualSolution fit_dual(const DualObjective& objective, const SolverConfig& config, const DualSolution* warm) {
  const auto p = objective.n_params();
  Vector theta = Vector::Zero(p);
  if (warm) theta = objective.pack(warm->lambda_t, warm->gamma);
  DualSolution sol;
  Vector grad(p);
  Matrix hess(p, p);
  double f = objective.evaluate(theta, &grad, &hess);
  sol.trace.push_back(f);
  double last_rel = 0.0;
  double gnorm = grad.lpNorm<Eigen::Infinity>();
  int iter = 0;
  for (; iter < config.max_iter; ++iter) {
    if (gnorm <= config.tol_grad && last_rel < config.tol_obj) {
      sol.converged = true;
      break;
    }
    Matrix damped = hess;
    damped.diagonal().array() += kDamping;
    Vector dir = damped.ldlt().solve(-grad);
    const bool newton_ok = dir.allFinite() && grad.dot(dir) < 0.0;
    if (!newton_ok) dir = -grad;

    auto line_search = [&](const Vector& d, Vector& next, double& f_next) {
      const double slope = grad.dot(d);
      double step = 1.0;
      for (int k = 0; k < kMaxHalvings; ++k, step *= 0.5) {
        next = theta + step * d;
        f_next = objective.value(next);
        if (f_next <= f + kArmijo * step * slope) return true;
      }
      return false;
    };
    Vector next;
    double f_next = f;
    bool accepted = line_search(dir, next, f_next);
    if (!accepted && newton_ok) accepted = line_search(-grad, next, f_next);
    if (!accepted) break;

    last_rel = (f - f_next) / std::max(std::abs(f), std::numeric_limits<double>::min());
    theta = next;
    f = objective.evaluate(theta, &grad, &hess);
    gnorm = grad.lpNorm<Eigen::Infinity>();
    sol.trace.push_back(f);
  }
  if (!sol.converged && gnorm <= config.tol_grad) sol.converged = true;
  sol.iterations = iter;
  sol.grad_norm = gnorm;
  objective.unpack(theta, sol.lambda_t, sol.gamma);
  sol.lambda_i = objective.unit_intercepts(theta);
  sol.objective = f;
  if (!sol.converged) {
    std::ostringstream os;
    os << "dual solver did not converge after " << iter << " iterations (gradient norm "
       << csv::format_sig(gnorm, 6) << ", objective " << csv::format_sig(f, 12) << ")";
    throw NumericalError(os.str());
  }
  return sol;
}

DualSolution fit_dual(const PanelDataset& data, const BasisMatrix& basis, const SolverConfig& config) {
  return fit_dual(DualObjective(data.treatments(), basis.values), config);
}

DualSolution fit_dual(const PanelDataset& data, const BasisSpec& basis, const SufficientStatistic& stat,
                      const SolverConfig& config) {
  return fit_dual(data, basis.evaluate(data, stat), config);
}

EstimateResult extract_weights(const PanelDataset& data, const BasisMatrix& basis, const DualSolution& sol,
                               const SolverConfig& config, const Vector* multiplicity) {
  const auto n = data.n_units();
  const auto periods = data.n_periods();
  const auto& w = data.treatments();
  check_shapes(w, basis.values);
  if (sol.lambda_t.size() != periods || sol.lambda_i.size() != n || sol.gamma.size() != basis.dim()) {
    throw ValidationError("dual solution does not match the dataset");
  }
  if (multiplicity && multiplicity->size() != n) throw ValidationError("multiplicity must have one entry per unit");
  Matrix omega(n, periods);
  double treated = 0.0;
  double mass = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const IntVector wi = w.row(i).transpose();
    const Vector h = partial_residual(wi, basis.values.middleRows(i * periods, periods), sol.lambda_t, sol.gamma);
    const double m = multiplicity ? (*multiplicity)(i) : 1.0;
    mass += m;
    for (Eigen::Index t = 0; t < periods; ++t) {
      omega(i, t) = unnormalized_weight(h(t) - sol.lambda_i(i), wi(t));
      if (wi(t)) treated += m * omega(i, t);
    }
  }
  const double cells = mass * static_cast<double>(periods);
  EstimateResult out;
  out.normalizer = treated / cells;
  if (!(out.normalizer > config.min_normalizer)) {
    std::ostringstream os;
    os << "no effective overlap: treated mean of the unnormalized weights is " << csv::format_sig(out.normalizer, 6)
       << " (<= " << csv::format_sig(config.min_normalizer, 6)
       << "); an additive score lambda_i + mu_t + psi'gamma separates treated from control cells";
    throw NoOverlapError(os.str());
  }
  omega /= out.normalizer;
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = multiplicity ? (*multiplicity)(i) : 1.0;
    if (m != 0.0) total += m * omega.row(i).dot(data.outcomes().row(i));
  }
  out.tau_hat = total / cells;
  out.weights = WeightTable(std::move(omega), WeightLevel::sample);
  out.diagnostics = sol;
  return out;
}

EstimateResult estimate(const PanelDataset& data, const BasisMatrix& basis, const SolverConfig& config) {
  return extract_weights(data, basis, fit_dual(data, basis, config), config);
}

OverlapReport check_overlap(const PanelDataset& data, const BasisMatrix& basis) {
  return check_overlap(data.treatments(), basis.values);
}

OverlapReport check_overlap(const BinaryMatrix& treatments, const Matrix& psi) {
  check_shapes(treatments, psi);
  const auto n = treatments.rows();
  const auto periods = treatments.cols();
  const auto p = psi.cols();
  std::map<std::vector<double>, Eigen::Index> index;
  std::vector<Eigen::Index> group_of(static_cast<std::size_t>(n));
  std::vector<Eigen::Index> rep_unit;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<double> key;
    for (Eigen::Index t = 0; t < periods; ++t) key.push_back(treatments(i, t));
    for (Eigen::Index t = 0; t < periods; ++t) {
      for (Eigen::Index j = 0; j < p; ++j) key.push_back(psi(i * periods + t, j));
    }
    auto [it, fresh] = index.emplace(std::move(key), static_cast<Eigen::Index>(rep_unit.size()));
    if (fresh) rep_unit.push_back(i);
    group_of[static_cast<std::size_t>(i)] = it->second;
  }
  const auto groups = static_cast<Eigen::Index>(rep_unit.size());
  OverlapReport rep;
  if (groups * periods > kMaxOverlapCells) {
    rep.description = "separation search skipped: " + std::to_string(groups * periods) +
                      " distinct cells exceed the dense LP limit";
    return rep;
  }
  const auto vars = groups + periods + p;
  const auto treated_cells = (treatments.array() != 0).cast<Eigen::Index>().sum();
  lp::LinearSystem sys;
  Eigen::Index n_treated = 0;
  Eigen::Index n_control = 0;
  for (Eigen::Index g = 0; g < groups; ++g) {
    for (Eigen::Index t = 0; t < periods; ++t) (treatments(rep_unit[static_cast<std::size_t>(g)], t) ? n_treated : n_control)++;
  }
  sys.A_eq = Matrix::Zero(n_control, vars);
  sys.b_eq = Vector::Zero(n_control);
  sys.A_ge = Matrix::Zero(n_treated, vars);
  sys.b_ge = Vector::Ones(n_treated);
  Eigen::Index ce = 0;
  Eigen::Index ct = 0;
  for (Eigen::Index g = 0; g < groups; ++g) {
    const auto i = rep_unit[static_cast<std::size_t>(g)];
    for (Eigen::Index t = 0; t < periods; ++t) {
      Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(vars);
      row(g) = 1.0;
      row(groups + t) = 1.0;
      if (p > 0) row.tail(p) = psi.row(i * periods + t);
      if (treatments(i, t)) {
        sys.A_ge.row(ct++) = row;
      } else {
        sys.A_eq.row(ce++) = row;
      }
    }
  }
  if (sys.A_eq.rows() == 0) sys.A_eq.resize(0, vars);
  if (sys.A_ge.rows() == 0) sys.A_ge.resize(0, vars);
  const auto res = lp::find_feasible_point(sys);
  if (!res.feasible) {
    rep.description = "no separating score exists; balancing weights exist";
    return rep;
  }
  rep.overlap = false;
  rep.lambda_i.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) rep.lambda_i(i) = res.point(group_of[static_cast<std::size_t>(i)]);
  rep.mu_t = res.point.segment(groups, periods);
  rep.gamma = res.point.tail(p);
  std::ostringstream os;
  os << "separation certificate: the score lambda_i + mu_t + psi'gamma is 0 on all " << n * periods - treated_cells
     << " control cells and >= 1 on all " << treated_cells << " treated cells, so no balancing weights exist";
  rep.description = os.str();
  return rep;
}

WeightTable primal_weights(const BinaryMatrix& treatments, const Matrix& psi) {
  check_shapes(treatments, psi);
  const auto n = treatments.rows();
  const auto periods = treatments.cols();
  const auto vars = n * periods;
  qp::QuadraticProgram prob;
  prob.H = 2.0 * Matrix::Identity(vars, vars);
  prob.c = Vector::Zero(vars);
  const auto n_eq = n + periods + psi.cols() + 1;
  auto& sys = prob.constraints;
  sys.A_eq = Matrix::Zero(n_eq, vars);
  sys.b_eq = Vector::Zero(n_eq);
  const auto n_treated = (treatments.array() != 0).cast<Eigen::Index>().sum();
  sys.A_ge = Matrix::Zero(n_treated, vars);
  sys.b_ge = Vector::Zero(n_treated);
  Eigen::Index ge = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index t = 0; t < periods; ++t) {
      const auto cell = i * periods + t;
      sys.A_eq(i, cell) = 1.0;
      sys.A_eq(n + t, cell) = 1.0;
      for (Eigen::Index j = 0; j < psi.cols(); ++j) sys.A_eq(n + periods + j, cell) = psi(cell, j);
      if (treatments(i, t)) {
        sys.A_eq(n_eq - 1, cell) = 1.0 / static_cast<double>(vars);
        sys.A_ge(ge++, cell) = 1.0;
      }
    }
  }
  sys.b_eq(n_eq - 1) = 1.0;
  const auto res = qp::solve(prob);
  Matrix w(n, periods);
  for (Eigen::Index i = 0; i < n; ++i) w.row(i) = res.x.segment(i * periods, periods).transpose();
  return WeightTable(std::move(w), WeightLevel::sample);
}

Matrix two_way_fe_weights(const BinaryMatrix& treatments) {
  const Matrix w = treatments.cast<double>();
  Matrix d = w;
  d.colwise() -= w.rowwise().mean();
  d.rowwise() -= w.colwise().mean();
  d.array() += w.mean();
  const double scale = d.cwiseProduct(w).mean();
  if (std::abs(scale) <= 1e-12) {
    throw IdentificationError("FE coefficient not identified: two-way demeaned treatment has zero variance");
  }
  return d / scale;
}

double two_way_fe(const Matrix& outcomes, const BinaryMatrix& treatments) {
  if (outcomes.rows() != treatments.rows() || outcomes.cols() != treatments.cols()) {
    throw ValidationError("outcomes and treatments must have the same shape");
  }
  return two_way_fe_weights(treatments).cwiseProduct(outcomes).mean();
}

}  // namespace drpanel
