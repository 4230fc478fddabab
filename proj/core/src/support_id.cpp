#include "drpanel/support_id.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include "drpanel/csv.hpp"

namespace drpanel {
namespace {

constexpr Eigen::Index kMaxPeriods = 16;

void require_scan_size(const AssignmentSupport& support) {
  if (support.n_periods() > kMaxPeriods) {
    throw ValidationError("supports with more than 16 periods are not supported");
  }
}

const SufficientStatistic& require_stat(const AssignmentSupport& support, WeightSetKind kind,
                                        const SufficientStatistic* stat) {
  if (!stat) throw ValidationError(to_string(kind) + " weights need a sufficient statistic");
  if (stat->size() != support.size()) throw ValidationError("statistic must have one value per support row");
  return *stat;
}

// Accumulates rows, dropping all-zero rows that hold trivially and exact duplicates.
class RowCollector {
 public:
  explicit RowCollector(Eigen::Index n) : n_(n) {}

  void add(const Vector& a, double b, RowTag tag, bool eq) {
    if ((a.array() == 0.0).all() && (eq ? b == 0.0 : b <= 0.0)) return;
    std::vector<double> key(a.data(), a.data() + a.size());
    key.push_back(b);
    key.push_back(eq ? 1.0 : 0.0);
    if (!seen_.insert(key).second) return;
    (eq ? eq_ : ge_).push_back({a, b, tag});
  }

  void finish(ConstraintSystem& cs) const {
    auto fill = [&](const std::vector<Row>& rows, Matrix& A, Vector& b, std::vector<RowTag>& tags) {
      A.resize(static_cast<Eigen::Index>(rows.size()), n_);
      b.resize(static_cast<Eigen::Index>(rows.size()));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        A.row(static_cast<Eigen::Index>(r)) = rows[r].a.transpose();
        b(static_cast<Eigen::Index>(r)) = rows[r].b;
        tags.push_back(rows[r].tag);
      }
    };
    fill(eq_, cs.system.A_eq, cs.system.b_eq, cs.eq_tags);
    fill(ge_, cs.system.A_ge, cs.system.b_ge, cs.ge_tags);
  }

 private:
  struct Row {
    Vector a;
    double b;
    RowTag tag;
  };
  Eigen::Index n_;
  std::vector<Row> eq_, ge_;
  std::set<std::vector<double>> seen_;
};

// Classifies a 2x2 0/1 block; returns the outc pattern id (1..3) or 0.
int outc_pattern(int a, int b, int c, int d) {
  const int ones = a + b + c + d;
  if (ones == 1) return 1;
  if (ones == 3) return 2;
  if (ones == 2 && a == d && b == c) return 3;
  return 0;
}

// dr patterns: 1 = [[0,1],[1,0]] (diagonal pair), 2 = [[0,1],[0,0]] (single one).
int dr_pattern(int a, int b, int c, int d) {
  const int ones = a + b + c + d;
  if (ones == 2 && a == d && b == c) return 1;
  if (ones == 1) return 2;
  return 0;
}

}  // namespace

std::string to_string(WeightSetKind kind) {
  switch (kind) {
    case WeightSetKind::outc: return "outc";
    case WeightSetKind::design: return "design";
    case WeightSetKind::dr: return "dr";
  }
  return "unknown";
}

WeightSetKind parse_weight_set(const std::string& text) {
  if (text == "outc") return WeightSetKind::outc;
  if (text == "design") return WeightSetKind::design;
  if (text == "dr") return WeightSetKind::dr;
  throw ValidationError("unknown weight set '" + text + "' (expected outc, design or dr)");
}

std::string to_string(RowTag tag) {
  switch (tag) {
    case RowTag::normalization: return "normalization";
    case RowTag::row_sum: return "row-sum";
    case RowTag::column_sum: return "column-sum";
    case RowTag::conditional_sum: return "conditional-sum";
    case RowTag::treated_nonneg: return "treated-nonneg";
  }
  return "unknown";
}

Vector ConstraintSystem::flatten(const Matrix& weights) {
  Vector x(weights.size());
  for (Eigen::Index k = 0; k < weights.rows(); ++k) {
    for (Eigen::Index t = 0; t < weights.cols(); ++t) x(k * weights.cols() + t) = weights(k, t);
  }
  return x;
}

Matrix ConstraintSystem::unflatten(const Vector& x) const {
  Matrix w(n_rows, n_periods);
  for (Eigen::Index k = 0; k < n_rows; ++k) {
    for (Eigen::Index t = 0; t < n_periods; ++t) w(k, t) = x(k * n_periods + t);
  }
  return w;
}

double ConstraintSystem::max_violation(const Matrix& weights, std::optional<RowTag> tag) const {
  const Vector x = flatten(weights);
  double v = 0.0;
  for (Eigen::Index r = 0; r < system.A_eq.rows(); ++r) {
    if (tag && eq_tags[static_cast<std::size_t>(r)] != *tag) continue;
    v = std::max(v, std::abs(system.A_eq.row(r).dot(x) - system.b_eq(r)));
  }
  for (Eigen::Index r = 0; r < system.A_ge.rows(); ++r) {
    if (tag && ge_tags[static_cast<std::size_t>(r)] != *tag) continue;
    v = std::max(v, system.b_ge(r) - system.A_ge.row(r).dot(x));
  }
  return v;
}

WeightTable fe_weights(const AssignmentSupport& support) {
  const auto& pi = support.probs();
  const Matrix w = support.paths().cast<double>();
  const auto periods = static_cast<double>(w.cols());
  const Vector row_mean = w.rowwise().mean();
  const Eigen::RowVectorXd col_mean = pi.transpose() * w;
  const double grand = col_mean.mean();
  Matrix demeaned = w;
  demeaned.colwise() -= row_mean;
  demeaned.rowwise() -= col_mean;
  demeaned.array() += grand;
  const double scale = (pi.asDiagonal() * demeaned.cwiseProduct(w)).sum() / periods;
  if (std::abs(scale) <= 1e-12) {
    throw IdentificationError("FE coefficient not identified: two-way demeaned treatment has zero variance");
  }
  return WeightTable(demeaned / scale, WeightLevel::population);
}

AggregatedWeights aggregate_weights(const AssignmentSupport& support, const WeightTable& weights,
                                    const SufficientStatistic& stat) {
  if (stat.size() != support.size() || weights.weights.rows() != support.size()) {
    throw ValidationError("weights and statistic must cover every support row");
  }
  AggregatedWeights out;
  out.means = Matrix::Zero(stat.n_strata(), weights.weights.cols());
  out.stratum_probs = Vector::Zero(stat.n_strata());
  for (int s = 0; s < stat.n_strata(); ++s) {
    out.labels.push_back(stat.label(s));
    for (auto k : stat.members(s)) out.stratum_probs(s) += support.probs()(k);
    for (auto k : stat.members(s)) {
      out.means.row(s) += (support.probs()(k) / out.stratum_probs(s)) * weights.weights.row(k);
    }
  }
  return out;
}

void write_aggregated_table(std::ostream& out, const AggregatedWeights& agg, int digits) {
  const int width = digits + 7;
  out << std::right << std::setw(12) << "S" << std::setw(width) << "P(S)";
  for (Eigen::Index t = 0; t < agg.means.cols(); ++t) out << std::setw(width) << ("E[omega_" + std::to_string(t + 1) + "|S]");
  out << '\n';
  for (Eigen::Index s = 0; s < agg.means.rows(); ++s) {
    out << std::setw(12) << agg.labels[static_cast<std::size_t>(s)] << std::setw(width)
        << csv::format_sig(agg.stratum_probs(s), digits);
    for (Eigen::Index t = 0; t < agg.means.cols(); ++t) out << std::setw(width) << csv::format_sig(csv::snap_zero(agg.means(s, t)), digits);
    out << '\n';
  }
}

ConstraintSystem build_constraints(const AssignmentSupport& support, WeightSetKind kind,
                                   const SufficientStatistic* stat) {
  const auto K = support.size();
  const auto T = support.n_periods();
  const auto& pi = support.probs();
  const auto& W = support.paths();
  const SufficientStatistic* strata = nullptr;
  if (kind != WeightSetKind::outc) strata = &require_stat(support, kind, stat);

  ConstraintSystem cs;
  cs.kind = kind;
  cs.n_rows = K;
  cs.n_periods = T;
  const auto n = K * T;
  RowCollector rows(n);
  auto cell = [T](Eigen::Index k, Eigen::Index t) { return k * T + t; };

  Vector norm = Vector::Zero(n);
  for (Eigen::Index k = 0; k < K; ++k) {
    for (Eigen::Index t = 0; t < T; ++t) norm(cell(k, t)) = pi(k) * W(k, t) / static_cast<double>(T);
  }
  rows.add(norm, 1.0, RowTag::normalization, true);

  if (kind == WeightSetKind::outc || kind == WeightSetKind::dr) {
    for (Eigen::Index k = 0; k < K; ++k) {
      Vector a = Vector::Zero(n);
      for (Eigen::Index t = 0; t < T; ++t) a(cell(k, t)) = 1.0 / static_cast<double>(T);
      rows.add(a, 0.0, RowTag::row_sum, true);
    }
  }
  if (kind == WeightSetKind::outc) {
    for (Eigen::Index t = 0; t < T; ++t) {
      Vector a = Vector::Zero(n);
      for (Eigen::Index k = 0; k < K; ++k) a(cell(k, t)) = pi(k);
      rows.add(a, 0.0, RowTag::column_sum, true);
    }
    for (Eigen::Index k = 0; k < K; ++k) {
      Vector a = Vector::Zero(n);
      for (Eigen::Index t = 0; t < T; ++t) a(cell(k, t)) = W(k, t) / static_cast<double>(T);
      rows.add(a, 0.0, RowTag::treated_nonneg, false);
    }
  } else {
    for (int s = 0; s < strata->n_strata(); ++s) {
      for (Eigen::Index t = 0; t < T; ++t) {
        Vector sum = Vector::Zero(n);
        Vector treated = Vector::Zero(n);
        for (auto k : strata->members(s)) {
          sum(cell(k, t)) = pi(k);
          treated(cell(k, t)) = pi(k) * W(k, t);
        }
        rows.add(sum, 0.0, RowTag::conditional_sum, true);
        if (kind == WeightSetKind::design) rows.add(treated, 0.0, RowTag::treated_nonneg, false);
      }
    }
    if (kind == WeightSetKind::dr) {
      for (Eigen::Index k = 0; k < K; ++k) {
        for (Eigen::Index t = 0; t < T; ++t) {
          if (!W(k, t)) continue;
          Vector a = Vector::Zero(n);
          a(cell(k, t)) = 1.0;
          rows.add(a, 0.0, RowTag::treated_nonneg, false);
        }
      }
    }
  }
  rows.finish(cs);
  return cs;
}

std::vector<PatternMatch> find_patterns(const AssignmentSupport& support, WeightSetKind kind,
                                        const SufficientStatistic* stat, bool first_only) {
  require_scan_size(support);
  const auto K = support.size();
  const auto T = support.n_periods();
  const auto& W = support.paths();
  std::vector<PatternMatch> out;
  if (kind == WeightSetKind::design) {
    const auto& st = require_stat(support, kind, stat);
    for (int s = 0; s < st.n_strata(); ++s) {
      const auto& m = st.members(s);
      if (m.size() < 2) continue;
      // Two distinct rows differ in some period; report the first such pair.
      for (Eigen::Index t = 0; t < T; ++t) {
        if (W(m[0], t) != W(m[1], t)) {
          out.push_back({0, m[0], m[1], t, t, s});
          break;
        }
      }
      if (first_only) return out;
    }
    return out;
  }
  const SufficientStatistic* strata = kind == WeightSetKind::dr ? &require_stat(support, kind, stat) : nullptr;
  for (Eigen::Index a = 0; a < K; ++a) {
    for (Eigen::Index b = a + 1; b < K; ++b) {
      if (strata && strata->stratum_of(a) != strata->stratum_of(b)) continue;
      for (Eigen::Index t = 0; t < T; ++t) {
        for (Eigen::Index u = t + 1; u < T; ++u) {
          const int id = kind == WeightSetKind::outc ? outc_pattern(W(a, t), W(a, u), W(b, t), W(b, u))
                                                    : dr_pattern(W(a, t), W(a, u), W(b, t), W(b, u));
          if (!id) continue;
          PatternMatch m{id, a, b, t, u, std::nullopt};
          if (strata) m.stratum = strata->stratum_of(a);
          out.push_back(m);
          if (first_only) return out;
        }
      }
    }
  }
  return out;
}

FeasibilityReport check_feasibility(const AssignmentSupport& support, WeightSetKind kind,
                                    const SufficientStatistic* stat) {
  require_scan_size(support);
  FeasibilityReport rep;
  rep.kind = kind;
  rep.matched_patterns = find_patterns(support, kind, stat);
  rep.combinatorial = !rep.matched_patterns.empty();
  if (rep.combinatorial) rep.stratum = rep.matched_patterns.front().stratum;
  const auto cs = build_constraints(support, kind, stat);
  const auto lp_res = lp::find_feasible_point(cs.system);
  rep.nonempty = lp_res.feasible;
  if (lp_res.feasible) {
    rep.witness = WeightTable(cs.unflatten(lp_res.point), WeightLevel::population);
    rep.witness_violation = cs.max_violation(rep.witness->weights);
  }
  return rep;
}

std::string FeasibilityReport::summary(const AssignmentSupport& support) const {
  std::ostringstream os;
  os << to_string(kind) << " weight set is " << (nonempty ? "nonempty" : "empty") << " (LP), pattern scan "
     << (combinatorial ? "found " + std::to_string(matched_patterns.size()) + " certifying submatrices" : "found none");
  if (!consistent()) os << " [DISAGREEMENT]";
  if (!matched_patterns.empty()) {
    const auto& m = matched_patterns.front();
    os << "; e.g. rows " << support.path_label(m.row_a) << "/" << support.path_label(m.row_b) << " periods "
       << m.period_a + 1 << "," << m.period_b + 1;
    if (m.stratum) os << " in stratum " << *m.stratum;
  }
  return os.str();
}

MinNormResult solve_min_norm(const AssignmentSupport& support, const ConstraintSystem& system) {
  if (system.n_rows != support.size() || system.n_periods != support.n_periods()) {
    throw ValidationError("constraint system does not match the support");
  }
  const auto n = system.n_vars();
  qp::QuadraticProgram prob;
  prob.H = Matrix::Zero(n, n);
  for (Eigen::Index k = 0; k < system.n_rows; ++k) {
    for (Eigen::Index t = 0; t < system.n_periods; ++t) {
      prob.H(k * system.n_periods + t, k * system.n_periods + t) = 2.0 * support.probs()(k);
    }
  }
  prob.c = Vector::Zero(n);
  prob.constraints = system.system;
  const auto lp_res = lp::find_feasible_point(system.system);
  if (!lp_res.feasible) {
    FeasibilityReport rep;
    rep.kind = system.kind;
    rep.nonempty = false;
    throw InfeasibleError(to_string(system.kind) + " weight set is empty", rep);
  }
  auto res = qp::solve(prob);
  MinNormResult out{WeightTable(system.unflatten(res.x), WeightLevel::population), 0.0, res.kkt, res.iterations};
  out.objective = (support.probs().asDiagonal() * out.weights.weights.cwiseAbs2()).sum();
  return out;
}

}  // namespace drpanel
