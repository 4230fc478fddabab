#pragma once

#include <optional>
#include <string>
#include <vector>

#include "drpanel/assign_models.hpp"
#include "drpanel/error.hpp"
#include "drpanel/linprog.hpp"
#include "drpanel/panel.hpp"
#include "drpanel/quadprog.hpp"

namespace drpanel {

/// Population weight sets on a finite support.
enum class WeightSetKind { outc, design, dr };

std::string to_string(WeightSetKind kind);
WeightSetKind parse_weight_set(const std::string& text);

enum class RowTag { normalization, row_sum, column_sum, conditional_sum, treated_nonneg };

std::string to_string(RowTag tag);

/// Linear constraints over the K*T weight vector, cell (k, t) at index k*T + t.
struct ConstraintSystem {
  WeightSetKind kind = WeightSetKind::outc;
  Eigen::Index n_rows = 0;
  Eigen::Index n_periods = 0;
  lp::LinearSystem system;
  std::vector<RowTag> eq_tags;
  std::vector<RowTag> ge_tags;

  [[nodiscard]] Eigen::Index n_vars() const { return n_rows * n_periods; }
  [[nodiscard]] static Vector flatten(const Matrix& weights);
  [[nodiscard]] Matrix unflatten(const Vector& x) const;
  /// Largest violation at the given weights, optionally restricted to one tag.
  [[nodiscard]] double max_violation(const Matrix& weights, std::optional<RowTag> tag = std::nullopt) const;
};

/// Population two-way fixed-effects weights: the double-demeaned treatment
/// scaled so that (1/T) sum_k pi_k sum_t w_kt W_kt = 1.
WeightTable fe_weights(const AssignmentSupport& support);

/// pi-conditional means of the weights within each stratum, per period.
struct AggregatedWeights {
  std::vector<std::string> labels;
  Vector stratum_probs;
  Matrix means;  ///< n_strata x T
};

AggregatedWeights aggregate_weights(const AssignmentSupport& support, const WeightTable& weights,
                                    const SufficientStatistic& stat);

void write_aggregated_table(std::ostream& out, const AggregatedWeights& agg, int digits = 6);

ConstraintSystem build_constraints(const AssignmentSupport& support, WeightSetKind kind,
                                   const SufficientStatistic* stat = nullptr);

/// One 2x2 submatrix certifying a nonempty weight set.
struct PatternMatch {
  int pattern = 0;  ///< 1..3 for outc (W1, W2, W3 in that order), 1..2 for dr ([[0,1],[1,0]], [[0,1],[0,0]])
  Eigen::Index row_a = 0, row_b = 0;
  Eigen::Index period_a = 0, period_b = 0;
  std::optional<int> stratum;
};

struct FeasibilityReport {
  WeightSetKind kind = WeightSetKind::outc;
  bool nonempty = false;        ///< LP verdict
  bool combinatorial = false;   ///< pattern-scan verdict
  std::optional<WeightTable> witness;
  std::vector<PatternMatch> matched_patterns;
  std::optional<int> stratum;   ///< stratum of the first match (design/dr)
  double witness_violation = 0.0;

  [[nodiscard]] bool consistent() const { return nonempty == combinatorial; }
  [[nodiscard]] std::string summary(const AssignmentSupport& support) const;
};

class InfeasibleError : public NumericalError {
 public:
  InfeasibleError(const std::string& what, FeasibilityReport report)
      : NumericalError(what), report_(std::move(report)) {}
  [[nodiscard]] const FeasibilityReport& report() const { return report_; }

 private:
  FeasibilityReport report_;
};

/// Pattern scan only. outc: some row pair / period pair forms W1, W2 or W3 up to
/// permutation; dr: such a pair within one stratum forms [[0,1],[1,0]] or [[0,1],[0,0]];
/// design: some stratum holds at least two rows.
std::vector<PatternMatch> find_patterns(const AssignmentSupport& support, WeightSetKind kind,
                                        const SufficientStatistic* stat = nullptr, bool first_only = false);

FeasibilityReport check_feasibility(const AssignmentSupport& support, WeightSetKind kind,
                                    const SufficientStatistic* stat = nullptr);

struct MinNormResult {
  WeightTable weights;
  double objective = 0.0;  ///< sum_k pi_k sum_t w_kt^2
  qp::KktResiduals kkt;
  int iterations = 0;
};

/// Minimizer of sum_{k,t} pi_k w_kt^2 over the constraint set.
/// Throws InfeasibleError (with the feasibility report) when the set is empty.
MinNormResult solve_min_norm(const AssignmentSupport& support, const ConstraintSystem& system);

}  // namespace drpanel
