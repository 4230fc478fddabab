#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "drpanel/config.hpp"
#include "drpanel/estimator.hpp"
#include "drpanel/statistics.hpp"

namespace drpanel {

enum class AssignmentModel { fe_confounded, static_logit, markov };
enum class OutcomeModel { two_way_fe, stratum_model, covariate_general };
enum class EffectModel { constant, heterogeneous };

std::string to_string(AssignmentModel m);
std::string to_string(OutcomeModel m);
std::string to_string(EffectModel m);

/// Data-generating process. U_i ~ N(0, 1) throughout; t runs 1..T.
///   fe_confounded        W_it = 1{U_i + lambda_t + e_it > 0}, e_it ~ N(0, 1)
///   static_logit         P(W_it = 1 | U) = logistic(U_i + lambda_t)
///   markov               P(W_it = 1 | U, W_it-1) = logistic(U_i + gamma W_it-1), W_i1 ~ logistic(U_i)
///   two_way_fe           Y_it(0) = U_i + t/2 + eps_it
///   stratum_model        Y_it(0) = c t Wbar_i^2 + U_i + eps_it
///   covariate_general  Y_it(0) = t/2 + (t/T) X_i + c t Wbar_i^2 + U_i + eps_it, X_i = U_i + N(0, 1)
///   constant             tau_it = tau
///   heterogeneous        tau_it = tau + b (Wbar_i - 1/2) + N(0, het_sd^2)
struct DgpSpec {
  AssignmentModel assignment = AssignmentModel::static_logit;
  OutcomeModel outcome = OutcomeModel::stratum_model;
  EffectModel effect = EffectModel::constant;
  Eigen::Index n = 2000;
  Eigen::Index periods = 3;
  double tau = 1.0;
  double het_slope = 2.0;
  double het_sd = 0.5;
  double noise = 1.0;
  double h_scale = 2.0;
  /// Per-period assignment intercepts; empty means evenly spaced on [-0.5, 0.5].
  std::vector<double> lambda;
  double markov_gamma = 1.0;
  std::uint64_t seed = 1;
  std::string stat = "mean";
  std::string basis = "stratum-by-period";

  static DgpSpec from(const KeyValueConfig& cfg);
  void validate() const;
  [[nodiscard]] Vector assignment_intercepts() const;
};

struct SimulatedPanel {
  PanelDataset data;
  Vector latents;
  Matrix noise;        ///< eps_it
  Matrix effect;       ///< tau_it
  Matrix cond_effect;  ///< E[tau_it | W_i, X_i]
};

/// Replicate `replicate` of the DGP; deterministic in (spec.seed, replicate).
SimulatedPanel simulate_dataset(const DgpSpec& spec, int replicate);

enum class EstimatorKind { dr, fe };
std::string to_string(EstimatorKind k);
std::vector<EstimatorKind> parse_estimators(const std::string& text);

struct ExperimentOptions {
  int reps = 500;
  std::vector<EstimatorKind> estimators{EstimatorKind::dr, EstimatorKind::fe};
  int bootstrap = 0;
  double level = 0.95;
  int threads = 0;
  SolverConfig solver;

  static ExperimentOptions from(const KeyValueConfig& cfg);
};

struct ReplicateRow {
  int replicate = 0;
  EstimatorKind estimator = EstimatorKind::dr;
  bool ok = false;
  double tau_hat = 0.0;
  double target = 0.0;        ///< tau, or tau_emp under its own weights
  double sigma2_hat = 0.0;    ///< NaN without bootstrap
  int covered = -1;           ///< -1 without bootstrap
  /// |tau_hat - tau_emp - (noise term + effect-deviation term)|; NaN for fe.
  double decomposition_gap = 0.0;
};

struct EstimatorSummary {
  EstimatorKind estimator = EstimatorKind::dr;
  int n_ok = 0;
  int n_failed = 0;
  bool flagged = false;  ///< failure share above 10%
  double mean_bias = 0.0;
  double mc_sd = 0.0;    ///< sd of tau_hat - target
  double mc_se = 0.0;    ///< mc_sd / sqrt(n_ok)
  double rmse = 0.0;
  double sd_tau_hat = 0.0;
  double mean_sigma2 = 0.0;  ///< NaN without bootstrap
  double coverage = 0.0;     ///< NaN without bootstrap
  stats::AndersonDarling normality;  ///< NaN with fewer than 8 successful replicates
};

struct ExperimentResult {
  DgpSpec spec;
  ExperimentOptions options;
  std::vector<ReplicateRow> rows;
  std::vector<EstimatorSummary> summaries;

  [[nodiscard]] const EstimatorSummary& summary(EstimatorKind k) const;
};

ExperimentResult run_experiment(const DgpSpec& spec, const ExperimentOptions& options);

void write_results_csv(std::ostream& out, const ExperimentResult& result);
void write_summary_table(std::ostream& out, const ExperimentResult& result);

}  // namespace drpanel
