#pragma once

#include <optional>
#include <string>
#include <vector>

#include "drpanel/basis.hpp"
#include "drpanel/config.hpp"
#include "drpanel/error.hpp"
#include "drpanel/panel.hpp"

namespace drpanel {

/// rho_z(x) = x^2 (1 - z) + max(x, 0)^2 z
double rho(double x, int z);
double rho_derivative(double x, int z);

/// argmin_a sum_t rho_{w_t}(h_t - a) by pooling treated values in decreasing
/// order into the control mean. All-treated input returns max_t h_t.
double unit_intercept(const Vector& h, const IntVector& w);

struct SolverConfig {
  double tol_obj = 1e-12;
  double tol_grad = 1e-8;
  int max_iter = 10000;
  double min_normalizer = 1e-8;
  std::string basis = "stratum-by-period";

  static SolverConfig from(const KeyValueConfig& cfg);
  static SolverConfig load(const std::string& path);
};

struct DualSolution {
  Vector lambda_t;   ///< length T, lambda_t(0) = 0
  Vector lambda_i;   ///< length N
  Vector gamma;      ///< length p
  double objective = 0.0;
  int iterations = 0;
  double grad_norm = 0.0;
  bool converged = false;
  /// Objective after each accepted step, starting from the initial point.
  std::vector<double> trace;
};

/// Concentrated dual: f(theta) = min over lambda_i of
///   (1/M) sum_i m_i (1/T) sum_t rho_{W_it}(W_it - lambda_t - lambda_i - gamma'psi_it),  M = sum_i m_i,
/// with theta = (lambda_2..lambda_T, gamma). Units with identical treatment
/// path and basis rows are merged internally.
class DualObjective {
 public:
  DualObjective(const BinaryMatrix& treatments, const Matrix& psi, const Vector& multiplicity = {});

  [[nodiscard]] Eigen::Index n_units() const { return static_cast<Eigen::Index>(group_of_.size()); }
  [[nodiscard]] Eigen::Index n_periods() const { return periods_; }
  [[nodiscard]] Eigen::Index n_basis() const { return basis_; }
  [[nodiscard]] Eigen::Index n_params() const { return periods_ - 1 + basis_; }
  [[nodiscard]] Eigen::Index n_groups() const { return static_cast<Eigen::Index>(groups_.size()); }

  /// Same units, new multiplicities (one per original unit, nonnegative, positive total).
  void set_multiplicity(const Vector& multiplicity);

  [[nodiscard]] double value(const Vector& theta) const;
  /// Value, gradient and (optionally) the profiled generalized Hessian.
  double evaluate(const Vector& theta, Vector* grad, Matrix* hess) const;
  /// Un-concentrated loss at explicit parameters (lambda_i per original unit).
  [[nodiscard]] double loss(const Vector& lambda_t, const Vector& lambda_i, const Vector& gamma) const;
  /// Optimal lambda_i for every original unit at theta.
  [[nodiscard]] Vector unit_intercepts(const Vector& theta) const;

  [[nodiscard]] Vector pack(const Vector& lambda_t, const Vector& gamma) const;
  void unpack(const Vector& theta, Vector& lambda_t, Vector& gamma) const;

  /// Residuals W_it - lambda_t - lambda_i - gamma'psi_it for every original unit (N x T).
  [[nodiscard]] Matrix residuals(const Vector& theta) const;

 private:
  struct Group {
    IntVector w;
    Matrix psi;  ///< T x p
    std::vector<Eigen::Index> members;
    double weight = 0.0;
  };
  Eigen::Index periods_ = 0;
  Eigen::Index basis_ = 0;
  std::vector<Group> groups_;
  std::vector<Eigen::Index> group_of_;
  Vector multiplicity_;
  double total_ = 0.0;

  [[nodiscard]] Vector group_h(const Group& g, const Vector& theta) const;
};

/// Newton iteration on the concentrated dual with the exact per-unit intercept step.
DualSolution fit_dual(const DualObjective& objective, const SolverConfig& config, const DualSolution* warm = nullptr);
DualSolution fit_dual(const PanelDataset& data, const BasisMatrix& basis, const SolverConfig& config);
DualSolution fit_dual(const PanelDataset& data, const BasisSpec& basis, const SufficientStatistic& stat,
                      const SolverConfig& config);

struct EstimateResult {
  double tau_hat = 0.0;
  WeightTable weights;
  double normalizer = 0.0;
  DualSolution diagnostics;
};

/// Raised when the treated mean of the unnormalized weights is not positive.
class NoOverlapError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Normalized weights and tau_hat; `multiplicity` reweights units (bootstrap).
EstimateResult extract_weights(const PanelDataset& data, const BasisMatrix& basis, const DualSolution& sol,
                               const SolverConfig& config = {}, const Vector* multiplicity = nullptr);

/// fit_dual followed by extract_weights.
EstimateResult estimate(const PanelDataset& data, const BasisMatrix& basis, const SolverConfig& config = {});

/// Separation search: lambda_i + mu_t + psi'gamma = 0 on control cells and >= 1 on
/// treated cells. A solution certifies that no balancing weights exist.
struct OverlapReport {
  bool overlap = true;
  Vector lambda_i;
  Vector mu_t;
  Vector gamma;
  std::string description;
};

OverlapReport check_overlap(const PanelDataset& data, const BasisMatrix& basis);
OverlapReport check_overlap(const BinaryMatrix& treatments, const Matrix& psi);

/// Minimum-norm weights of the sample primal program, solved directly with the
/// dense QP kernel. Only for small N*T.
WeightTable primal_weights(const BinaryMatrix& treatments, const Matrix& psi);

/// Sample two-way fixed-effects OLS coefficient of Y on W with unit and period effects.
double two_way_fe(const Matrix& outcomes, const BinaryMatrix& treatments);
/// Its implied weights: two-way demeaned W scaled so (1/NT) sum omega W = 1.
Matrix two_way_fe_weights(const BinaryMatrix& treatments);

}  // namespace drpanel
