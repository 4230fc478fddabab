#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "drpanel/estimator.hpp"

namespace drpanel {

struct BootstrapResult {
  double tau_hat = 0.0;
  double sigma2_hat = 0.0;   ///< (N/B) sum_b (tau_b - tau_hat)^2 over successful replicates
  Vector replicates;         ///< successful replicates, in replicate order
  std::vector<int> replicate_index;
  std::vector<int> failed;   ///< indices of replicates without overlap or convergence
  double ci_level = 0.95;
  std::pair<double, double> ci{0.0, 0.0};
  std::uint64_t seed = 0;
  Eigen::Index n_units = 0;
};

struct BootstrapOptions {
  int replicates = 400;
  std::uint64_t seed = 1;
  double level = 0.95;
  /// 0 means DRPANEL_THREADS, else the hardware concurrency.
  int threads = 0;
  /// Failure share above which the bootstrap raises.
  double max_failed_share = 0.1;
};

/// Worker count from DRPANEL_THREADS, capped at `requested` when positive.
int resolve_threads(int requested);

/// Unit multiplicities of bootstrap replicate b.
Vector bootstrap_multiplicity(Eigen::Index n, std::uint64_t seed, int replicate);

/// Unit-level nonparametric bootstrap; every replicate refits the multiplicity-weighted
/// dual starting from the full-sample solution.
BootstrapResult bootstrap(const PanelDataset& data, const BasisMatrix& basis, const SolverConfig& config,
                          const BootstrapOptions& options, const EstimateResult* base = nullptr);

/// `replicate,tau_hat` rows, full precision.
void write_replicates_csv(std::ostream& out, const BootstrapResult& result);
/// `key,value` block: tau_hat, sigma2_hat, se, ci_lower, ci_upper, ci_level, n_replicates, n_failed, seed.
void write_bootstrap_summary(std::ostream& out, const BootstrapResult& result);

}  // namespace drpanel
