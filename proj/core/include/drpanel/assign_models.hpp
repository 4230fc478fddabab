#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "drpanel/rng.hpp"
#include "drpanel/types.hpp"

namespace drpanel {

using Rational = boost::multiprecision::cpp_rational;
/// Statistic value of one path. Compared exactly, never with a tolerance.
using StatValue = std::vector<Rational>;

enum class StatKind { mean, static_logit, markov, exponential_family };

std::string to_string(StatKind kind);

/// Per-row statistic values and the induced partition of rows into strata.
/// Strata are numbered in increasing (lexicographic) order of their value.
class SufficientStatistic {
 public:
  SufficientStatistic(StatKind kind, std::vector<StatValue> values);

  [[nodiscard]] StatKind kind() const { return kind_; }
  [[nodiscard]] Eigen::Index size() const { return static_cast<Eigen::Index>(values_.size()); }
  [[nodiscard]] const std::vector<StatValue>& values() const { return values_; }
  [[nodiscard]] int stratum_of(Eigen::Index row) const { return stratum_[static_cast<std::size_t>(row)]; }
  [[nodiscard]] const std::vector<int>& strata() const { return stratum_; }
  [[nodiscard]] int n_strata() const { return static_cast<int>(stratum_values_.size()); }
  [[nodiscard]] const StatValue& stratum_value(int s) const { return stratum_values_[static_cast<std::size_t>(s)]; }
  [[nodiscard]] const std::vector<Eigen::Index>& members(int s) const { return members_[static_cast<std::size_t>(s)]; }
  /// "2/3" for scalar statistics, "(1,1,1,1)" for vectors.
  [[nodiscard]] std::string label(int s) const;
  [[nodiscard]] Vector value_as_double(Eigen::Index row) const;

 private:
  StatKind kind_;
  std::vector<StatValue> values_;
  std::vector<int> stratum_;
  std::vector<StatValue> stratum_values_;
  std::vector<std::vector<Eigen::Index>> members_;
};

/// W-bar: share of treated periods.
SufficientStatistic stat_mean(const BinaryMatrix& paths);
/// (1/T) sum_t psi(t) W_t, one column of `schedule` per statistic component (T x q).
SufficientStatistic stat_static_logit(const BinaryMatrix& paths, const Matrix& schedule);
SufficientStatistic stat_static_logit(const BinaryMatrix& paths, const Vector& schedule);
/// (sum_{t=2}^{T-1} W_t, sum_{t=2}^{T} W_t W_{t-1}, W_1, W_T) for the first-order Markov model.
SufficientStatistic stat_markov(const BinaryMatrix& paths);

using PathStatistic = std::function<std::vector<double>(const std::vector<int>& path)>;
/// Strata by exact equality of a user statistic S(path).
SufficientStatistic stat_exponential_family(const BinaryMatrix& paths, const PathStatistic& s_fn);

/// `mean`, `markov`, `static-logit:<psi_1,...,psi_T>` or `custom:<file>`, where the
/// file is a CSV with a `path` column (0/1 string) and one column per component.
class StatisticSpec {
 public:
  static StatisticSpec parse(const std::string& text);
  [[nodiscard]] SufficientStatistic compute(const BinaryMatrix& paths) const;
  [[nodiscard]] const std::string& text() const { return text_; }

 private:
  std::string text_;
  StatKind kind_ = StatKind::mean;
  std::vector<double> schedule_;
  std::vector<std::pair<std::string, std::vector<double>>> table_;
};

struct SimulatedAssignment {
  BinaryMatrix treatments;
  Vector latents;
};

using LatentSampler = std::function<double(Rng&)>;

/// P(W_t = 1 | U) = logistic(alpha(U)' psi(t) + lambda_t), independent over t given U.
struct StaticLogitModel {
  LatentSampler latent;
  std::function<Vector(double)> alpha;
  Vector lambda;    ///< per-period intercepts, length T
  Matrix schedule;  ///< T x q, row t is psi(t)
};

SimulatedAssignment simulate_static_logit(Eigen::Index n, Eigen::Index periods, const StaticLogitModel& model,
                                          std::uint64_t seed);

/// W_1 ~ Bernoulli(initial(U)); P(W_t = 1 | U, W_{t-1}) = logistic(alpha(U) + gamma(U) W_{t-1}).
struct MarkovModel {
  LatentSampler latent;
  std::function<double(double)> alpha;
  std::function<double(double)> gamma;
  std::function<double(double)> initial;
};

SimulatedAssignment simulate_markov(Eigen::Index n, Eigen::Index periods, const MarkovModel& model, std::uint64_t seed);

double logistic(double x);

/// Sidecar `unit,u` file for simulated latents.
void write_latents(std::ostream& out, const std::vector<std::string>& unit_ids, const Vector& latents);

}  // namespace drpanel
