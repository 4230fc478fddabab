#pragma once

#include <span>
#include <vector>

namespace drpanel::stats {

/// Fixed pairwise-tree summation; the result depends only on the input order.
double pairwise_sum(std::span<const double> x);
double mean(std::span<const double> x);
/// Sample variance with divisor n - 1.
double variance(std::span<const double> x);

double normal_quantile(double p);
double normal_cdf(double x);
double chi_square_quantile(double p, double df);

struct AndersonDarling {
  double a2 = 0.0;           ///< raw statistic with estimated mean and variance
  double a2_adjusted = 0.0;  ///< a2 (1 + 0.75/n + 2.25/n^2)
  double p_value = 0.0;
  [[nodiscard]] bool passes(double alpha) const { return p_value > alpha; }
};

/// Normality test with mean and variance estimated from the sample. n >= 8.
AndersonDarling anderson_darling(std::vector<double> x);

}  // namespace drpanel::stats
