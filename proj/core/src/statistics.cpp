#include "drpanel/statistics.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "drpanel/error.hpp"

namespace drpanel::stats {

double pairwise_sum(std::span<const double> x) {
  if (x.size() <= 8) {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
  }
  const auto half = x.size() / 2;
  return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

double mean(std::span<const double> x) {
  if (x.empty()) throw ValidationError("mean of an empty sample");
  return pairwise_sum(x) / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  if (x.size() < 2) throw ValidationError("variance needs at least two values");
  const double m = mean(x);
  std::vector<double> sq(x.size());
  std::transform(x.begin(), x.end(), sq.begin(), [m](double v) { return (v - m) * (v - m); });
  return pairwise_sum(sq) / static_cast<double>(x.size() - 1);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ValidationError("normal quantile needs p in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double normal_cdf(double x) { return boost::math::cdf(boost::math::normal_distribution<double>(), x); }

double chi_square_quantile(double p, double df) {
  if (!(p > 0.0 && p < 1.0) || !(df > 0.0)) throw ValidationError("chi-square quantile needs p in (0, 1), df > 0");
  return boost::math::quantile(boost::math::chi_squared_distribution<double>(df), p);
}

AndersonDarling anderson_darling(std::vector<double> x) {
  const auto n = x.size();
  if (n < 8) throw ValidationError("Anderson-Darling needs at least 8 observations");
  const double m = mean(x);
  const double sd = std::sqrt(variance(x));
  if (!(sd > 0.0)) throw ValidationError("Anderson-Darling needs a non-degenerate sample");
  std::sort(x.begin(), x.end());
  std::vector<double> terms(n);
  const double dn = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    double lo = normal_cdf((x[i] - m) / sd);
    double hi = normal_cdf((x[n - 1 - i] - m) / sd);
    lo = std::clamp(lo, 1e-300, 1.0 - 1e-16);
    hi = std::clamp(hi, 1e-300, 1.0 - 1e-16);
    terms[i] = (2.0 * static_cast<double>(i) + 1.0) * (std::log(lo) + std::log1p(-hi));
  }
  AndersonDarling out;
  out.a2 = -dn - pairwise_sum(terms) / dn;
  out.a2_adjusted = out.a2 * (1.0 + 0.75 / dn + 2.25 / (dn * dn));
  const double a = out.a2_adjusted;
  if (a >= 0.6) {
    out.p_value = std::exp(1.2937 - 5.709 * a + 0.0186 * a * a);
  } else if (a >= 0.34) {
    out.p_value = std::exp(0.9177 - 4.279 * a - 1.38 * a * a);
  } else if (a >= 0.2) {
    out.p_value = 1.0 - std::exp(-8.318 + 42.796 * a - 59.938 * a * a);
  } else {
    out.p_value = 1.0 - std::exp(-13.436 + 101.14 * a - 223.73 * a * a);
  }
  out.p_value = std::clamp(out.p_value, 0.0, 1.0);
  return out;
}

}  // namespace drpanel::stats
