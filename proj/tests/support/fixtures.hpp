#pragma once

#include <algorithm>
#include <random>
#include <string>

#include "drpanel/panel.hpp"

namespace drpanel::fixtures {

inline std::string data_path(const std::string& name) { return std::string(DRPANEL_TEST_DATA) + "/" + name; }

inline BinaryMatrix example_paths() {
  BinaryMatrix w(8, 3);
  w << 0, 0, 0,
       1, 0, 0,
       0, 1, 0,
       1, 1, 0,
       0, 0, 1,
       1, 0, 1,
       0, 1, 1,
       1, 1, 1;
  return w;
}

inline Vector example_rounded_probs() {
  Vector p(8);
  p << 0.09, 0.04, 0.11, 0.14, 0.07, 0.08, 0.15, 0.32;
  return p;
}

inline Matrix example_fe_weights() {
  Matrix m(8, 3);
  m << 0.46, -0.64, 0.18,
       5.70, -3.26, -2.44,
       -2.16, 4.60, -2.44,
       3.08, 1.98, -5.07,
       -2.16, -3.26, 5.42,
       3.08, -5.88, 2.80,
       -4.78, 1.98, 2.80,
       0.46, -0.64, 0.18;
  return m;
}

/// Rows indexed by Wbar = 0, 1/3, 2/3, 1.
inline Matrix example_stratum_means() {
  Matrix m(4, 3);
  m << 0.46, -0.64, 0.18,
       -0.73, 0.60, 0.13,
       -0.08, 0.36, -0.28,
       0.46, -0.64, 0.18;
  return m;
}

inline Matrix example_dr_weights() {
  Matrix m(8, 3);
  m << 0.00, 0.00, 0.00,
       6.59, -3.95, -2.64,
       -1.46, 4.10, -2.64,
       3.24, 1.66, -4.90,
       -1.46, -3.95, 5.42,
       3.24, -6.39, 3.15,
       -4.81, 1.66, 3.15,
       0.00, 0.00, 0.00;
  return m;
}

inline AssignmentSupport example_rounded() { return load_support(data_path("example_rounded.csv")); }
inline AssignmentSupport example_support() { return load_support(data_path("example_support.csv")); }

/// Random support with 1..2^T distinct rows and random positive probabilities.
inline AssignmentSupport random_support(std::mt19937_64& rng, int periods) {
  const int all = 1 << periods;
  std::vector<int> codes(static_cast<std::size_t>(all));
  for (int c = 0; c < all; ++c) codes[static_cast<std::size_t>(c)] = c;
  std::shuffle(codes.begin(), codes.end(), rng);
  const int k = std::uniform_int_distribution<int>(1, all)(rng);
  BinaryMatrix w(k, periods);
  Vector mass(k);
  for (int r = 0; r < k; ++r) {
    for (int t = 0; t < periods; ++t) w(r, t) = (codes[static_cast<std::size_t>(r)] >> t) & 1;
    mass(r) = std::uniform_real_distribution<double>(0.05, 1.0)(rng);
  }
  return AssignmentSupport::from_masses(w, mass);
}

}  // namespace drpanel::fixtures
