#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "drpanel/inference.hpp"
#include "drpanel/mc_harness.hpp"
#include "drpanel/statistics.hpp"

using namespace drpanel;

namespace {

struct Fixture {
  PanelDataset data;
  BasisMatrix basis;
};

Fixture simulated(Eigen::Index n, std::uint64_t seed = 5) {
  DgpSpec spec;
  spec.n = n;
  spec.seed = seed;
  auto sim = simulate_dataset(spec, 0);
  auto basis = BasisSpec::parse("stratum-by-period").evaluate(sim.data, stat_mean(sim.data.treatments()));
  return {std::move(sim.data), std::move(basis)};
}

BootstrapOptions options(int b, std::uint64_t seed, int threads = 1) {
  BootstrapOptions o;
  o.replicates = b;
  o.seed = seed;
  o.threads = threads;
  return o;
}

}  // namespace

TEST(BootstrapMultiplicity, SumsToNAndIsDeterministic) {
  const auto a = bootstrap_multiplicity(37, 9, 4);
  EXPECT_EQ(a.sum(), 37.0);
  EXPECT_GE(a.minCoeff(), 0.0);
  EXPECT_EQ(a, bootstrap_multiplicity(37, 9, 4));
  EXPECT_NE(a, bootstrap_multiplicity(37, 9, 5));
  EXPECT_NE(a, bootstrap_multiplicity(37, 10, 4));
}

TEST(BootstrapMultiplicity, UniformOverUnits) {
  Vector total = Vector::Zero(5);
  for (int b = 0; b < 4000; ++b) total += bootstrap_multiplicity(5, 1, b);
  for (Eigen::Index k = 0; k < 5; ++k) EXPECT_NEAR(total(k) / 4000.0, 1.0, 0.05);
}

TEST(Bootstrap, ConstantOutcomeHasZeroVariance) {
  auto f = simulated(200);
  const auto d = f.data.with_outcomes(Matrix::Constant(f.data.n_units(), f.data.n_periods(), 4.0));
  const auto r = bootstrap(d, f.basis, SolverConfig{}, options(50, 3));
  EXPECT_NEAR(r.tau_hat, 0.0, 1e-6);
  EXPECT_LE(r.sigma2_hat, 1e-10);
}

TEST(Bootstrap, DeterministicAndThreadIndependent) {
  const auto f = simulated(200);
  const auto a = bootstrap(f.data, f.basis, SolverConfig{}, options(40, 11, 1));
  const auto b = bootstrap(f.data, f.basis, SolverConfig{}, options(40, 11, 1));
  const auto c = bootstrap(f.data, f.basis, SolverConfig{}, options(40, 11, 4));
  const auto d = bootstrap(f.data, f.basis, SolverConfig{}, options(40, 12, 1));
  EXPECT_EQ(a.replicates, b.replicates);
  EXPECT_EQ(a.replicates, c.replicates);
  EXPECT_EQ(a.sigma2_hat, c.sigma2_hat);
  EXPECT_NE(a.replicates, d.replicates);
}

TEST(Bootstrap, VarianceAndIntervalFormulas) {
  const auto f = simulated(300);
  const auto r = bootstrap(f.data, f.basis, SolverConfig{}, options(60, 2));
  ASSERT_EQ(r.replicates.size(), 60);
  EXPECT_TRUE(r.failed.empty());
  const double n = static_cast<double>(f.data.n_units());
  const double s2 = n * (r.replicates.array() - r.tau_hat).square().mean();
  EXPECT_NEAR(r.sigma2_hat, s2, 1e-12 * s2);
  const double half = stats::normal_quantile(0.975) * std::sqrt(r.sigma2_hat / n);
  EXPECT_NEAR(r.ci.first, r.tau_hat - half, 1e-12);
  EXPECT_NEAR(r.ci.second, r.tau_hat + half, 1e-12);
  EXPECT_EQ(r.n_units, 300);
  EXPECT_EQ(r.seed, 2u);
}

TEST(Bootstrap, ReplicateMatchesDirectWeightedFit) {
  const auto f = simulated(150);
  const auto r = bootstrap(f.data, f.basis, SolverConfig{}, options(5, 8));
  ASSERT_EQ(r.replicate_index[2], 2);
  const Vector m = bootstrap_multiplicity(f.data.n_units(), 8, 2);
  const DualObjective obj(f.data.treatments(), f.basis.values, m);
  const auto sol = fit_dual(obj, SolverConfig{});
  const auto est = extract_weights(f.data, f.basis, sol, SolverConfig{}, &m);
  EXPECT_NEAR(r.replicates(2), est.tau_hat, 1e-7);
  // Replicate weights balance under the resampled measure.
  const Matrix& om = est.weights.weights;
  const Vector col = om.transpose() * m;
  EXPECT_LE(col.lpNorm<Eigen::Infinity>() / m.sum(), 1e-7);
  double norm = 0.0;
  for (Eigen::Index i = 0; i < om.rows(); ++i) {
    for (Eigen::Index t = 0; t < om.cols(); ++t) norm += m(i) * om(i, t) * f.data.treatments()(i, t);
  }
  EXPECT_NEAR(norm / (m.sum() * static_cast<double>(om.cols())), 1.0, 1e-12);
}

TEST(Bootstrap, TooManyFailuresRaise) {
  // One all-control unit carries every overlap pattern; resamples without it fail.
  BinaryMatrix w(10, 2);
  w << 0, 0, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 1, 1, 1, 1, 1, 1, 1, 1;
  const PanelDataset d(Matrix::Random(10, 2), w);
  const BasisMatrix none{Matrix(20, 0), {}, 0};
  EXPECT_NO_THROW(estimate(d, none));
  try {
    bootstrap(d, none, SolverConfig{}, options(100, 1));
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("bootstrap replicates"), std::string::npos);
  }
  auto loose = options(100, 1);
  loose.max_failed_share = 1.0;
  const auto r = bootstrap(d, none, SolverConfig{}, loose);
  EXPECT_GT(r.failed.size(), 10u);
  EXPECT_EQ(r.failed.size() + static_cast<std::size_t>(r.replicates.size()), 100u);
}

TEST(Bootstrap, RejectsBadOptions) {
  const auto f = simulated(100);
  EXPECT_THROW(bootstrap(f.data, f.basis, SolverConfig{}, options(1, 1)), ValidationError);
  auto o = options(10, 1);
  o.level = 1.0;
  EXPECT_THROW(bootstrap(f.data, f.basis, SolverConfig{}, o), ValidationError);
}

TEST(ResolveThreads, ReadsEnvironment) {
  setenv("DRPANEL_THREADS", "3", 1);
  EXPECT_EQ(resolve_threads(0), 3);
  EXPECT_EQ(resolve_threads(2), 2);
  setenv("DRPANEL_THREADS", "zero", 1);
  EXPECT_THROW(resolve_threads(0), ValidationError);
  unsetenv("DRPANEL_THREADS");
  EXPECT_GE(resolve_threads(0), 1);
}

TEST(BootstrapOutput, Formats) {
  BootstrapResult r;
  r.tau_hat = 1.5;
  r.sigma2_hat = 4.0;
  r.replicates = Vector(2);
  r.replicates << 1.25, 1.75;
  r.replicate_index = {0, 2};
  r.failed = {1};
  r.ci = {1.0, 2.0};
  r.seed = 7;
  r.n_units = 100;
  std::ostringstream a, b;
  write_replicates_csv(a, r);
  EXPECT_EQ(a.str(), "replicate,tau_hat\n1,1.25\n3,1.75\n");
  write_bootstrap_summary(b, r);
  EXPECT_EQ(b.str(),
            "key,value\ntau_hat,1.5\nsigma2_hat,4\nse,0.2\nci_lower,1\nci_upper,2\nci_level,0.95\n"
            "n_replicates,2\nn_failed,1\nseed,7\n");
}
