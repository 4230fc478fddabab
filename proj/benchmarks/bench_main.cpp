#include <benchmark/benchmark.h>

#include "drpanel/assign_models.hpp"
#include "drpanel/basis.hpp"
#include "drpanel/estimator.hpp"
#include "drpanel/inference.hpp"
#include "drpanel/mc_harness.hpp"
#include "drpanel/support_id.hpp"

namespace {

using namespace drpanel;

AssignmentSupport example_support() {
  BinaryMatrix w(8, 3);
  w << 0, 0, 0, 1, 0, 0, 0, 1, 0, 1, 1, 0, 0, 0, 1, 1, 0, 1, 0, 1, 1, 1, 1, 1;
  Vector pi(8);
  pi << 0.09, 0.04, 0.11, 0.14, 0.07, 0.08, 0.15, 0.32;
  return {w, pi};
}

SimulatedPanel design_world(Eigen::Index n) {
  DgpSpec spec;
  spec.n = n;
  return simulate_dataset(spec, 0);
}

void BM_FeWeights(benchmark::State& state) {
  const auto support = example_support();
  for (auto _ : state) benchmark::DoNotOptimize(fe_weights(support));
}
BENCHMARK(BM_FeWeights);

void BM_MinNormDr(benchmark::State& state) {
  const auto support = example_support();
  const auto stat = stat_mean(support.paths());
  const auto system = build_constraints(support, WeightSetKind::dr, &stat);
  for (auto _ : state) benchmark::DoNotOptimize(solve_min_norm(support, system));
}
BENCHMARK(BM_MinNormDr);

void BM_FeasibilityDr(benchmark::State& state) {
  const auto support = example_support();
  const auto stat = stat_mean(support.paths());
  for (auto _ : state) benchmark::DoNotOptimize(check_feasibility(support, WeightSetKind::dr, &stat));
}
BENCHMARK(BM_FeasibilityDr);

void BM_UnitIntercept(benchmark::State& state) {
  Vector h = Vector::LinSpaced(8, -1.0, 2.5);
  IntVector w(8);
  w << 0, 1, 0, 1, 1, 0, 1, 1;
  for (auto _ : state) benchmark::DoNotOptimize(unit_intercept(h, w));
}
BENCHMARK(BM_UnitIntercept);

void BM_FitDual(benchmark::State& state) {
  const auto sim = design_world(state.range(0));
  const auto stat = stat_mean(sim.data.treatments());
  const auto basis = BasisSpec::parse("stratum-by-period").evaluate(sim.data, stat);
  for (auto _ : state) benchmark::DoNotOptimize(estimate(sim.data, basis));
}
BENCHMARK(BM_FitDual)->Arg(500)->Arg(2000)->Arg(8000);

void BM_FitDualCovariates(benchmark::State& state) {
  DgpSpec spec;
  spec.n = state.range(0);
  spec.outcome = OutcomeModel::covariate_general;
  const auto sim = simulate_dataset(spec, 0);
  const auto stat = stat_mean(sim.data.treatments());
  const auto basis = BasisSpec::parse("stratum-by-period+covariate-linear").evaluate(sim.data, stat);
  for (auto _ : state) benchmark::DoNotOptimize(estimate(sim.data, basis));
}
BENCHMARK(BM_FitDualCovariates)->Arg(500)->Arg(2000);

void BM_Bootstrap(benchmark::State& state) {
  const auto sim = design_world(500);
  const auto stat = stat_mean(sim.data.treatments());
  const auto basis = BasisSpec::parse("stratum-by-period").evaluate(sim.data, stat);
  BootstrapOptions opt;
  opt.replicates = static_cast<int>(state.range(0));
  opt.threads = 1;
  for (auto _ : state) benchmark::DoNotOptimize(bootstrap(sim.data, basis, SolverConfig{}, opt));
}
BENCHMARK(BM_Bootstrap)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
