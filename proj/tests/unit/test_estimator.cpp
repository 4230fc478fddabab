#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "drpanel/estimator.hpp"
#include "drpanel/mc_harness.hpp"
#include "fixtures.hpp"

using namespace drpanel;

namespace {

double brute_intercept(const Vector& h, const IntVector& w) {
  auto f = [&](double a) {
    double s = 0.0;
    for (Eigen::Index t = 0; t < h.size(); ++t) s += rho(h(t) - a, w(t));
    return s;
  };
  double lo = -20.0, hi = 20.0;
  for (int it = 0; it < 300; ++it) {
    const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
    if (f(m1) <= f(m2)) hi = m2; else lo = m1;
  }
  return 0.5 * (lo + hi);
}

double intercept_loss(const Vector& h, const IntVector& w, double a) {
  double s = 0.0;
  for (Eigen::Index t = 0; t < h.size(); ++t) s += rho(h(t) - a, w(t));
  return s;
}

PanelDataset small_panel(std::mt19937_64& rng, Eigen::Index n, Eigen::Index periods, double p_treat = 0.5) {
  std::bernoulli_distribution bd(p_treat);
  std::normal_distribution<double> nd;
  BinaryMatrix w(n, periods);
  Matrix y(n, periods);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index t = 0; t < periods; ++t) {
      w(i, t) = bd(rng) ? 1 : 0;
      y(i, t) = nd(rng);
    }
  }
  return PanelDataset(y, w);
}

BasisMatrix stratum_basis(const PanelDataset& data) {
  return BasisSpec::parse("stratum-by-period").evaluate(data, stat_mean(data.treatments()));
}

BasisMatrix no_basis(const PanelDataset& data) {
  return BasisSpec::parse("none").evaluate(data, stat_mean(data.treatments()));
}

SimulatedPanel simulated(Eigen::Index n, int rep = 0) {
  DgpSpec spec;
  spec.n = n;
  spec.seed = 17;
  return simulate_dataset(spec, rep);
}

std::string write_temp(const std::string& name, const std::string& body) {
  const std::string path = ::testing::TempDir() + "/" + name;
  std::ofstream(path) << body;
  return path;
}

}  // namespace

TEST(Rho, Values) {
  EXPECT_EQ(rho(-2.0, 0), 4.0);
  EXPECT_EQ(rho(-2.0, 1), 0.0);
  EXPECT_EQ(rho(3.0, 1), 9.0);
  EXPECT_EQ(rho(3.0, 0), 9.0);
  EXPECT_EQ(rho_derivative(-2.0, 0), -4.0);
  EXPECT_EQ(rho_derivative(-2.0, 1), 0.0);
  EXPECT_EQ(rho_derivative(1.5, 1), 3.0);
}

TEST(UnitIntercept, KnownValues) {
  Vector h(3);
  IntVector w(3);
  h << 1, 2, 3;
  w << 0, 0, 0;
  EXPECT_DOUBLE_EQ(unit_intercept(h, w), 2.0);
  w << 1, 1, 1;
  EXPECT_DOUBLE_EQ(unit_intercept(h, w), 3.0);
  h << 0, 0, 5;
  w << 0, 0, 1;
  EXPECT_DOUBLE_EQ(unit_intercept(h, w), 5.0 / 3.0);
  h << 0, 0, -1;
  EXPECT_DOUBLE_EQ(unit_intercept(h, w), 0.0);
  h << 1, 6, 4;
  w << 0, 1, 1;
  EXPECT_NEAR(unit_intercept(h, w), 11.0 / 3.0, 1e-15);  // pools 6 and 4 with 1
  EXPECT_THROW(unit_intercept(Vector(2), IntVector(3)), ValidationError);
}

TEST(UnitIntercept, MatchesTernarySearch) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> ud(-5.0, 5.0);
  for (int rep = 0; rep < 500; ++rep) {
    const int periods = 1 + rep % 6;
    Vector h(periods);
    IntVector w(periods);
    for (int t = 0; t < periods; ++t) {
      h(t) = ud(rng);
      w(t) = static_cast<int>(rng() & 1U);
    }
    const double a = unit_intercept(h, w);
    const double b = brute_intercept(h, w);
    EXPECT_LE(intercept_loss(h, w, a), intercept_loss(h, w, b) + 1e-12);
    if (w.sum() < periods) EXPECT_NEAR(a, b, 1e-6);
  }
}

TEST(DualObjective, GridOracleTwoByTwo) {
  for (int variant = 0; variant < 2; ++variant) {
    BinaryMatrix w(2, 2);
    if (variant == 0) w << 0, 1, 0, 0; else w << 0, 1, 1, 0;
    const DualObjective obj(w, Matrix(4, 0));
    const auto sol = fit_dual(obj, SolverConfig{});
    ASSERT_TRUE(sol.converged);
    double best = INFINITY;
    const double step = 0.01;
    for (double l2 = -2.0; l2 <= 2.0; l2 += step) {
      for (double a1 = -2.0; a1 <= 2.0; a1 += step) {
        for (double a2 = -2.0; a2 <= 2.0; a2 += step) {
          Vector lt(2), li(2);
          lt << 0.0, l2;
          li << a1, a2;
          best = std::min(best, obj.loss(lt, li, Vector(0)));
        }
      }
    }
    EXPECT_LE(sol.objective, best + 1e-12);
    EXPECT_GE(sol.objective, best - 1e-3);
    EXPECT_NEAR(obj.loss(sol.lambda_t, sol.lambda_i, sol.gamma), sol.objective, 1e-14);
  }
}

TEST(DualObjective, ConcentratedValueMinimizesOverIntercepts) {
  BinaryMatrix w(2, 2);
  w << 0, 1, 1, 1;
  const DualObjective obj(w, Matrix(4, 0));
  Vector theta(1);
  theta << 0.3;
  const Vector li = obj.unit_intercepts(theta);
  Vector lt(2);
  lt << 0.0, 0.3;
  EXPECT_NEAR(obj.value(theta), obj.loss(lt, li, Vector(0)), 1e-15);
  for (double d : {-0.1, 0.1}) {
    for (Eigen::Index i = 0; i < 2; ++i) {
      Vector lj = li;
      lj(i) += d;
      EXPECT_GE(obj.loss(lt, lj, Vector(0)), obj.value(theta));
    }
  }
}

TEST(DualObjective, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  for (int rep = 0; rep < 10; ++rep) {
    auto data = small_panel(rng, 30, 3 + rep % 2);
    const auto basis = stratum_basis(data);
    const DualObjective obj(data.treatments(), basis.values);
    for (int k = 0; k < 10; ++k) {
      Vector theta(obj.n_params());
      for (Eigen::Index j = 0; j < theta.size(); ++j) theta(j) = nd(rng);
      Vector g;
      obj.evaluate(theta, &g, nullptr);
      Vector fd(theta.size());
      for (Eigen::Index j = 0; j < theta.size(); ++j) {
        Vector a = theta, b = theta;
        a(j) += 1e-6;
        b(j) -= 1e-6;
        fd(j) = (obj.value(a) - obj.value(b)) / 2e-6;
      }
      EXPECT_LE((g - fd).lpNorm<Eigen::Infinity>(), 1e-5 * std::max(1.0, g.lpNorm<Eigen::Infinity>()));
    }
  }
}

TEST(DualObjective, Convex) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  auto data = small_panel(rng, 25, 3);
  const auto basis = stratum_basis(data);
  const DualObjective obj(data.treatments(), basis.values);
  for (int rep = 0; rep < 200; ++rep) {
    Vector a(obj.n_params()), b(obj.n_params());
    for (Eigen::Index j = 0; j < a.size(); ++j) {
      a(j) = 2.0 * nd(rng);
      b(j) = 2.0 * nd(rng);
    }
    for (double s : {0.25, 0.5, 0.75}) {
      EXPECT_LE(obj.value(s * a + (1 - s) * b), s * obj.value(a) + (1 - s) * obj.value(b) + 1e-12);
    }
  }
}

TEST(DualObjective, MergesIdenticalUnits) {
  BinaryMatrix w(4, 2);
  w << 0, 1, 0, 1, 0, 0, 0, 1;
  const DualObjective obj(w, Matrix::Zero(8, 1));
  EXPECT_EQ(obj.n_units(), 4);
  EXPECT_EQ(obj.n_groups(), 2);
  EXPECT_THROW(DualObjective(w, Matrix::Zero(7, 1)), ValidationError);
  Matrix bad = Matrix::Zero(8, 1);
  bad(3, 0) = NAN;
  EXPECT_THROW(DualObjective(w, bad), ValidationError);
}

TEST(FitDual, MonotoneTraceAndConvergence) {
  const auto sim = simulated(400);
  const auto basis = stratum_basis(sim.data);
  const auto sol = fit_dual(sim.data, basis, SolverConfig{});
  EXPECT_TRUE(sol.converged);
  EXPECT_LE(sol.grad_norm, 1e-8);
  ASSERT_GE(sol.trace.size(), 2u);
  for (std::size_t k = 1; k < sol.trace.size(); ++k) EXPECT_LE(sol.trace[k], sol.trace[k - 1]);
  EXPECT_EQ(sol.lambda_t(0), 0.0);
  const DualObjective obj(sim.data.treatments(), basis.values);
  EXPECT_NEAR(obj.loss(sol.lambda_t, sol.lambda_i, sol.gamma), sol.objective, 1e-12);
}

TEST(FitDual, WarmStartFromSolutionStopsImmediately) {
  const auto sim = simulated(300);
  const auto basis = stratum_basis(sim.data);
  const DualObjective obj(sim.data.treatments(), basis.values);
  const auto sol = fit_dual(obj, SolverConfig{});
  const auto again = fit_dual(obj, SolverConfig{}, &sol);
  EXPECT_LE(again.iterations, 1);
  EXPECT_NEAR(again.objective, sol.objective, 1e-14);
}

TEST(Estimate, ZeroNoiseRecoversConstantEffect) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd;
  const auto sim = simulated(500);
  const auto& w = sim.data.treatments();
  const auto stat = stat_mean(w);
  const auto basis = stratum_basis(sim.data);
  Matrix y(w.rows(), w.cols());
  Vector a(w.rows());
  for (Eigen::Index i = 0; i < w.rows(); ++i) a(i) = nd(rng);
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index t = 0; t < w.cols(); ++t) {
      y(i, t) = a(i) + 0.7 * static_cast<double>(t) + 1.5 * static_cast<double>(t) * stat.stratum_of(i) + 2.5 * w(i, t);
    }
  }
  const auto res = estimate(sim.data.with_outcomes(y), basis);
  EXPECT_NEAR(res.tau_hat, 2.5, 1e-6);
}

TEST(Estimate, WeightsBalanceTheBasis) {
  const auto sim = simulated(500);
  const auto basis = stratum_basis(sim.data);
  const auto res = estimate(sim.data, basis);
  const Matrix& om = res.weights.weights;
  const auto& w = sim.data.treatments();
  const double cells = static_cast<double>(om.size());
  EXPECT_LE(om.rowwise().sum().lpNorm<Eigen::Infinity>(), 1e-6);
  EXPECT_LE(om.colwise().sum().lpNorm<Eigen::Infinity>() / cells, 1e-7);
  Vector flat(om.size());
  for (Eigen::Index i = 0; i < om.rows(); ++i) flat.segment(i * om.cols(), om.cols()) = om.row(i).transpose();
  EXPECT_LE((basis.values.transpose() * flat).lpNorm<Eigen::Infinity>() / cells, 1e-7);
  EXPECT_NEAR(om.cwiseProduct(w.cast<double>()).sum() / cells, 1.0, 1e-12);
  for (Eigen::Index i = 0; i < om.rows(); ++i) {
    for (Eigen::Index t = 0; t < om.cols(); ++t) {
      if (w(i, t)) EXPECT_GE(om(i, t), 0.0);
    }
  }
  EXPECT_EQ(res.weights.level, WeightLevel::sample);
}

TEST(Estimate, AllTreatedUnitsGetZeroWeight) {
  const auto sim = simulated(400);
  const auto res = estimate(sim.data, stratum_basis(sim.data));
  int seen = 0;
  for (Eigen::Index i = 0; i < sim.data.n_units(); ++i) {
    if (sim.data.treatments().row(i).sum() == sim.data.n_periods()) {
      ++seen;
      EXPECT_EQ(res.weights.weights.row(i).lpNorm<Eigen::Infinity>(), 0.0);
    }
  }
  EXPECT_GT(seen, 0);
}

TEST(Estimate, AffineOutcomeTransform) {
  const auto sim = simulated(400);
  const auto basis = stratum_basis(sim.data);
  const auto base = estimate(sim.data, basis);
  const Matrix y = 3.0 * sim.data.outcomes().array() + 5.0;
  const auto moved = estimate(sim.data.with_outcomes(y), basis);
  EXPECT_NEAR(moved.tau_hat, 3.0 * base.tau_hat, 1e-6);
}

TEST(Estimate, DuplicatedUnitsLeaveEstimateUnchanged) {
  const auto sim = simulated(200);
  const auto& d = sim.data;
  const auto n = d.n_units();
  Matrix y(2 * n, d.n_periods());
  BinaryMatrix w(2 * n, d.n_periods());
  y << d.outcomes(), d.outcomes();
  w << d.treatments(), d.treatments();
  const PanelDataset twice(y, w);
  const auto a = estimate(d, stratum_basis(d));
  const auto b = estimate(twice, stratum_basis(twice));
  EXPECT_NEAR(a.tau_hat, b.tau_hat, 1e-9);
  EXPECT_LE((b.weights.weights.topRows(n) - a.weights.weights).lpNorm<Eigen::Infinity>(), 1e-6);
  EXPECT_LE((b.weights.weights.bottomRows(n) - a.weights.weights).lpNorm<Eigen::Infinity>(), 1e-6);
}

TEST(Estimate, MultiplicityMatchesExplicitResample) {
  const auto sim = simulated(150);
  const auto& d = sim.data;
  const auto basis = stratum_basis(d);
  Vector m = Vector::Ones(d.n_units());
  m(0) = 3.0;
  m(1) = 0.0;
  m(2) = 2.0;
  DualObjective obj(d.treatments(), basis.values, m);
  const auto sol = fit_dual(obj, SolverConfig{});
  const auto weighted = extract_weights(d, basis, sol, SolverConfig{}, &m);

  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < d.n_units(); ++i) {
    for (int c = 0; c < static_cast<int>(m(i)); ++c) rows.push_back(i);
  }
  Matrix y(static_cast<Eigen::Index>(rows.size()), d.n_periods());
  BinaryMatrix w(y.rows(), y.cols());
  Matrix psi(y.rows() * y.cols(), basis.dim());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto i = rows[r];
    y.row(static_cast<Eigen::Index>(r)) = d.outcomes().row(i);
    w.row(static_cast<Eigen::Index>(r)) = d.treatments().row(i);
    psi.middleRows(static_cast<Eigen::Index>(r) * d.n_periods(), d.n_periods()) =
        basis.values.middleRows(i * d.n_periods(), d.n_periods());
  }
  const PanelDataset explicit_data(y, w);
  const BasisMatrix explicit_basis{psi, basis.names, basis.n_psi0};
  const auto direct = estimate(explicit_data, explicit_basis);
  EXPECT_NEAR(weighted.tau_hat, direct.tau_hat, 1e-8);
}

TEST(Estimate, AllControlHasNoOverlap) {
  const PanelDataset d(Matrix::Random(5, 3), BinaryMatrix::Zero(5, 3));
  EXPECT_THROW(estimate(d, no_basis(d)), NoOverlapError);
}

TEST(Estimate, SeparatedTreatmentHasNoOverlap) {
  BinaryMatrix w(4, 2);
  w << 1, 1, 1, 1, 0, 0, 0, 0;
  const PanelDataset d(Matrix::Random(4, 2), w);
  EXPECT_THROW(estimate(d, no_basis(d)), NoOverlapError);
  const auto rep = check_overlap(d, no_basis(d));
  EXPECT_FALSE(rep.overlap);
}

TEST(CheckOverlap, CertificateSeparatesCells) {
  BinaryMatrix w(1, 3);
  w << 1, 1, 1;
  const auto rep = check_overlap(w, Matrix(3, 0));
  ASSERT_FALSE(rep.overlap);
  for (Eigen::Index t = 0; t < 3; ++t) EXPECT_GE(rep.lambda_i(0) + rep.mu_t(t), 1.0 - 1e-9);
  EXPECT_NE(rep.description.find("certificate"), std::string::npos);

  std::mt19937_64 rng(6);
  for (int k = 0; k < 50; ++k) {
    auto d = small_panel(rng, 6, 3, 0.3);
    const auto basis = stratum_basis(d);
    const auto r = check_overlap(d, basis);
    if (r.overlap) continue;
    for (Eigen::Index i = 0; i < 6; ++i) {
      for (Eigen::Index t = 0; t < 3; ++t) {
        const double score = r.lambda_i(i) + r.mu_t(t) + basis.values.row(i * 3 + t).dot(r.gamma);
        if (d.treatments()(i, t)) EXPECT_GE(score, 1.0 - 1e-8); else EXPECT_NEAR(score, 0.0, 1e-8);
      }
    }
  }
}

TEST(CheckOverlap, CrossingPathsOverlap) {
  BinaryMatrix w(2, 2);
  w << 0, 1, 1, 0;
  EXPECT_TRUE(check_overlap(w, Matrix(4, 0)).overlap);
  const PanelDataset d(Matrix::Zero(8, 3), fixtures::example_paths());
  EXPECT_TRUE(check_overlap(d, stratum_basis(d)).overlap);
}

TEST(PrimalWeights, AgreeWithDual) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  int compared = 0;
  for (int rep = 0; compared < 30 && rep < 500; ++rep) {
    auto d = small_panel(rng, 4 + rep % 3, 2 + rep % 2);
    BasisMatrix basis = rep % 3 == 0 ? no_basis(d) : stratum_basis(d);
    if (rep % 4 == 1) {
      basis.values = Matrix(d.n_units() * d.n_periods(), 1);
      for (Eigen::Index r = 0; r < basis.values.rows(); ++r) basis.values(r, 0) = nd(rng);
      basis.names = {"z"};
    }
    if (!check_overlap(d, basis).overlap) continue;
    ++compared;
    const auto primal = primal_weights(d.treatments(), basis.values);
    const auto dual = estimate(d, basis);
    EXPECT_LE((primal.weights - dual.weights.weights).lpNorm<Eigen::Infinity>(), 1e-5) << "rep " << rep;
  }
  EXPECT_EQ(compared, 30);
}

TEST(TwoWayFe, MatchesDummyRegression) {
  std::mt19937_64 rng(8);
  const auto d = small_panel(rng, 12, 4);
  const auto n = d.n_units(), periods = d.n_periods();
  Matrix x = Matrix::Zero(n * periods, n + periods);
  Vector y(n * periods);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index t = 0; t < periods; ++t) {
      const auto r = i * periods + t;
      x(r, i) = 1.0;
      if (t > 0) x(r, n + t - 1) = 1.0;
      x(r, n + periods - 1) = d.treatments()(i, t);
      y(r) = d.outcomes()(i, t);
    }
  }
  const Vector beta = x.colPivHouseholderQr().solve(y);
  EXPECT_NEAR(two_way_fe(d.outcomes(), d.treatments()), beta(n + periods - 1), 1e-10);
  const Matrix om = two_way_fe_weights(d.treatments());
  EXPECT_NEAR(om.cwiseProduct(d.outcomes()).mean(), beta(n + periods - 1), 1e-10);
  EXPECT_THROW(two_way_fe_weights(BinaryMatrix::Ones(3, 3)), IdentificationError);
}

TEST(SolverConfig, ParsesAndValidates) {
  const auto path = write_temp("solver.cfg", "# solver\ntol_grad = 1e-9\nmax_iter = 50\nbasis = none\n");
  const auto c = SolverConfig::load(path);
  EXPECT_EQ(c.tol_grad, 1e-9);
  EXPECT_EQ(c.max_iter, 50);
  EXPECT_EQ(c.basis, "none");
  EXPECT_EQ(c.tol_obj, 1e-12);
  KeyValueConfig bad;
  bad.set("max_iter", "0");
  EXPECT_THROW(SolverConfig::from(bad), ValidationError);
  bad.set("max_iter", "ten");
  EXPECT_THROW(SolverConfig::from(bad), ValidationError);
}

TEST(FitDual, IterationCapRaises) {
  const auto sim = simulated(300);
  SolverConfig c;
  c.max_iter = 1;
  c.tol_grad = 1e-300;
  EXPECT_THROW(fit_dual(sim.data, stratum_basis(sim.data), c), NumericalError);
}

TEST(Basis, Presets) {
  Matrix x(8, 2);
  for (Eigen::Index i = 0; i < 8; ++i) {
    x(i, 0) = static_cast<double>(i);
    x(i, 1) = -static_cast<double>(i);
  }
  const PanelDataset d(Matrix::Zero(8, 3), fixtures::example_paths(), x, {}, {}, {"xa", "xb"});
  const auto stat = stat_mean(d.treatments());
  const auto sbp = BasisSpec::parse("stratum-by-period").evaluate(d, stat);
  EXPECT_EQ(sbp.dim(), 6);
  EXPECT_EQ(sbp.n_psi0, 0);
  EXPECT_EQ(sbp.names[0], "S=1/3:t2");
  EXPECT_EQ(sbp.values(1 * 3 + 1, 0), 1.0);  // unit 100 is in stratum 1/3
  EXPECT_EQ(sbp.values(1 * 3 + 0, 0), 0.0);
  EXPECT_EQ(sbp.values(0 * 3 + 1, 0), 0.0);
  const auto cov = BasisSpec::parse("covariate-linear").evaluate(d, stat);
  EXPECT_EQ(cov.dim(), 4);
  EXPECT_EQ(cov.n_psi0, 4);
  EXPECT_EQ(cov.names[1], "xa:t3");
  EXPECT_EQ(cov.values(5 * 3 + 2, 1), 5.0);
  EXPECT_EQ(cov.values(5 * 3 + 0, 1), 0.0);
  const auto both = BasisSpec::parse("stratum-by-period+covariate-linear").evaluate(d, stat);
  EXPECT_EQ(both.dim(), 10);
  EXPECT_EQ(both.n_psi0, 4);
  EXPECT_EQ(both.names[0], "xa:t2");
  EXPECT_EQ(BasisSpec::parse("none").evaluate(d, stat).dim(), 0);
  EXPECT_THROW(BasisSpec::parse("quadratic"), ValidationError);
  const PanelDataset bare(Matrix::Zero(8, 3), fixtures::example_paths());
  EXPECT_THROW(BasisSpec::parse("covariate-linear").evaluate(bare, stat), ValidationError);
}

TEST(Basis, CustomFile) {
  const PanelDataset d(Matrix::Zero(2, 2), (BinaryMatrix(2, 2) << 0, 1, 0, 0).finished());
  const auto stat = stat_mean(d.treatments());
  const auto path = write_temp("basis.csv", "unit,time,f\n1,1,0.5\n1,2,1.5\n2,1,-1\n2,2,2\n");
  const auto b = BasisSpec::parse("custom:" + path).evaluate(d, stat);
  ASSERT_EQ(b.dim(), 1);
  EXPECT_EQ(b.names[0], "f");
  EXPECT_EQ(b.values(1, 0), 1.5);
  EXPECT_EQ(b.values(2, 0), -1.0);
  const auto missing = write_temp("basis_missing.csv", "unit,time,f\n1,1,0.5\n1,2,1.5\n2,1,-1\n");
  EXPECT_THROW(BasisSpec::parse("custom:" + missing).evaluate(d, stat), ValidationError);
  const auto nonfinite = write_temp("basis_inf.csv", "unit,time,f\n1,1,0.5\n1,2,inf\n2,1,-1\n2,2,2\n");
  try {
    const auto unused = BasisSpec::parse("custom:" + nonfinite).evaluate(d, stat);
    FAIL() << unused.dim();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("unit 1"), std::string::npos);
  }
}
