#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "drpanel/error.hpp"
#include "drpanel/panel.hpp"
#include "fixtures.hpp"

using namespace drpanel;

namespace {

PanelDataset parse(const std::string& text) {
  std::istringstream in(text);
  return read_panel(in);
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(LoadPanel, MinimalTwoByTwo) {
  const auto d = parse("unit,time,y,w\n1,1,0.5,0\n1,2,1.5,1\n2,1,2,0\n2,2,3,0\n");
  EXPECT_EQ(d.n_units(), 2);
  EXPECT_EQ(d.n_periods(), 2);
  EXPECT_EQ(d.treatments()(0, 1), 1);
  EXPECT_DOUBLE_EQ(d.outcomes()(1, 0), 2.0);
  EXPECT_EQ(d.n_covariates(), 0);
}

TEST(LoadPanel, UnbalancedNamesUnit) {
  const auto msg = error_of("unit,time,y,w\n1,1,0,0\n1,2,0,1\n2,1,0,0\n2,2,0,0\n3,1,0,1\n");
  EXPECT_NE(msg.find("unbalanced"), std::string::npos);
  EXPECT_NE(msg.find("3"), std::string::npos);
}

TEST(LoadPanel, NonBinaryTreatmentNamesCell) {
  const auto msg = error_of("unit,time,y,w\n1,1,0,0\n1,2,0,2\n2,1,0,0\n2,2,0,1\n");
  EXPECT_NE(msg.find("w='2'"), std::string::npos);
  EXPECT_NE(msg.find("unit 1"), std::string::npos);
  EXPECT_NE(msg.find("time 2"), std::string::npos);
}

TEST(LoadPanel, NonNumericOutcome) {
  EXPECT_NE(error_of("unit,time,y,w\n1,1,abc,0\n1,2,0,1\n2,1,0,0\n2,2,0,1\n").find("non-numeric y"), std::string::npos);
}

TEST(LoadPanel, MissingColumnAndTimeVaryingCovariate) {
  EXPECT_FALSE(error_of("unit,time,y\n1,1,0\n").empty());
  EXPECT_NE(error_of("unit,time,y,w,x1\n1,1,0,0,1\n1,2,0,1,2\n2,1,0,0,1\n2,2,0,1,1\n").find("vary"),
            std::string::npos);
}

TEST(LoadPanel, SortsUnitsAndTimes) {
  const auto d = parse("unit,time,y,w\n10,2001,4,1\n2,2000,1,0\n10,2000,3,0\n2,2001,2,1\n");
  ASSERT_EQ(d.unit_ids().size(), 2u);
  EXPECT_EQ(d.unit_ids()[0], "2");
  EXPECT_EQ(d.unit_ids()[1], "10");
  EXPECT_EQ(d.times()[0], 2000);
  EXPECT_DOUBLE_EQ(d.outcomes()(1, 1), 4.0);
}

TEST(PanelDataset, RejectsInvalidShapes) {
  EXPECT_THROW(PanelDataset(Matrix::Zero(1, 2), BinaryMatrix::Zero(1, 2)), ValidationError);
  EXPECT_THROW(PanelDataset(Matrix::Zero(2, 1), BinaryMatrix::Zero(2, 1)), ValidationError);
  BinaryMatrix bad = BinaryMatrix::Zero(2, 2);
  bad(0, 0) = 3;
  EXPECT_THROW(PanelDataset(Matrix::Zero(2, 2), bad), ValidationError);
  Matrix y = Matrix::Zero(2, 2);
  y(1, 1) = std::nan("");
  EXPECT_THROW(PanelDataset(y, BinaryMatrix::Zero(2, 2)), ValidationError);
}

TEST(PanelDataset, RoundTripIsBitExact) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 1e3);
  const Eigen::Index n = 17, t = 4;
  Matrix y(n, t);
  BinaryMatrix w(n, t);
  Matrix x(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index s = 0; s < t; ++s) {
      y(i, s) = normal(rng) / 3.0;
      w(i, s) = static_cast<int>(rng() & 1);
    }
    x(i, 0) = normal(rng) * 1e-7;
    x(i, 1) = normal(rng) * 1e12;
  }
  const PanelDataset d(y, w, x);
  std::stringstream buf;
  write_panel(buf, d);
  const auto back = read_panel(buf);
  EXPECT_TRUE(back == d);
}

TEST(EmpiricalSupport, OneUnitPerPath) {
  const auto w = fixtures::example_paths();
  const PanelDataset d(Matrix::Zero(8, 3), w);
  const auto s = empirical_support(d);
  ASSERT_EQ(s.size(), 8);
  for (Eigen::Index k = 0; k < 8; ++k) EXPECT_DOUBLE_EQ(s.probs()(k), 0.125);
  for (Eigen::Index k = 1; k < 8; ++k) EXPECT_LT(s.path_label(k - 1), s.path_label(k));
}

TEST(EmpiricalSupport, DegenerateSinglePath) {
  BinaryMatrix w(5, 2);
  for (int i = 0; i < 5; ++i) w.row(i) << 0, 1;
  const auto s = empirical_support(PanelDataset(Matrix::Zero(5, 2), w));
  ASSERT_EQ(s.size(), 1);
  EXPECT_DOUBLE_EQ(s.probs()(0), 1.0);
}

TEST(EmpiricalSupport, FrequenciesWithinSamplingError) {
  const auto paths = fixtures::example_paths();
  const auto pi = fixtures::example_rounded_probs();
  std::mt19937_64 rng(11);
  std::discrete_distribution<int> draw(pi.data(), pi.data() + pi.size());
  const int n = 100;
  BinaryMatrix w(n, 3);
  for (int i = 0; i < n; ++i) w.row(i) = paths.row(draw(rng));
  const auto s = empirical_support(PanelDataset(Matrix::Zero(n, 3), w));
  EXPECT_NEAR(s.probs().sum(), 1.0, 1e-12);
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    EXPECT_GE(s.probs()(k), 1.0 / n - 1e-15);
    Eigen::Index match = -1;
    for (Eigen::Index r = 0; r < 8; ++r) {
      if (paths.row(r) == s.paths().row(k)) match = r;
    }
    ASSERT_GE(match, 0);
    const double p = pi(match);
    EXPECT_LE(std::abs(s.probs()(k) - p), 4.0 * std::sqrt(p * (1 - p) / n));
  }
}

TEST(AssignmentSupport, Invariants) {
  BinaryMatrix w(2, 2);
  w << 0, 1, 0, 1;
  EXPECT_THROW(AssignmentSupport(w, Vector::Constant(2, 0.5)), ValidationError);
  w << 0, 1, 1, 0;
  EXPECT_THROW(AssignmentSupport(w, Vector::Constant(2, 0.4)), ValidationError);
  Vector p(2);
  p << 1.2, -0.2;
  EXPECT_THROW(AssignmentSupport(w, p), ValidationError);
  EXPECT_NO_THROW(AssignmentSupport(w, Vector::Constant(2, 0.5)));
  BinaryMatrix big(5, 2);
  big << 0, 0, 0, 1, 1, 0, 1, 1, 0, 0;
  EXPECT_THROW(AssignmentSupport(big, Vector::Constant(5, 0.2)), ValidationError);
}

TEST(SupportFile, PathStringsAndColumnsAgree) {
  std::istringstream a("path,prob\n01,0.25\n10,0.75\n");
  std::istringstream b("prob,w1,w2\n0.25,0,1\n0.75,1,0\n");
  const auto sa = read_support(a);
  const auto sb = read_support(b);
  EXPECT_EQ(sa.paths(), sb.paths());
  EXPECT_EQ(sa.probs(), sb.probs());
  std::stringstream out;
  write_support(out, sa);
  const auto back = read_support(out);
  EXPECT_EQ(back.paths(), sa.paths());
  EXPECT_EQ(back.probs(), sa.probs());
}

TEST(SupportFile, WorkedExampleFixtures) {
  const auto s = fixtures::example_rounded();
  EXPECT_EQ(s.paths(), fixtures::example_paths());
  EXPECT_TRUE(s.probs().isApprox(fixtures::example_rounded_probs()));
  const auto r = fixtures::example_support();
  EXPECT_EQ(r.paths(), fixtures::example_paths());
  EXPECT_LE((r.probs() - fixtures::example_rounded_probs()).lpNorm<Eigen::Infinity>(), 0.005);
}

TEST(WeightTable, RejectsNonFinite) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 1) = INFINITY;
  EXPECT_THROW(WeightTable(m, WeightLevel::sample), NumericalError);
}
