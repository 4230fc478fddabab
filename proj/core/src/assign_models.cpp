#include "drpanel/assign_models.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <sstream>

#include "drpanel/csv.hpp"
#include "drpanel/error.hpp"

namespace drpanel {
namespace {

std::vector<int> row_of(const BinaryMatrix& paths, Eigen::Index r) {
  std::vector<int> row(static_cast<std::size_t>(paths.cols()));
  for (Eigen::Index t = 0; t < paths.cols(); ++t) row[static_cast<std::size_t>(t)] = paths(r, t);
  return row;
}

std::string rational_label(const Rational& q) {
  if (denominator(q) == 1) return numerator(q).str();
  return numerator(q).str() + "/" + denominator(q).str();
}

}  // namespace

std::string to_string(StatKind kind) {
  switch (kind) {
    case StatKind::mean: return "mean";
    case StatKind::static_logit: return "static-logit";
    case StatKind::markov: return "markov";
    case StatKind::exponential_family: return "exponential-family";
  }
  return "unknown";
}

SufficientStatistic::SufficientStatistic(StatKind kind, std::vector<StatValue> values)
    : kind_(kind), values_(std::move(values)) {
  std::map<StatValue, int> index;
  for (const auto& v : values_) index.emplace(v, 0);
  int s = 0;
  for (auto& [value, id] : index) {
    id = s++;
    stratum_values_.push_back(value);
  }
  members_.resize(stratum_values_.size());
  stratum_.reserve(values_.size());
  for (std::size_t r = 0; r < values_.size(); ++r) {
    const int id = index.at(values_[r]);
    stratum_.push_back(id);
    members_[static_cast<std::size_t>(id)].push_back(static_cast<Eigen::Index>(r));
  }
}

std::string SufficientStatistic::label(int s) const {
  const auto& v = stratum_value(s);
  if (v.size() == 1) return rational_label(v[0]);
  std::string out = "(";
  for (std::size_t j = 0; j < v.size(); ++j) out += (j ? "," : "") + rational_label(v[j]);
  return out + ")";
}

Vector SufficientStatistic::value_as_double(Eigen::Index row) const {
  const auto& v = values_[static_cast<std::size_t>(row)];
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t j = 0; j < v.size(); ++j) out(static_cast<Eigen::Index>(j)) = v[j].convert_to<double>();
  return out;
}

SufficientStatistic stat_mean(const BinaryMatrix& paths) {
  std::vector<StatValue> values;
  const auto t = paths.cols();
  for (Eigen::Index r = 0; r < paths.rows(); ++r) {
    values.push_back({Rational(paths.row(r).sum(), t)});
  }
  return SufficientStatistic(StatKind::mean, std::move(values));
}

SufficientStatistic stat_static_logit(const BinaryMatrix& paths, const Matrix& schedule) {
  const auto t = paths.cols();
  if (schedule.rows() != t) throw ValidationError("static-logit schedule needs one row per period");
  if (!schedule.allFinite()) throw ValidationError("static-logit schedule must be finite");
  // Doubles convert to rationals exactly, so equal sums are detected exactly.
  std::vector<std::vector<Rational>> psi(static_cast<std::size_t>(t));
  for (Eigen::Index s = 0; s < t; ++s) {
    for (Eigen::Index j = 0; j < schedule.cols(); ++j) psi[static_cast<std::size_t>(s)].emplace_back(schedule(s, j));
  }
  std::vector<StatValue> values;
  for (Eigen::Index r = 0; r < paths.rows(); ++r) {
    StatValue v(static_cast<std::size_t>(schedule.cols()), Rational(0));
    for (Eigen::Index s = 0; s < t; ++s) {
      if (!paths(r, s)) continue;
      for (std::size_t j = 0; j < v.size(); ++j) v[j] += psi[static_cast<std::size_t>(s)][j];
    }
    for (auto& c : v) c /= t;
    values.push_back(std::move(v));
  }
  return SufficientStatistic(StatKind::static_logit, std::move(values));
}

SufficientStatistic stat_static_logit(const BinaryMatrix& paths, const Vector& schedule) {
  return stat_static_logit(paths, Matrix(schedule));
}

SufficientStatistic stat_markov(const BinaryMatrix& paths) {
  const auto t = paths.cols();
  if (t < 2) throw ValidationError("Markov statistic needs T >= 2");
  std::vector<StatValue> values;
  for (Eigen::Index r = 0; r < paths.rows(); ++r) {
    long interior = 0;
    long stays = 0;
    for (Eigen::Index s = 1; s + 1 < t; ++s) interior += paths(r, s);
    for (Eigen::Index s = 1; s < t; ++s) stays += paths(r, s) * paths(r, s - 1);
    values.push_back({Rational(interior), Rational(stays), Rational(paths(r, 0)), Rational(paths(r, t - 1))});
  }
  return SufficientStatistic(StatKind::markov, std::move(values));
}

SufficientStatistic stat_exponential_family(const BinaryMatrix& paths, const PathStatistic& s_fn) {
  std::vector<StatValue> values;
  std::size_t dim = 0;
  for (Eigen::Index r = 0; r < paths.rows(); ++r) {
    auto s = s_fn(row_of(paths, r));
    if (r == 0) dim = s.size();
    if (s.size() != dim) throw ValidationError("custom statistic must have a fixed dimension");
    StatValue v;
    for (double x : s) {
      if (!std::isfinite(x)) throw ValidationError("custom statistic must be finite");
      v.emplace_back(x);
    }
    values.push_back(std::move(v));
  }
  return SufficientStatistic(StatKind::exponential_family, std::move(values));
}

StatisticSpec StatisticSpec::parse(const std::string& text) {
  StatisticSpec spec;
  spec.text_ = text;
  if (text == "mean") {
    spec.kind_ = StatKind::mean;
  } else if (text == "markov") {
    spec.kind_ = StatKind::markov;
  } else if (text.rfind("static-logit:", 0) == 0) {
    spec.kind_ = StatKind::static_logit;
    for (const auto& f : csv::split(text.substr(13))) {
      auto v = csv::parse_double(f);
      if (!v) throw ValidationError("bad static-logit schedule entry '" + f + "'");
      spec.schedule_.push_back(*v);
    }
  } else if (text.rfind("custom:", 0) == 0) {
    spec.kind_ = StatKind::exponential_family;
    const auto table = csv::read_file(text.substr(7));
    const auto cp = table.require_column("path");
    for (const auto& row : table.rows) {
      std::vector<double> s;
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (j == cp) continue;
        auto v = csv::parse_double(row[j]);
        if (!v) throw ValidationError("bad custom statistic value '" + row[j] + "'");
        s.push_back(*v);
      }
      spec.table_.emplace_back(row[cp], std::move(s));
    }
  } else {
    throw ValidationError("unknown statistic '" + text + "' (expected mean, markov, static-logit:<psi>, custom:<file>)");
  }
  return spec;
}

SufficientStatistic StatisticSpec::compute(const BinaryMatrix& paths) const {
  switch (kind_) {
    case StatKind::mean: return stat_mean(paths);
    case StatKind::markov: return stat_markov(paths);
    case StatKind::static_logit: {
      Vector psi = Eigen::Map<const Vector>(schedule_.data(), static_cast<Eigen::Index>(schedule_.size()));
      return stat_static_logit(paths, psi);
    }
    case StatKind::exponential_family: {
      std::map<std::string, std::vector<double>> lookup(table_.begin(), table_.end());
      return stat_exponential_family(paths, [&](const std::vector<int>& path) {
        std::string key;
        for (int w : path) key.push_back(w ? '1' : '0');
        auto it = lookup.find(key);
        if (it == lookup.end()) throw ValidationError("custom statistic has no entry for path " + key);
        return it->second;
      });
    }
  }
  throw ValidationError("unknown statistic kind");
}

double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

SimulatedAssignment simulate_static_logit(Eigen::Index n, Eigen::Index periods, const StaticLogitModel& model,
                                          std::uint64_t seed) {
  if (n < 1 || periods < 1) throw ValidationError("simulation needs n >= 1 and T >= 1");
  if (model.lambda.size() != periods || model.schedule.rows() != periods) {
    throw ValidationError("static-logit model needs lambda and schedule of length T");
  }
  Rng rng(seed);
  SimulatedAssignment out{BinaryMatrix(n, periods), Vector(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = model.latent(rng);
    const Vector a = model.alpha(u);
    if (a.size() != model.schedule.cols()) throw ValidationError("alpha(U) dimension must match the schedule");
    out.latents(i) = u;
    for (Eigen::Index t = 0; t < periods; ++t) {
      const double p = logistic(model.schedule.row(t).dot(a) + model.lambda(t));
      out.treatments(i, t) = bernoulli(rng, p) ? 1 : 0;
    }
  }
  return out;
}

SimulatedAssignment simulate_markov(Eigen::Index n, Eigen::Index periods, const MarkovModel& model, std::uint64_t seed) {
  if (n < 1 || periods < 1) throw ValidationError("simulation needs n >= 1 and T >= 1");
  Rng rng(seed);
  SimulatedAssignment out{BinaryMatrix(n, periods), Vector(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = model.latent(rng);
    out.latents(i) = u;
    int prev = bernoulli(rng, model.initial(u)) ? 1 : 0;
    out.treatments(i, 0) = prev;
    const double a = model.alpha(u);
    const double g = model.gamma(u);
    for (Eigen::Index t = 1; t < periods; ++t) {
      prev = bernoulli(rng, logistic(a + g * prev)) ? 1 : 0;
      out.treatments(i, t) = prev;
    }
  }
  return out;
}

void write_latents(std::ostream& out, const std::vector<std::string>& unit_ids, const Vector& latents) {
  out << "unit,u\n";
  for (Eigen::Index i = 0; i < latents.size(); ++i) {
    out << unit_ids[static_cast<std::size_t>(i)] << ',' << csv::format_exact(latents(i)) << '\n';
  }
}

}  // namespace drpanel
