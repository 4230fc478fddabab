#include "drpanel/mc_harness.hpp"

#include <atomic>
#include <cmath>
#include <iomanip>
#include <exception>
#include <limits>
#include <mutex>
#include <ostream>
#include <random>
#include <thread>

#include "drpanel/assign_models.hpp"
#include "drpanel/csv.hpp"
#include "drpanel/inference.hpp"
#include "drpanel/rng.hpp"

namespace drpanel {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

enum Stream : std::uint64_t { assignment_stream = 1, outcome_stream = 2, bootstrap_stream = 3 };

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& part : csv::split(text)) {
    const auto v = csv::parse_double(part);
    if (!v) throw ValidationError("expected a comma-separated list of numbers, got '" + text + "'");
    out.push_back(*v);
  }
  return out;
}

template <typename E>
E parse_enum(const std::string& key, const std::string& text, std::initializer_list<E> values) {
  std::string names;
  for (auto v : values) {
    if (to_string(v) == text) return v;
    names += (names.empty() ? "" : ", ") + to_string(v);
  }
  throw ValidationError(key + ": unknown value '" + text + "' (expected " + names + ")");
}

Matrix resample_rows(const Matrix& m, const std::vector<Eigen::Index>& idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = m.row(idx[k]);
  return out;
}

BinaryMatrix resample_rows(const BinaryMatrix& m, const std::vector<Eigen::Index>& idx) {
  BinaryMatrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = m.row(idx[k]);
  return out;
}

// Unit-level bootstrap of the two-way FE coefficient, sharing the DR replicate draws.
double fe_bootstrap_sigma2(const SimulatedPanel& sim, double tau_hat, int replicates, std::uint64_t seed,
                           int* failed) {
  const auto n = sim.data.n_units();
  std::vector<double> sq;
  for (int b = 0; b < replicates; ++b) {
    const Vector m = bootstrap_multiplicity(n, seed, b);
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (int k = 0; k < static_cast<int>(m(i)); ++k) idx.push_back(i);
    }
    try {
      const double v = two_way_fe(resample_rows(sim.data.outcomes(), idx), resample_rows(sim.data.treatments(), idx));
      sq.push_back((v - tau_hat) * (v - tau_hat));
    } catch (const NumericalError&) {
      ++*failed;
    }
  }
  if (sq.size() < 2) return kNaN;
  return static_cast<double>(n) * stats::pairwise_sum(sq) / static_cast<double>(sq.size());
}

void run_replicate(const DgpSpec& spec, const ExperimentOptions& opt, int rep, std::vector<ReplicateRow>& rows) {
  const auto sim = simulate_dataset(spec, rep);
  const auto& data = sim.data;
  const auto& w = data.treatments();
  const double cells = static_cast<double>(data.n_units() * data.n_periods());
  const double z = stats::normal_quantile(0.5 + opt.level / 2.0);
  const auto boot_seed = derive_seed(derive_seed(spec.seed, static_cast<std::uint64_t>(rep)), bootstrap_stream);
  const bool constant = spec.effect == EffectModel::constant;
  for (std::size_t e = 0; e < opt.estimators.size(); ++e) {
    ReplicateRow row;
    row.replicate = rep;
    row.estimator = opt.estimators[e];
    row.sigma2_hat = kNaN;
    row.decomposition_gap = kNaN;
    try {
      Matrix omega;
      if (row.estimator == EstimatorKind::dr) {
        const auto stat = StatisticSpec::parse(spec.stat).compute(w);
        const auto basis = BasisSpec::parse(spec.basis).evaluate(data, stat);
        const auto est = estimate(data, basis, opt.solver);
        row.tau_hat = est.tau_hat;
        omega = est.weights.weights;
        const Matrix ow = omega.cwiseProduct(w.cast<double>());
        const double tau_emp = ow.cwiseProduct(sim.cond_effect).sum() / cells;
        const double noise_term = omega.cwiseProduct(sim.noise).sum() / cells;
        const double effect_term = ow.cwiseProduct(sim.effect - sim.cond_effect).sum() / cells;
        row.target = constant ? spec.tau : tau_emp;
        row.decomposition_gap = std::abs(row.tau_hat - tau_emp - (noise_term + effect_term));
        if (opt.bootstrap > 0) {
          BootstrapOptions bo;
          bo.replicates = opt.bootstrap;
          bo.seed = boot_seed;
          bo.level = opt.level;
          bo.threads = 1;
          row.sigma2_hat = bootstrap(data, basis, opt.solver, bo, &est).sigma2_hat;
        }
      } else {
        omega = two_way_fe_weights(w);
        row.tau_hat = omega.cwiseProduct(data.outcomes()).sum() / cells;
        const double tau_emp = omega.cwiseProduct(w.cast<double>()).cwiseProduct(sim.cond_effect).sum() / cells;
        row.target = constant ? spec.tau : tau_emp;
        if (opt.bootstrap > 0) {
          int failed = 0;
          row.sigma2_hat = fe_bootstrap_sigma2(sim, row.tau_hat, opt.bootstrap, boot_seed, &failed);
          if (static_cast<double>(failed) > 0.1 * opt.bootstrap) throw NumericalError("FE bootstrap failures");
        }
      }
      if (opt.bootstrap > 0) {
        const double se = std::sqrt(row.sigma2_hat / static_cast<double>(data.n_units()));
        row.covered = std::abs(row.tau_hat - row.target) <= z * se ? 1 : 0;
      }
      row.ok = true;
    } catch (const NumericalError&) {
      row.ok = false;
    }
    rows[static_cast<std::size_t>(rep) * opt.estimators.size() + e] = row;
  }
}

EstimatorSummary summarize(EstimatorKind kind, const std::vector<ReplicateRow>& rows, bool bootstrap) {
  EstimatorSummary s;
  s.estimator = kind;
  std::vector<double> dev, tau, sigma2, sq;
  int covered = 0;
  for (const auto& r : rows) {
    if (r.estimator != kind) continue;
    if (!r.ok) {
      ++s.n_failed;
      continue;
    }
    ++s.n_ok;
    dev.push_back(r.tau_hat - r.target);
    sq.push_back(dev.back() * dev.back());
    tau.push_back(r.tau_hat);
    if (bootstrap) {
      sigma2.push_back(r.sigma2_hat);
      covered += r.covered == 1;
    }
  }
  const int total = s.n_ok + s.n_failed;
  s.flagged = total > 0 && s.n_failed > 0.1 * total;
  s.mean_sigma2 = kNaN;
  s.coverage = kNaN;
  s.normality.a2 = s.normality.a2_adjusted = s.normality.p_value = kNaN;
  if (s.n_ok == 0) {
    s.mean_bias = s.mc_sd = s.mc_se = s.rmse = s.sd_tau_hat = kNaN;
    return s;
  }
  s.mean_bias = stats::mean(dev);
  s.rmse = std::sqrt(stats::mean(sq));
  if (s.n_ok >= 2) {
    s.mc_sd = std::sqrt(stats::variance(dev));
    s.mc_se = s.mc_sd / std::sqrt(static_cast<double>(s.n_ok));
    s.sd_tau_hat = std::sqrt(stats::variance(tau));
  }
  if (bootstrap) {
    s.mean_sigma2 = stats::mean(sigma2);
    s.coverage = static_cast<double>(covered) / s.n_ok;
  }
  if (s.n_ok >= 8 && s.mc_sd > 0.0) s.normality = stats::anderson_darling(dev);
  return s;
}

std::string num(double v) { return std::isnan(v) ? "" : csv::format_exact(v); }

}  // namespace

std::string to_string(AssignmentModel m) {
  switch (m) {
    case AssignmentModel::fe_confounded: return "fe_confounded";
    case AssignmentModel::static_logit: return "static_logit";
    case AssignmentModel::markov: return "markov";
  }
  return "unknown";
}

std::string to_string(OutcomeModel m) {
  switch (m) {
    case OutcomeModel::two_way_fe: return "two_way_fe";
    case OutcomeModel::stratum_model: return "stratum_model";
    case OutcomeModel::covariate_general: return "covariate_general";
  }
  return "unknown";
}

std::string to_string(EffectModel m) {
  switch (m) {
    case EffectModel::constant: return "constant";
    case EffectModel::heterogeneous: return "heterogeneous";
  }
  return "unknown";
}

std::string to_string(EstimatorKind k) { return k == EstimatorKind::dr ? "dr" : "fe"; }

std::vector<EstimatorKind> parse_estimators(const std::string& text) {
  std::vector<EstimatorKind> out;
  for (const auto& part : csv::split(text)) {
    out.push_back(parse_enum("estimators", part, {EstimatorKind::dr, EstimatorKind::fe}));
  }
  if (out.empty()) throw ValidationError("estimators: at least one estimator required");
  return out;
}

DgpSpec DgpSpec::from(const KeyValueConfig& cfg) {
  DgpSpec s;
  if (auto v = cfg.get("assignment")) {
    s.assignment = parse_enum("assignment", *v,
                              {AssignmentModel::fe_confounded, AssignmentModel::static_logit, AssignmentModel::markov});
  }
  if (auto v = cfg.get("outcome")) {
    s.outcome = parse_enum("outcome", *v,
                           {OutcomeModel::two_way_fe, OutcomeModel::stratum_model, OutcomeModel::covariate_general});
  }
  if (auto v = cfg.get("effect")) s.effect = parse_enum("effect", *v, {EffectModel::constant, EffectModel::heterogeneous});
  s.n = cfg.get_int("n", s.n);
  s.periods = cfg.get_int("T", s.periods);
  s.tau = cfg.get_double("tau", s.tau);
  s.het_slope = cfg.get_double("het_slope", s.het_slope);
  s.het_sd = cfg.get_double("het_sd", s.het_sd);
  s.noise = cfg.get_double("noise", s.noise);
  s.h_scale = cfg.get_double("h_scale", s.h_scale);
  if (auto v = cfg.get("lambda")) s.lambda = parse_list(*v);
  s.markov_gamma = cfg.get_double("markov_gamma", s.markov_gamma);
  s.seed = static_cast<std::uint64_t>(cfg.get_int("seed", static_cast<long long>(s.seed)));
  s.stat = cfg.get_or("stat", s.assignment == AssignmentModel::markov ? "markov" : s.stat);
  s.basis = cfg.get_or("basis", s.outcome == OutcomeModel::covariate_general ? "stratum-by-period+covariate-linear"
                                                                               : s.basis);
  s.validate();
  return s;
}

void DgpSpec::validate() const {
  if (n < 2 || periods < 2) throw ValidationError("dgp: need n >= 2 and T >= 2");
  if (!lambda.empty() && static_cast<Eigen::Index>(lambda.size()) != periods) {
    throw ValidationError("dgp: lambda needs one value per period");
  }
  if (!(noise >= 0.0) || !(het_sd >= 0.0)) throw ValidationError("dgp: noise scales must be nonnegative");
}

Vector DgpSpec::assignment_intercepts() const {
  if (!lambda.empty()) return Eigen::Map<const Vector>(lambda.data(), periods);
  return Vector::LinSpaced(periods, -0.5, 0.5);
}

SimulatedPanel simulate_dataset(const DgpSpec& spec, int replicate) {
  spec.validate();
  const auto n = spec.n;
  const auto periods = spec.periods;
  const auto rep_seed = derive_seed(spec.seed, static_cast<std::uint64_t>(replicate));
  const Vector lambda = spec.assignment_intercepts();
  auto latent = [](Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); };

  SimulatedAssignment assign;
  const auto assign_seed = derive_seed(rep_seed, assignment_stream);
  switch (spec.assignment) {
    case AssignmentModel::static_logit: {
      StaticLogitModel m{latent, [](double u) { return Vector::Constant(1, u); }, lambda, Matrix::Ones(periods, 1)};
      assign = simulate_static_logit(n, periods, m, assign_seed);
      break;
    }
    case AssignmentModel::markov: {
      const double g = spec.markov_gamma;
      MarkovModel m{latent, [](double u) { return u; }, [g](double) { return g; }, [](double u) { return logistic(u); }};
      assign = simulate_markov(n, periods, m, assign_seed);
      break;
    }
    case AssignmentModel::fe_confounded: {
      Rng rng(assign_seed);
      std::normal_distribution<double> normal(0.0, 1.0);
      assign.treatments.resize(n, periods);
      assign.latents.resize(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        assign.latents(i) = normal(rng);
        for (Eigen::Index t = 0; t < periods; ++t) {
          assign.treatments(i, t) = assign.latents(i) + lambda(t) + normal(rng) > 0.0 ? 1 : 0;
        }
      }
      break;
    }
  }

  Rng rng(derive_seed(rep_seed, outcome_stream));
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto& w = assign.treatments;
  const Vector wbar = w.cast<double>().rowwise().mean();
  Matrix x;
  if (spec.outcome == OutcomeModel::covariate_general) {
    x.resize(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) x(i, 0) = assign.latents(i) + normal(rng);
  }
  SimulatedPanel sim{PanelDataset(Matrix::Zero(n, periods), w, x), assign.latents, Matrix(n, periods),
                     Matrix(n, periods), Matrix(n, periods)};
  Matrix y(n, periods);
  const double dT = static_cast<double>(periods);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = assign.latents(i);
    const double cond = spec.effect == EffectModel::constant ? spec.tau : spec.tau + spec.het_slope * (wbar(i) - 0.5);
    for (Eigen::Index t = 0; t < periods; ++t) {
      const double tt = static_cast<double>(t + 1);
      double y0 = u;
      switch (spec.outcome) {
        case OutcomeModel::two_way_fe: y0 += 0.5 * tt; break;
        case OutcomeModel::stratum_model: y0 += spec.h_scale * tt * wbar(i) * wbar(i); break;
        case OutcomeModel::covariate_general:
          y0 += 0.5 * tt + tt / dT * x(i, 0) + spec.h_scale * tt * wbar(i) * wbar(i);
          break;
      }
      const double eps = spec.noise * normal(rng);
      const double eta = spec.effect == EffectModel::heterogeneous ? spec.het_sd * normal(rng) : 0.0;
      sim.noise(i, t) = eps;
      sim.cond_effect(i, t) = cond;
      sim.effect(i, t) = cond + eta;
      y(i, t) = y0 + eps + w(i, t) * sim.effect(i, t);
    }
  }
  sim.data = sim.data.with_outcomes(std::move(y));
  return sim;
}

ExperimentOptions ExperimentOptions::from(const KeyValueConfig& cfg) {
  ExperimentOptions o;
  o.reps = static_cast<int>(cfg.get_int("reps", o.reps));
  if (auto v = cfg.get("estimators")) o.estimators = parse_estimators(*v);
  o.bootstrap = static_cast<int>(cfg.get_int("bootstrap", o.bootstrap));
  o.level = cfg.get_double("level", o.level);
  o.threads = static_cast<int>(cfg.get_int("threads", o.threads));
  o.solver = SolverConfig::from(cfg);
  if (o.reps < 1) throw ValidationError("reps must be >= 1");
  if (o.bootstrap == 1 || o.bootstrap < 0) throw ValidationError("bootstrap must be 0 or >= 2");
  if (!(o.level > 0.0 && o.level < 1.0)) throw ValidationError("level must be in (0, 1)");
  return o;
}

const EstimatorSummary& ExperimentResult::summary(EstimatorKind k) const {
  for (const auto& s : summaries) {
    if (s.estimator == k) return s;
  }
  throw ValidationError("estimator " + to_string(k) + " was not run");
}

ExperimentResult run_experiment(const DgpSpec& spec, const ExperimentOptions& options) {
  spec.validate();
  ExperimentResult out;
  out.spec = spec;
  out.options = options;
  out.rows.resize(static_cast<std::size_t>(options.reps) * options.estimators.size());
  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    try {
      for (int rep = next++; rep < options.reps; rep = next++) run_replicate(spec, options, rep, out.rows);
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
      next = options.reps;
    }
  };
  const int threads = std::min(resolve_threads(options.threads), options.reps);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
  for (auto k : options.estimators) out.summaries.push_back(summarize(k, out.rows, options.bootstrap > 0));
  return out;
}

void write_results_csv(std::ostream& out, const ExperimentResult& result) {
  out << "replicate,estimator,ok,tau_hat,target,sigma2_hat,covered,decomposition_gap\n";
  for (const auto& r : result.rows) {
    out << r.replicate + 1 << ',' << to_string(r.estimator) << ',' << (r.ok ? 1 : 0) << ',' << (r.ok ? num(r.tau_hat) : "")
        << ',' << (r.ok ? num(r.target) : "") << ',' << (r.ok ? num(r.sigma2_hat) : "") << ','
        << (r.covered < 0 ? "" : std::to_string(r.covered)) << ',' << (r.ok ? num(r.decomposition_gap) : "") << '\n';
  }
}

void write_summary_table(std::ostream& out, const ExperimentResult& result) {
  const auto& s = result.spec;
  out << "assignment=" << to_string(s.assignment) << " outcome=" << to_string(s.outcome)
      << " effect=" << to_string(s.effect) << " n=" << s.n << " T=" << s.periods << " reps=" << result.options.reps
      << " bootstrap=" << result.options.bootstrap << " seed=" << s.seed << '\n';
  const char* cols[] = {"estimator", "ok", "failed", "bias", "mc_se", "bias/se", "mc_sd", "rmse", "coverage", "AD", "AD_p"};
  for (const char* c : cols) out << std::setw(12) << c;
  out << '\n';
  auto f = [](double v) { return std::isnan(v) ? std::string("-") : csv::format_sig(v, 6); };
  for (const auto& e : result.summaries) {
    out << std::setw(12) << (to_string(e.estimator) + (e.flagged ? "*" : "")) << std::setw(12) << e.n_ok
        << std::setw(12) << e.n_failed << std::setw(12) << f(e.mean_bias) << std::setw(12) << f(e.mc_se)
        << std::setw(12) << f(e.mc_se > 0.0 ? e.mean_bias / e.mc_se : kNaN) << std::setw(12) << f(e.mc_sd)
        << std::setw(12) << f(e.rmse) << std::setw(12) << f(e.coverage) << std::setw(12)
        << f(e.normality.a2_adjusted) << std::setw(12) << f(e.normality.p_value) << '\n';
  }
  for (const auto& e : result.summaries) {
    if (e.flagged) out << "* " << to_string(e.estimator) << ": failure rate above 10%\n";
  }
}

}  // namespace drpanel
