#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include "drpanel/assign_models.hpp"
#include "drpanel/basis.hpp"
#include "drpanel/csv.hpp"
#include "drpanel/estimator.hpp"
#include "drpanel/inference.hpp"
#include "drpanel/mc_harness.hpp"
#include "drpanel/panel.hpp"
#include "drpanel/support_id.hpp"

namespace drpanel::cli {
namespace {

std::string sig(double v) { return csv::format_sig(v, 6); }

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ValidationError("cannot write " + path);
  return f;
}

void kv(std::ostream& out, const std::string& key, const std::string& value) {
  out << std::left << std::setw(16) << key << value << '\n' << std::right;
}

struct SupportArgs {
  std::string support;
  bool normalize = false;
  std::string stat = "mean";
  std::string set = "dr";
  std::string csv;
};

struct EstimateArgs {
  std::string data;
  std::string stat = "mean";
  std::string basis;
  std::string config;
  int bootstrap = 0;
  long long seed = 1;
  double level = 0.95;
  int threads = 0;
  std::string weights_out;
  std::string replicates_out;
  std::string summary_out;
  bool check_overlap = false;
};

struct SimArgs {
  std::string config;
  std::string out;
  std::string latents;
  long long seed = -1;
  long long n = -1;
  int replicate = 0;
};

struct ExperimentArgs {
  std::string config;
  int reps = 0;
  int bootstrap = -1;
  long long seed = -1;
  int threads = 0;
  std::string out;
  std::string summary;
};

AssignmentSupport load(const SupportArgs& a) { return load_support(a.support, a.normalize); }

void add_support_options(CLI::App* cmd, SupportArgs& a) {
  cmd->add_option("--support", a.support, "support CSV (prob + path or per-period columns)")->required();
  cmd->add_flag("--normalize", a.normalize, "rescale probabilities that do not sum to one");
}

int cmd_fe_weights(const SupportArgs& a, bool with_stat, std::ostream& out) {
  const auto support = load(a);
  const auto w = fe_weights(support);
  out << "# two-way fixed-effects weights\n";
  write_weights_table(out, support, w);
  if (with_stat) {
    const auto stat = StatisticSpec::parse(a.stat).compute(support.paths());
    out << "\n# mean weight by stratum of " << a.stat << "\n";
    write_aggregated_table(out, aggregate_weights(support, w, stat));
  }
  if (!a.csv.empty()) {
    auto f = open_out(a.csv);
    write_weights_csv(f, support, w);
  }
  return kExitOk;
}

int cmd_dr_weights(const SupportArgs& a, std::ostream& out) {
  const auto support = load(a);
  const auto kind = parse_weight_set(a.set);
  const auto stat = StatisticSpec::parse(a.stat).compute(support.paths());
  const auto system = build_constraints(support, kind, &stat);
  MinNormResult res = [&] {
    try {
      return solve_min_norm(support, system);
    } catch (const InfeasibleError&) {
      auto rep = check_feasibility(support, kind, &stat);
      const auto what = to_string(kind) + " weight set is empty: " + rep.summary(support);
      throw InfeasibleError(what, std::move(rep));
    }
  }();
  out << "# minimum-norm " << to_string(kind) << " weights, statistic " << a.stat << "\n"
      << "# objective: sum_k pi_k sum_t w_kt^2\n"
      << "# normalization: (1/T) sum_kt pi_k w_kt W_kt = 1 (no 1/|W| factor)\n";
  write_weights_table(out, support, res.weights);
  out << "\n# mean weight by stratum\n";
  write_aggregated_table(out, aggregate_weights(support, res.weights, stat));
  out << "\n";
  kv(out, "objective", sig(res.objective));
  kv(out, "max_violation", sig(system.max_violation(res.weights.weights)));
  kv(out, "kkt_residual", sig(res.kkt.max()));
  kv(out, "iterations", std::to_string(res.iterations));
  if (!a.csv.empty()) {
    auto f = open_out(a.csv);
    write_weights_csv(f, support, res.weights);
  }
  return kExitOk;
}

int cmd_feasibility(const SupportArgs& a, std::ostream& out) {
  const auto support = load(a);
  const auto stat = StatisticSpec::parse(a.stat).compute(support.paths());
  std::vector<WeightSetKind> kinds;
  if (a.set == "all") {
    kinds = {WeightSetKind::outc, WeightSetKind::design, WeightSetKind::dr};
  } else {
    kinds = {parse_weight_set(a.set)};
  }
  for (auto kind : kinds) {
    const auto rep = check_feasibility(support, kind, &stat);
    out << rep.summary(support) << '\n';
    if (rep.witness) out << "  witness max violation " << sig(rep.witness_violation) << '\n';
  }
  return kExitOk;
}

int cmd_stats(const SupportArgs& a, const std::string& data_path, std::ostream& out) {
  BinaryMatrix paths;
  std::vector<std::string> labels;
  if (!data_path.empty()) {
    const auto data = load_panel(data_path);
    paths = data.treatments();
    labels = data.unit_ids();
  } else if (!a.support.empty()) {
    const auto support = load(a);
    paths = support.paths();
    for (Eigen::Index k = 0; k < support.size(); ++k) labels.push_back(std::to_string(k + 1));
  } else {
    throw CLI::RequiredError("--support or --data");
  }
  const auto stat = StatisticSpec::parse(a.stat).compute(paths);
  out << std::setw(10) << (data_path.empty() ? "row" : "unit") << std::setw(10) << "path" << std::setw(16) << "S"
      << std::setw(9) << "stratum" << '\n';
  for (Eigen::Index k = 0; k < paths.rows(); ++k) {
    std::string path;
    for (Eigen::Index t = 0; t < paths.cols(); ++t) path += paths(k, t) ? '1' : '0';
    const int s = stat.stratum_of(k);
    out << std::setw(10) << labels[static_cast<std::size_t>(k)] << std::setw(10) << path << std::setw(16)
        << stat.label(s) << std::setw(9) << s + 1 << '\n';
  }
  out << "\n" << stat.n_strata() << " strata\n";
  for (int s = 0; s < stat.n_strata(); ++s) {
    std::set<std::string> distinct;
    for (auto k : stat.members(s)) {
      std::string path;
      for (Eigen::Index t = 0; t < paths.cols(); ++t) path += paths(k, t) ? '1' : '0';
      distinct.insert(path);
    }
    out << std::setw(4) << s + 1 << std::setw(16) << stat.label(s) << std::setw(8) << stat.members(s).size()
        << " rows, " << distinct.size() << " distinct paths" << (distinct.size() < 2 ? " (no overlap)" : "") << '\n';
  }
  return kExitOk;
}

int cmd_estimate(const EstimateArgs& a, std::ostream& out, std::ostream& err) {
  SolverConfig config;
  if (!a.config.empty()) config = SolverConfig::load(a.config);
  if (!a.basis.empty()) config.basis = a.basis;
  const auto data = load_panel(a.data);
  const auto stat = StatisticSpec::parse(a.stat).compute(data.treatments());
  const auto basis = BasisSpec::parse(config.basis).evaluate(data, stat);
  if (a.check_overlap) {
    const auto rep = check_overlap(data, basis);
    if (!rep.overlap) throw NoOverlapError(rep.description);
  }
  EstimateResult est;
  try {
    est = estimate(data, basis, config);
  } catch (const NoOverlapError& e) {
    const auto rep = check_overlap(data, basis);
    err << "drpanel: " << e.what() << '\n' << "drpanel: " << rep.description << '\n';
    return kExitNumerical;
  }
  kv(out, "tau_hat", sig(est.tau_hat));
  kv(out, "normalizer", sig(est.normalizer));
  kv(out, "n_units", std::to_string(data.n_units()));
  kv(out, "n_periods", std::to_string(data.n_periods()));
  kv(out, "statistic", a.stat + " (" + std::to_string(stat.n_strata()) + " strata)");
  kv(out, "basis", config.basis + " (" + std::to_string(basis.dim()) + " functions)");
  kv(out, "objective", sig(est.diagnostics.objective));
  kv(out, "iterations", std::to_string(est.diagnostics.iterations));
  kv(out, "grad_norm", sig(est.diagnostics.grad_norm));
  if (!a.weights_out.empty()) {
    auto f = open_out(a.weights_out);
    write_sample_weights_csv(f, data, est.weights);
  }
  if (a.bootstrap > 0) {
    BootstrapOptions bo;
    bo.replicates = a.bootstrap;
    bo.seed = static_cast<std::uint64_t>(a.seed);
    bo.level = a.level;
    bo.threads = a.threads;
    const auto boot = bootstrap(data, basis, config, bo, &est);
    const double se = std::sqrt(boot.sigma2_hat / static_cast<double>(data.n_units()));
    kv(out, "sigma2_hat", sig(boot.sigma2_hat));
    kv(out, "se", sig(se));
    std::ostringstream ci;
    ci << "[" << sig(boot.ci.first) << ", " << sig(boot.ci.second) << "] at " << sig(boot.ci_level * 100) << "%";
    kv(out, "ci", ci.str());
    kv(out, "n_replicates", std::to_string(boot.replicates.size()));
    kv(out, "n_failed", std::to_string(boot.failed.size()));
    kv(out, "seed", std::to_string(boot.seed));
    if (!a.replicates_out.empty()) {
      auto f = open_out(a.replicates_out);
      write_replicates_csv(f, boot);
    }
    if (!a.summary_out.empty()) {
      auto f = open_out(a.summary_out);
      write_bootstrap_summary(f, boot);
    }
  } else if (!a.replicates_out.empty() || !a.summary_out.empty()) {
    throw ValidationError("--replicates-out and --summary-out need --bootstrap B");
  }
  return kExitOk;
}

int cmd_simulate(const SimArgs& a, std::ostream& out) {
  auto cfg = a.config.empty() ? KeyValueConfig{} : KeyValueConfig::load(a.config);
  if (a.seed >= 0) cfg.set("seed", std::to_string(a.seed));
  if (a.n > 0) cfg.set("n", std::to_string(a.n));
  const auto spec = DgpSpec::from(cfg);
  const auto sim = simulate_dataset(spec, a.replicate);
  {
    auto f = open_out(a.out);
    write_panel(f, sim.data);
  }
  if (!a.latents.empty()) {
    auto f = open_out(a.latents);
    write_latents(f, sim.data.unit_ids(), sim.latents);
  }
  out << "wrote " << sim.data.n_units() << " units x " << sim.data.n_periods() << " periods to " << a.out << '\n';
  return kExitOk;
}

int cmd_experiment(const ExperimentArgs& a, std::ostream& out) {
  auto cfg = KeyValueConfig::load(a.config);
  if (a.reps > 0) cfg.set("reps", std::to_string(a.reps));
  if (a.bootstrap >= 0) cfg.set("bootstrap", std::to_string(a.bootstrap));
  if (a.seed >= 0) cfg.set("seed", std::to_string(a.seed));
  if (a.threads > 0) cfg.set("threads", std::to_string(a.threads));
  const auto spec = DgpSpec::from(cfg);
  const auto options = ExperimentOptions::from(cfg);
  const auto result = run_experiment(spec, options);
  write_summary_table(out, result);
  if (!a.out.empty()) {
    auto f = open_out(a.out);
    write_results_csv(f, result);
  }
  if (!a.summary.empty()) {
    auto f = open_out(a.summary);
    write_summary_table(f, result);
  }
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Doubly robust balancing weights for binary-treatment panels", "drpanel"};
  app.require_subcommand(1);

  SupportArgs fe, dr, feas, st;
  std::string stats_data;
  auto* fe_cmd = app.add_subcommand("fe-weights", "population two-way fixed-effects weights");
  add_support_options(fe_cmd, fe);
  auto* fe_stat = fe_cmd->add_option("--stat", fe.stat, "also aggregate by this statistic");
  fe_cmd->add_option("--csv", fe.csv, "write k,path,prob,w1..wT");

  auto* dr_cmd = app.add_subcommand("dr-weights", "minimum-norm population weights in a constraint set");
  add_support_options(dr_cmd, dr);
  dr_cmd->add_option("--stat", dr.stat, "mean | markov | static-logit:<psi> | custom:<file>")->capture_default_str();
  dr_cmd->add_option("--set", dr.set, "dr | outc | design")->capture_default_str();
  dr_cmd->add_option("--csv", dr.csv, "write k,path,prob,w1..wT");

  auto* feas_cmd = app.add_subcommand("feasibility", "pattern scan and LP check of the weight sets");
  add_support_options(feas_cmd, feas);
  feas.set = "all";
  feas_cmd->add_option("--stat", feas.stat, "sufficient statistic")->capture_default_str();
  feas_cmd->add_option("--set", feas.set, "outc | design | dr | all")->capture_default_str();

  auto* st_cmd = app.add_subcommand("stats", "sufficient statistic and strata");
  st_cmd->add_option("--support", st.support, "support CSV");
  st_cmd->add_flag("--normalize", st.normalize, "rescale probabilities");
  st_cmd->add_option("--data", stats_data, "panel CSV");
  st_cmd->add_option("--stat", st.stat, "sufficient statistic")->capture_default_str();

  EstimateArgs est, boot;
  boot.bootstrap = 400;
  auto add_estimate_options = [](CLI::App* cmd, EstimateArgs& a) {
    cmd->add_option("--data", a.data, "panel CSV unit,time,y,w[,x...]")->required();
    cmd->add_option("--stat", a.stat, "sufficient statistic")->capture_default_str();
    cmd->add_option("--basis", a.basis, "none | stratum-by-period | covariate-linear | custom:<file>, joined by +");
    cmd->add_option("--config", a.config, "solver key = value file");
    cmd->add_option("--seed", a.seed, "bootstrap seed")->capture_default_str();
    cmd->add_option("--level", a.level, "confidence level")->capture_default_str();
    cmd->add_option("--threads", a.threads, "worker cap (also DRPANEL_THREADS)");
    cmd->add_option("--weights-out", a.weights_out, "write unit,time,w,weight");
    cmd->add_option("--replicates-out", a.replicates_out, "write replicate,tau_hat");
    cmd->add_option("--summary-out", a.summary_out, "write the bootstrap summary block");
    cmd->add_flag("--check-overlap", a.check_overlap, "run the separation search before fitting");
  };
  auto* est_cmd = app.add_subcommand("estimate", "doubly robust point estimate");
  add_estimate_options(est_cmd, est);
  est_cmd->add_option("--bootstrap", est.bootstrap, "bootstrap replicates (0 = none)");
  auto* boot_cmd = app.add_subcommand("bootstrap", "estimate with unit-level bootstrap inference");
  add_estimate_options(boot_cmd, boot);
  boot_cmd->add_option("--replicates,-B", boot.bootstrap, "bootstrap replicates")->capture_default_str()
      ->check(CLI::Range(2, 1000000));

  SimArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "draw one panel from a DGP config");
  sim_cmd->add_option("--config", sim.config, "DGP key = value file");
  sim_cmd->add_option("--out", sim.out, "panel CSV")->required();
  sim_cmd->add_option("--latents", sim.latents, "write unit,u");
  sim_cmd->add_option("--seed", sim.seed, "override the config seed");
  sim_cmd->add_option("--n", sim.n, "override the number of units");
  sim_cmd->add_option("--replicate", sim.replicate, "replicate index")->capture_default_str();

  ExperimentArgs exp;
  auto* exp_cmd = app.add_subcommand("experiment", "Monte Carlo comparison of the DR and FE estimators");
  exp_cmd->add_option("--config", exp.config, "experiment key = value file")->required();
  exp_cmd->add_option("--reps", exp.reps, "override reps");
  exp_cmd->add_option("--bootstrap", exp.bootstrap, "override bootstrap replicates");
  exp_cmd->add_option("--seed", exp.seed, "override seed");
  exp_cmd->add_option("--threads", exp.threads, "worker cap");
  exp_cmd->add_option("--out", exp.out, "per-replicate CSV");
  exp_cmd->add_option("--summary", exp.summary, "summary table file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "drpanel: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*fe_cmd) return cmd_fe_weights(fe, fe_stat->count() > 0, out);
    if (*dr_cmd) return cmd_dr_weights(dr, out);
    if (*feas_cmd) return cmd_feasibility(feas, out);
    if (*st_cmd) return cmd_stats(st, stats_data, out);
    if (*est_cmd) return cmd_estimate(est, out, err);
    if (*boot_cmd) return cmd_estimate(boot, out, err);
    if (*sim_cmd) return cmd_simulate(sim, out);
    if (*exp_cmd) return cmd_experiment(exp, out);
  } catch (const CLI::ParseError& e) {
    err << "drpanel: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  } catch (const ValidationError& e) {
    err << "drpanel: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericalError& e) {
    err << "drpanel: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "drpanel: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitUsage;
}

}  // namespace drpanel::cli
