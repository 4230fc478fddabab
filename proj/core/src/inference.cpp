#include "drpanel/inference.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <optional>
#include <ostream>
#include <thread>

#include "drpanel/csv.hpp"
#include "drpanel/rng.hpp"
#include "drpanel/statistics.hpp"

namespace drpanel {
namespace {

// Unbiased draw from {0, ..., n-1} by rejection.
std::uint64_t bounded(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

}  // namespace

int resolve_threads(int requested) {
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("DRPANEL_THREADS")) {
    const auto v = csv::parse_integer(env);
    if (!v || *v < 1) throw ValidationError("DRPANEL_THREADS must be a positive integer");
    n = static_cast<int>(std::min<long long>(*v, 1024));
  }
  if (requested > 0) n = std::min(n, requested);
  return n;
}

Vector bootstrap_multiplicity(Eigen::Index n, std::uint64_t seed, int replicate) {
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(replicate)));
  Vector m = Vector::Zero(n);
  for (Eigen::Index k = 0; k < n; ++k) m(static_cast<Eigen::Index>(bounded(rng, static_cast<std::uint64_t>(n)))) += 1.0;
  return m;
}

BootstrapResult bootstrap(const PanelDataset& data, const BasisMatrix& basis, const SolverConfig& config,
                          const BootstrapOptions& options, const EstimateResult* base) {
  if (options.replicates < 2) throw ValidationError("bootstrap needs at least 2 replicates");
  if (!(options.level > 0.0 && options.level < 1.0)) throw ValidationError("confidence level must be in (0, 1)");
  std::optional<EstimateResult> own;
  if (!base) {
    own = estimate(data, basis, config);
    base = &*own;
  }
  const auto n = data.n_units();
  const int B = options.replicates;
  std::vector<double> tau(static_cast<std::size_t>(B), 0.0);
  std::vector<char> ok(static_cast<std::size_t>(B), 0);
  std::atomic<int> next{0};
  auto worker = [&] {
    DualObjective objective(data.treatments(), basis.values);
    for (int b = next++; b < B; b = next++) {
      const Vector m = bootstrap_multiplicity(n, options.seed, b);
      try {
        objective.set_multiplicity(m);
        const auto sol = fit_dual(objective, config, &base->diagnostics);
        tau[static_cast<std::size_t>(b)] = extract_weights(data, basis, sol, config, &m).tau_hat;
        ok[static_cast<std::size_t>(b)] = 1;
      } catch (const NumericalError&) {
        ok[static_cast<std::size_t>(b)] = 0;
      }
    }
  };
  const int threads = std::min(resolve_threads(options.threads), B);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  BootstrapResult out;
  out.tau_hat = base->tau_hat;
  out.ci_level = options.level;
  out.seed = options.seed;
  out.n_units = n;
  std::vector<double> good;
  for (int b = 0; b < B; ++b) {
    if (ok[static_cast<std::size_t>(b)]) {
      good.push_back(tau[static_cast<std::size_t>(b)]);
      out.replicate_index.push_back(b);
    } else {
      out.failed.push_back(b);
    }
  }
  if (static_cast<double>(out.failed.size()) > options.max_failed_share * B) {
    throw NumericalError(std::to_string(out.failed.size()) + " of " + std::to_string(B) +
                         " bootstrap replicates lost overlap or failed to converge; use a larger N or a smaller basis");
  }
  if (good.size() < 2) throw NumericalError("fewer than two successful bootstrap replicates");
  out.replicates = Eigen::Map<const Vector>(good.data(), static_cast<Eigen::Index>(good.size()));
  std::vector<double> sq(good.size());
  std::transform(good.begin(), good.end(), sq.begin(), [&](double v) { return (v - out.tau_hat) * (v - out.tau_hat); });
  out.sigma2_hat = static_cast<double>(n) * stats::pairwise_sum(sq) / static_cast<double>(good.size());
  const double half = stats::normal_quantile(0.5 + options.level / 2.0) * std::sqrt(out.sigma2_hat / static_cast<double>(n));
  out.ci = {out.tau_hat - half, out.tau_hat + half};
  return out;
}

void write_replicates_csv(std::ostream& out, const BootstrapResult& result) {
  out << "replicate,tau_hat\n";
  for (Eigen::Index k = 0; k < result.replicates.size(); ++k) {
    out << result.replicate_index[static_cast<std::size_t>(k)] + 1 << ',' << csv::format_exact(result.replicates(k)) << '\n';
  }
}

void write_bootstrap_summary(std::ostream& out, const BootstrapResult& result) {
  const double se = std::sqrt(result.sigma2_hat / static_cast<double>(result.n_units));
  out << "key,value\n"
      << "tau_hat," << csv::format_exact(result.tau_hat) << '\n'
      << "sigma2_hat," << csv::format_exact(result.sigma2_hat) << '\n'
      << "se," << csv::format_exact(se) << '\n'
      << "ci_lower," << csv::format_exact(result.ci.first) << '\n'
      << "ci_upper," << csv::format_exact(result.ci.second) << '\n'
      << "ci_level," << csv::format_exact(result.ci_level) << '\n'
      << "n_replicates," << result.replicates.size() << '\n'
      << "n_failed," << result.failed.size() << '\n'
      << "seed," << result.seed << '\n';
}

}  // namespace drpanel
