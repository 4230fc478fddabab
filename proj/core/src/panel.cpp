#include "drpanel/panel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "drpanel/csv.hpp"
#include "drpanel/error.hpp"

namespace drpanel {
namespace {

bool is_binary(const BinaryMatrix& m) {
  return (m.array() == 0 || m.array() == 1).all();
}

// Orders unit identifiers numerically when every id is an integer, lexicographically otherwise.
std::vector<std::string> sorted_ids(const std::set<std::string>& ids) {
  std::vector<std::string> out(ids.begin(), ids.end());
  bool numeric = std::all_of(out.begin(), out.end(), [](const std::string& s) { return csv::parse_integer(s).has_value(); });
  if (numeric) {
    std::stable_sort(out.begin(), out.end(), [](const std::string& a, const std::string& b) {
      return *csv::parse_integer(a) < *csv::parse_integer(b);
    });
  }
  return out;
}

}  // namespace

PanelDataset::PanelDataset(Matrix outcomes, BinaryMatrix treatments, Matrix covariates,
                           std::vector<std::string> unit_ids, std::vector<long long> times,
                           std::vector<std::string> covariate_names)
    : outcomes_(std::move(outcomes)),
      treatments_(std::move(treatments)),
      covariates_(std::move(covariates)),
      unit_ids_(std::move(unit_ids)),
      times_(std::move(times)),
      covariate_names_(std::move(covariate_names)) {
  const auto n = outcomes_.rows();
  const auto t = outcomes_.cols();
  if (n < 2 || t < 2) throw ValidationError("panel needs at least 2 units and 2 periods");
  if (treatments_.rows() != n || treatments_.cols() != t) {
    throw ValidationError("treatment matrix shape does not match outcomes");
  }
  if (!is_binary(treatments_)) throw ValidationError("treatments must be 0/1");
  if (!outcomes_.allFinite()) throw ValidationError("outcomes must be finite");
  if (covariates_.size() == 0) covariates_.resize(n, 0);
  if (covariates_.rows() != n) throw ValidationError("covariate matrix must have one row per unit");
  if (!covariates_.allFinite()) throw ValidationError("covariates must be finite");
  if (unit_ids_.empty()) {
    for (Eigen::Index i = 0; i < n; ++i) unit_ids_.push_back(std::to_string(i + 1));
  }
  if (times_.empty()) {
    for (Eigen::Index s = 0; s < t; ++s) times_.push_back(s + 1);
  }
  if (covariate_names_.empty()) {
    for (Eigen::Index j = 0; j < covariates_.cols(); ++j) covariate_names_.push_back("x" + std::to_string(j + 1));
  }
  if (static_cast<Eigen::Index>(unit_ids_.size()) != n || static_cast<Eigen::Index>(times_.size()) != t ||
      static_cast<Eigen::Index>(covariate_names_.size()) != covariates_.cols()) {
    throw ValidationError("panel labels do not match matrix dimensions");
  }
}

PanelDataset PanelDataset::with_outcomes(Matrix outcomes) const {
  return PanelDataset(std::move(outcomes), treatments_, covariates_, unit_ids_, times_, covariate_names_);
}

bool operator==(const PanelDataset& a, const PanelDataset& b) {
  return a.outcomes_.rows() == b.outcomes_.rows() && a.outcomes_.cols() == b.outcomes_.cols() &&
         a.covariates_.cols() == b.covariates_.cols() && a.outcomes_ == b.outcomes_ &&
         a.treatments_ == b.treatments_ && a.covariates_ == b.covariates_ && a.unit_ids_ == b.unit_ids_ &&
         a.times_ == b.times_ && a.covariate_names_ == b.covariate_names_;
}

PanelDataset read_panel(std::istream& in, const PanelSchema& schema) {
  const auto table = csv::read(in);
  const auto cu = table.require_column(schema.unit);
  const auto ct = table.require_column(schema.time);
  const auto cy = table.require_column(schema.outcome);
  const auto cw = table.require_column(schema.treatment);
  std::vector<std::size_t> cx;
  std::vector<std::string> xnames;
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    if (j == cu || j == ct || j == cy || j == cw) continue;
    if (table.header[j].rfind(schema.covariate_prefix, 0) == 0) {
      cx.push_back(j);
      xnames.push_back(table.header[j]);
    }
  }

  struct Cell {
    double y;
    int w;
  };
  std::map<std::string, std::map<long long, Cell>> cells;
  std::map<std::string, std::vector<double>> xs;
  std::set<std::string> unit_set;
  std::set<long long> time_set;

  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto line = std::to_string(table.lines[r]);
    const auto& unit = row[cu];
    auto time = csv::parse_integer(row[ct]);
    if (!time) throw ValidationError("line " + line + ": time '" + row[ct] + "' is not an integer");
    const auto where = "(unit " + unit + ", time " + std::to_string(*time) + ")";
    auto y = csv::parse_double(row[cy]);
    if (!y || !std::isfinite(*y)) throw ValidationError("non-numeric y '" + row[cy] + "' at " + where);
    auto w = csv::parse_integer(row[cw]);
    if (!w || (*w != 0 && *w != 1)) throw ValidationError("non-binary w='" + row[cw] + "' at " + where);
    std::vector<double> x;
    for (auto j : cx) {
      auto v = csv::parse_double(row[j]);
      if (!v || !std::isfinite(*v)) {
        throw ValidationError("non-numeric " + table.header[j] + " '" + row[j] + "' at " + where);
      }
      x.push_back(*v);
    }
    auto [it, fresh] = xs.emplace(unit, x);
    if (!fresh && it->second != x) throw ValidationError("covariates vary over time for unit " + unit);
    if (!cells[unit].emplace(*time, Cell{*y, static_cast<int>(*w)}).second) {
      throw ValidationError("duplicate observation at " + where);
    }
    unit_set.insert(unit);
    time_set.insert(*time);
  }
  if (unit_set.empty()) throw ValidationError("panel file has no observations");

  const std::vector<long long> times(time_set.begin(), time_set.end());
  if (times.back() - times.front() + 1 != static_cast<long long>(times.size())) {
    throw ValidationError("time values do not form a contiguous integer range");
  }
  const auto units = sorted_ids(unit_set);
  std::ostringstream missing;
  std::size_t n_bad = 0;
  for (const auto& u : units) {
    const auto& per = cells[u];
    if (per.size() == times.size()) continue;
    missing << (n_bad++ ? "; " : "") << "unit " << u << " missing time";
    for (auto t : times) {
      if (!per.count(t)) missing << ' ' << t;
    }
  }
  if (n_bad) throw ValidationError("unbalanced panel: " + missing.str());

  const auto n = static_cast<Eigen::Index>(units.size());
  const auto t = static_cast<Eigen::Index>(times.size());
  Matrix y(n, t);
  BinaryMatrix w(n, t);
  Matrix x(n, static_cast<Eigen::Index>(cx.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& per = cells[units[i]];
    for (Eigen::Index s = 0; s < t; ++s) {
      const auto& c = per.at(times[s]);
      y(i, s) = c.y;
      w(i, s) = c.w;
    }
    const auto& xi = xs[units[i]];
    for (std::size_t j = 0; j < xi.size(); ++j) x(i, static_cast<Eigen::Index>(j)) = xi[j];
  }
  return PanelDataset(std::move(y), std::move(w), std::move(x), units, times, xnames);
}

PanelDataset load_panel(const std::string& path, const PanelSchema& schema) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open panel '" + path + "'");
  return read_panel(in, schema);
}

void write_panel(std::ostream& out, const PanelDataset& data) {
  out << "unit,time,y,w";
  for (const auto& name : data.covariate_names()) out << ',' << name;
  out << '\n';
  for (Eigen::Index i = 0; i < data.n_units(); ++i) {
    for (Eigen::Index t = 0; t < data.n_periods(); ++t) {
      out << data.unit_ids()[i] << ',' << data.times()[t] << ',' << csv::format_exact(data.outcomes()(i, t)) << ','
          << data.treatments()(i, t);
      for (Eigen::Index j = 0; j < data.n_covariates(); ++j) out << ',' << csv::format_exact(data.covariates()(i, j));
      out << '\n';
    }
  }
}

void save_panel(const std::string& path, const PanelDataset& data) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  write_panel(out, data);
}

AssignmentSupport::AssignmentSupport(BinaryMatrix paths, Vector probs)
    : paths_(std::move(paths)), probs_(std::move(probs)) {
  const auto k = paths_.rows();
  const auto t = paths_.cols();
  if (k < 1 || t < 1) throw ValidationError("support must have at least one row and one period");
  if (probs_.size() != k) throw ValidationError("support needs one probability per path");
  if (!is_binary(paths_)) throw ValidationError("support paths must be 0/1");
  if (t < 63 && k > (Eigen::Index{1} << t)) throw ValidationError("support has more rows than 2^T");
  if (!probs_.allFinite() || (probs_.array() <= 0.0).any()) {
    throw ValidationError("support probabilities must be positive");
  }
  if (std::abs(probs_.sum() - 1.0) > 1e-12) throw ValidationError("support probabilities must sum to 1");
  std::set<std::vector<int>> seen;
  for (Eigen::Index r = 0; r < k; ++r) {
    std::vector<int> row(static_cast<std::size_t>(t));
    for (Eigen::Index s = 0; s < t; ++s) row[static_cast<std::size_t>(s)] = paths_(r, s);
    if (!seen.insert(row).second) throw ValidationError("support rows must be distinct (row " + path_label(r) + ")");
  }
}

AssignmentSupport AssignmentSupport::from_masses(BinaryMatrix paths, const Vector& masses) {
  if (masses.size() == 0 || (masses.array() < 0.0).any()) throw ValidationError("masses must be nonnegative");
  const double total = masses.sum();
  if (!(total > 0.0)) throw ValidationError("masses must have positive total");
  return AssignmentSupport(std::move(paths), masses / total);
}

std::string AssignmentSupport::path_label(Eigen::Index k) const {
  std::string s;
  for (Eigen::Index t = 0; t < paths_.cols(); ++t) s.push_back(paths_(k, t) ? '1' : '0');
  return s;
}

AssignmentSupport empirical_support(const PanelDataset& data) {
  std::map<std::vector<int>, long long> counts;
  const auto& w = data.treatments();
  for (Eigen::Index i = 0; i < data.n_units(); ++i) {
    std::vector<int> row(static_cast<std::size_t>(data.n_periods()));
    for (Eigen::Index t = 0; t < data.n_periods(); ++t) row[static_cast<std::size_t>(t)] = w(i, t);
    ++counts[row];
  }
  BinaryMatrix paths(static_cast<Eigen::Index>(counts.size()), data.n_periods());
  Vector probs(paths.rows());
  Eigen::Index k = 0;
  for (const auto& [row, c] : counts) {
    for (Eigen::Index t = 0; t < paths.cols(); ++t) paths(k, t) = row[static_cast<std::size_t>(t)];
    probs(k) = static_cast<double>(c) / static_cast<double>(data.n_units());
    ++k;
  }
  return AssignmentSupport(std::move(paths), std::move(probs));
}

AssignmentSupport read_support(std::istream& in, bool normalize) {
  const auto table = csv::read(in);
  const auto cp = table.require_column("prob");
  const auto cpath = table.column("path");
  std::vector<std::size_t> cols;
  if (!cpath) {
    for (std::size_t j = 0; j < table.header.size(); ++j) {
      if (j != cp && table.header[j] != "k") cols.push_back(j);
    }
  }
  const auto k = static_cast<Eigen::Index>(table.rows.size());
  if (k == 0) throw ValidationError("support file has no rows");
  Eigen::Index t = cpath ? static_cast<Eigen::Index>(table.rows[0][*cpath].size()) : static_cast<Eigen::Index>(cols.size());
  BinaryMatrix paths(k, t);
  Vector probs(k);
  for (Eigen::Index r = 0; r < k; ++r) {
    const auto& row = table.rows[static_cast<std::size_t>(r)];
    const auto line = std::to_string(table.lines[static_cast<std::size_t>(r)]);
    auto p = csv::parse_double(row[cp]);
    if (!p) throw ValidationError("line " + line + ": bad probability '" + row[cp] + "'");
    probs(r) = *p;
    if (cpath) {
      const auto& label = row[*cpath];
      if (static_cast<Eigen::Index>(label.size()) != t) throw ValidationError("line " + line + ": path length differs");
      for (Eigen::Index s = 0; s < t; ++s) {
        const char c = label[static_cast<std::size_t>(s)];
        if (c != '0' && c != '1') throw ValidationError("line " + line + ": path must be a 0/1 string");
        paths(r, s) = c - '0';
      }
    } else {
      for (Eigen::Index s = 0; s < t; ++s) {
        auto v = csv::parse_integer(row[cols[static_cast<std::size_t>(s)]]);
        if (!v || (*v != 0 && *v != 1)) throw ValidationError("line " + line + ": path entries must be 0/1");
        paths(r, s) = static_cast<int>(*v);
      }
    }
  }
  if (normalize) return AssignmentSupport::from_masses(std::move(paths), probs);
  if (std::abs(probs.sum() - 1.0) <= 1e-9) probs /= probs.sum();
  return AssignmentSupport(std::move(paths), std::move(probs));
}

AssignmentSupport load_support(const std::string& path, bool normalize) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open support '" + path + "'");
  return read_support(in, normalize);
}

void write_support(std::ostream& out, const AssignmentSupport& support) {
  out << "prob";
  for (Eigen::Index t = 0; t < support.n_periods(); ++t) out << ",w" << t + 1;
  out << '\n';
  for (Eigen::Index k = 0; k < support.size(); ++k) {
    out << csv::format_exact(support.probs()(k));
    for (Eigen::Index t = 0; t < support.n_periods(); ++t) out << ',' << support.paths()(k, t);
    out << '\n';
  }
}

WeightTable::WeightTable(Matrix w, WeightLevel lvl) : weights(std::move(w)), level(lvl) {
  if (!weights.allFinite()) throw NumericalError("weight table has non-finite entries");
}

void write_weights_csv(std::ostream& out, const AssignmentSupport& support, const WeightTable& weights) {
  out << "k,path,prob";
  for (Eigen::Index t = 0; t < weights.weights.cols(); ++t) out << ",w" << t + 1;
  out << '\n';
  for (Eigen::Index k = 0; k < support.size(); ++k) {
    out << k + 1 << ',' << support.path_label(k) << ',' << csv::format_exact(support.probs()(k));
    for (Eigen::Index t = 0; t < weights.weights.cols(); ++t) out << ',' << csv::format_exact(weights.weights(k, t));
    out << '\n';
  }
}

void write_weights_table(std::ostream& out, const AssignmentSupport& support, const WeightTable& weights, int digits) {
  const int width = digits + 7;
  out << std::right << std::setw(width) << "P(W)";
  for (Eigen::Index t = 0; t < support.n_periods(); ++t) out << std::setw(4) << ("W" + std::to_string(t + 1));
  for (Eigen::Index t = 0; t < weights.weights.cols(); ++t) out << std::setw(width) << ("omega_" + std::to_string(t + 1));
  out << '\n';
  for (Eigen::Index k = 0; k < support.size(); ++k) {
    out << std::setw(width) << csv::format_sig(support.probs()(k), digits);
    for (Eigen::Index t = 0; t < support.n_periods(); ++t) out << std::setw(4) << support.paths()(k, t);
    for (Eigen::Index t = 0; t < weights.weights.cols(); ++t) {
      out << std::setw(width) << csv::format_sig(csv::snap_zero(weights.weights(k, t)), digits);
    }
    out << '\n';
  }
}

void write_sample_weights_csv(std::ostream& out, const PanelDataset& data, const WeightTable& weights) {
  out << "unit,time,w,weight\n";
  for (Eigen::Index i = 0; i < data.n_units(); ++i) {
    for (Eigen::Index t = 0; t < data.n_periods(); ++t) {
      out << data.unit_ids()[i] << ',' << data.times()[t] << ',' << data.treatments()(i, t) << ','
          << csv::format_exact(weights.weights(i, t)) << '\n';
    }
  }
}

}  // namespace drpanel
