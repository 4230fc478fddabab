#include "drpanel/basis.hpp"

#include <cmath>
#include <map>

#include "drpanel/csv.hpp"
#include "drpanel/error.hpp"

namespace drpanel {
namespace {

struct Block {
  Matrix values;
  std::vector<std::string> names;
  bool psi0 = false;
};

Block stratum_by_period(const PanelDataset& data, const SufficientStatistic& stat) {
  const auto n = data.n_units();
  const auto periods = data.n_periods();
  Block b;
  const int strata = stat.n_strata();
  b.values = Matrix::Zero(n * periods, (strata - 1) * (periods - 1));
  Eigen::Index col = 0;
  for (int s = 1; s < strata; ++s) {
    for (Eigen::Index t = 1; t < periods; ++t, ++col) {
      b.names.push_back("S=" + stat.label(s) + ":t" + std::to_string(t + 1));
      for (auto i : stat.members(s)) b.values(i * periods + t, col) = 1.0;
    }
  }
  return b;
}

Block covariate_linear(const PanelDataset& data) {
  const auto n = data.n_units();
  const auto periods = data.n_periods();
  if (data.n_covariates() == 0) throw ValidationError("covariate-linear basis needs covariate columns");
  Block b;
  b.psi0 = true;
  b.values = Matrix::Zero(n * periods, data.n_covariates() * (periods - 1));
  Eigen::Index col = 0;
  for (Eigen::Index j = 0; j < data.n_covariates(); ++j) {
    for (Eigen::Index t = 1; t < periods; ++t, ++col) {
      b.names.push_back(data.covariate_names()[static_cast<std::size_t>(j)] + ":t" + std::to_string(t + 1));
      for (Eigen::Index i = 0; i < n; ++i) b.values(i * periods + t, col) = data.covariates()(i, j);
    }
  }
  return b;
}

Block custom(const PanelDataset& data, const std::string& file) {
  const auto table = csv::read_file(file);
  const auto unit_col = table.require_column("unit");
  const auto time_col = table.require_column("time");
  std::vector<std::size_t> cols;
  Block b;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c == unit_col || c == time_col) continue;
    cols.push_back(c);
    b.names.push_back(table.header[c]);
  }
  std::map<std::string, Eigen::Index> unit_index;
  for (std::size_t i = 0; i < data.unit_ids().size(); ++i) unit_index[data.unit_ids()[i]] = static_cast<Eigen::Index>(i);
  std::map<long long, Eigen::Index> time_index;
  for (std::size_t t = 0; t < data.times().size(); ++t) time_index[data.times()[t]] = static_cast<Eigen::Index>(t);

  const auto periods = data.n_periods();
  b.values = Matrix::Constant(data.n_units() * periods, static_cast<Eigen::Index>(cols.size()), std::nan(""));
  std::vector<bool> seen(static_cast<std::size_t>(data.n_units() * periods), false);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto line = std::to_string(table.lines[r]);
    auto u = unit_index.find(row[unit_col]);
    const auto tv = csv::parse_integer(row[time_col]);
    if (u == unit_index.end() || !tv || !time_index.count(*tv)) {
      throw ValidationError(file + ":" + line + ": basis row for unknown (unit, time)");
    }
    const auto cell = u->second * periods + time_index[*tv];
    if (seen[static_cast<std::size_t>(cell)]) throw ValidationError(file + ":" + line + ": duplicate basis row");
    seen[static_cast<std::size_t>(cell)] = true;
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const auto v = csv::parse_double(row[cols[j]]);
      if (!v) throw ValidationError(file + ":" + line + ": non-numeric basis value in column " + b.names[j]);
      b.values(cell, static_cast<Eigen::Index>(j)) = *v;
    }
  }
  for (std::size_t c = 0; c < seen.size(); ++c) {
    if (!seen[c]) {
      const auto i = static_cast<Eigen::Index>(c) / periods;
      const auto t = static_cast<Eigen::Index>(c) % periods;
      throw ValidationError(file + ": no basis row for (unit " + data.unit_ids()[static_cast<std::size_t>(i)] +
                            ", time " + std::to_string(data.times()[static_cast<std::size_t>(t)]) + ")");
    }
  }
  return b;
}

}  // namespace

BasisSpec BasisSpec::parse(const std::string& text) {
  BasisSpec spec;
  spec.text_ = text;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('+', start);
    if (end == std::string::npos) end = text.size();
    const auto part = text.substr(start, end - start);
    if (part == "stratum-by-period") {
      spec.terms_.push_back({Term::Kind::stratum_by_period, {}});
    } else if (part == "covariate-linear") {
      spec.terms_.push_back({Term::Kind::covariate_linear, {}});
    } else if (part.rfind("custom:", 0) == 0 && part.size() > 7) {
      spec.terms_.push_back({Term::Kind::custom, part.substr(7)});
    } else if (part != "none") {
      throw ValidationError("unknown basis preset '" + part +
                            "' (expected none, stratum-by-period, covariate-linear or custom:<file>)");
    }
    start = end + 1;
  }
  return spec;
}

BasisMatrix BasisSpec::evaluate(const PanelDataset& data, const SufficientStatistic& stat) const {
  if (stat.size() != data.n_units()) throw ValidationError("statistic must have one value per unit");
  std::vector<Block> psi0, psi1;
  for (const auto& term : terms_) {
    switch (term.kind) {
      case Term::Kind::stratum_by_period: psi1.push_back(stratum_by_period(data, stat)); break;
      case Term::Kind::covariate_linear: psi0.push_back(covariate_linear(data)); break;
      case Term::Kind::custom: psi1.push_back(custom(data, term.file)); break;
    }
  }
  BasisMatrix out;
  Eigen::Index cols = 0;
  for (const auto& b : psi0) cols += b.values.cols();
  out.n_psi0 = cols;
  for (const auto& b : psi1) cols += b.values.cols();
  out.values.resize(data.n_units() * data.n_periods(), cols);
  Eigen::Index at = 0;
  for (const auto* group : {&psi0, &psi1}) {
    for (const auto& b : *group) {
      out.values.middleCols(at, b.values.cols()) = b.values;
      out.names.insert(out.names.end(), b.names.begin(), b.names.end());
      at += b.values.cols();
    }
  }
  for (Eigen::Index r = 0; r < out.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!std::isfinite(out.values(r, c))) {
        throw ValidationError("non-finite basis value in column " + out.names[static_cast<std::size_t>(c)] +
                              " at (unit " + data.unit_ids()[static_cast<std::size_t>(r / data.n_periods())] +
                              ", time " + std::to_string(data.times()[static_cast<std::size_t>(r % data.n_periods())]) + ")");
      }
    }
  }
  return out;
}

}  // namespace drpanel
