#pragma once

#include <string>
#include <vector>

#include "drpanel/assign_models.hpp"
#include "drpanel/panel.hpp"

namespace drpanel {

/// Evaluated dictionary psi(X_i, S_i, t): row i*T + t, one column per function.
/// The first `n_psi0` columns do not depend on S_i.
struct BasisMatrix {
  Matrix values;
  std::vector<std::string> names;
  Eigen::Index n_psi0 = 0;

  [[nodiscard]] Eigen::Index dim() const { return values.cols(); }
};

/// Basis presets joined with '+':
///   none               no functions
///   stratum-by-period  1{S_i = s} 1{t}, reference stratum and first period dropped
///   covariate-linear   x_ij 1{t}, first period dropped
///   custom:<file>      CSV `unit,time,<name>...` covering every cell
class BasisSpec {
 public:
  static BasisSpec parse(const std::string& text);

  [[nodiscard]] BasisMatrix evaluate(const PanelDataset& data, const SufficientStatistic& stat) const;
  [[nodiscard]] const std::string& text() const { return text_; }

 private:
  struct Term {
    enum class Kind { stratum_by_period, covariate_linear, custom } kind;
    std::string file;
  };
  std::string text_;
  std::vector<Term> terms_;
};

}  // namespace drpanel
