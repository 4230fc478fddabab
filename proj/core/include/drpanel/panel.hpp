#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "drpanel/types.hpp"

namespace drpanel {

/// Balanced panel: N units observed over T periods with binary treatment and
/// optional time-invariant covariates. Immutable once constructed.
class PanelDataset {
 public:
  /// Validates shapes and values; throws ValidationError on any violation.
  PanelDataset(Matrix outcomes, BinaryMatrix treatments, Matrix covariates = {},
               std::vector<std::string> unit_ids = {}, std::vector<long long> times = {},
               std::vector<std::string> covariate_names = {});

  [[nodiscard]] Eigen::Index n_units() const { return outcomes_.rows(); }
  [[nodiscard]] Eigen::Index n_periods() const { return outcomes_.cols(); }
  [[nodiscard]] Eigen::Index n_covariates() const { return covariates_.cols(); }

  [[nodiscard]] const Matrix& outcomes() const { return outcomes_; }
  [[nodiscard]] const BinaryMatrix& treatments() const { return treatments_; }
  [[nodiscard]] const Matrix& covariates() const { return covariates_; }
  [[nodiscard]] const std::vector<std::string>& unit_ids() const { return unit_ids_; }
  [[nodiscard]] const std::vector<long long>& times() const { return times_; }
  [[nodiscard]] const std::vector<std::string>& covariate_names() const { return covariate_names_; }

  /// Same treatments and covariates, new outcomes.
  [[nodiscard]] PanelDataset with_outcomes(Matrix outcomes) const;

  friend bool operator==(const PanelDataset& a, const PanelDataset& b);

 private:
  Matrix outcomes_;
  BinaryMatrix treatments_;
  Matrix covariates_;
  std::vector<std::string> unit_ids_;
  std::vector<long long> times_;
  std::vector<std::string> covariate_names_;
};

/// Column names of the long-format panel file.
struct PanelSchema {
  std::string unit = "unit";
  std::string time = "time";
  std::string outcome = "y";
  std::string treatment = "w";
  /// Every column whose name starts with this prefix is a covariate.
  std::string covariate_prefix = "x";
};

PanelDataset read_panel(std::istream& in, const PanelSchema& schema = {});
PanelDataset load_panel(const std::string& path, const PanelSchema& schema = {});
/// Full-precision long format; reloading reproduces the dataset bit-exactly.
void write_panel(std::ostream& out, const PanelDataset& data);
void save_panel(const std::string& path, const PanelDataset& data);

/// Finite support of the assignment path distribution: K distinct rows with
/// positive probabilities summing to one.
class AssignmentSupport {
 public:
  AssignmentSupport(BinaryMatrix paths, Vector probs);
  /// Rescales nonnegative masses to probabilities before validating.
  static AssignmentSupport from_masses(BinaryMatrix paths, const Vector& masses);

  [[nodiscard]] Eigen::Index size() const { return paths_.rows(); }
  [[nodiscard]] Eigen::Index n_periods() const { return paths_.cols(); }
  [[nodiscard]] const BinaryMatrix& paths() const { return paths_; }
  [[nodiscard]] const Vector& probs() const { return probs_; }
  /// Row k rendered as a 0/1 string, e.g. "101".
  [[nodiscard]] std::string path_label(Eigen::Index k) const;

 private:
  BinaryMatrix paths_;
  Vector probs_;
};

/// Distinct treatment rows with empirical frequencies, rows in lexicographic order.
AssignmentSupport empirical_support(const PanelDataset& data);

/// Support file: a `prob` column plus either a `path` column of 0/1 strings or
/// one 0/1 column per period (every remaining column, in order).
AssignmentSupport read_support(std::istream& in, bool normalize = false);
AssignmentSupport load_support(const std::string& path, bool normalize = false);
void write_support(std::ostream& out, const AssignmentSupport& support);

enum class WeightLevel { population, sample };

/// Weights over (support row, period) or (unit, period).
struct WeightTable {
  Matrix weights;
  WeightLevel level = WeightLevel::population;

  WeightTable() = default;
  WeightTable(Matrix w, WeightLevel lvl);
};

/// `k,path,prob,w1..wT` with full precision.
void write_weights_csv(std::ostream& out, const AssignmentSupport& support, const WeightTable& weights);
/// Aligned text: probability, path columns, then one weight column per period.
void write_weights_table(std::ostream& out, const AssignmentSupport& support, const WeightTable& weights,
                         int digits = 6);
/// `unit,time,weight` long format for sample-level weights.
void write_sample_weights_csv(std::ostream& out, const PanelDataset& data, const WeightTable& weights);

}  // namespace drpanel
