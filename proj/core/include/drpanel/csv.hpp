#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace drpanel::csv {

/// A comma-separated table with a header row. Fields are trimmed; no quoting.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  /// 1-based source line of each row, for error messages.
  std::vector<std::size_t> lines;

  [[nodiscard]] std::optional<std::size_t> column(std::string_view name) const;
  [[nodiscard]] std::size_t require_column(std::string_view name) const;
};

Table read(std::istream& in);
Table read_file(const std::string& path);

std::vector<std::string> split(std::string_view line, char sep = ',');

std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_integer(std::string_view s);

/// Shortest decimal that round-trips to the same double.
std::string format_exact(double x);
/// `digits` significant digits, for human-readable tables.
std::string format_sig(double x, int digits = 6);
/// Round-off residue (|x| < 1e-12) as 0, for human-readable weight tables.
inline double snap_zero(double x) { return x < 1e-12 && x > -1e-12 ? 0.0 : x; }

}  // namespace drpanel::csv
