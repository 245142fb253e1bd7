#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "driftlab/core/model.hpp"

namespace driftlab {

/// Column-oriented numeric table with a header row, as read from / written to CSV.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  [[nodiscard]] std::vector<double> column(std::size_t c) const;
};

/// Doubles are written with 17 significant digits so values round-trip.
std::string format_double(double v);

void write_table(std::ostream& out, const Table& table);
std::string table_to_csv(const Table& table);
/// Parses numeric CSV with a header line; blank lines are skipped.
Table parse_table(std::istream& in);
Table read_table_file(const std::string& path);

/// Header `t,x1[,x2,...]`.
Table path_to_table(const Path& path);
/// Accepts any header whose first column is time.
Path path_from_table(const Table& table);

}  // namespace driftlab
