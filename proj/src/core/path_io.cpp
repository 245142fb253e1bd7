#include "driftlab/core/path_io.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "driftlab/core/error.hpp"

namespace driftlab {

std::vector<double> Table::column(std::size_t c) const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.at(c));
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_table(std::ostream& out, const Table& table) {
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c) out << ',';
    out << table.header[c];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ',';
      out << format_double(row[c]);
    }
    out << '\n';
  }
}

std::string table_to_csv(const Table& table) {
  std::ostringstream os;
  write_table(os, table);
  return os.str();
}

namespace {
std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
  }
  return out;
}
}  // namespace

Table parse_table(std::istream& in) {
  Table table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split(line);
    if (table.header.empty()) {
      table.header = std::move(cells);
      continue;
    }
    if (cells.size() != table.header.size()) {
      fail(ErrorCode::io_error, "row width mismatch at line " + std::to_string(line_no));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(c, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != c.size() || c.empty()) {
        fail(ErrorCode::io_error, "non-numeric cell '" + c + "' at line " + std::to_string(line_no));
      }
      row.push_back(v);
    }
    table.rows.push_back(std::move(row));
  }
  if (table.header.empty()) fail(ErrorCode::io_error, "missing CSV header");
  return table;
}

Table read_table_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot open " + path);
  return parse_table(in);
}

Table path_to_table(const Path& path) {
  Table t;
  t.header.push_back("t");
  for (std::size_t c = 0; c < path.dim(); ++c) t.header.push_back("x" + std::to_string(c + 1));
  t.rows.reserve(path.size());
  for (std::size_t k = 0; k < path.size(); ++k) {
    std::vector<double> row{path.time(k)};
    for (double v : path.value(k)) row.push_back(v);
    t.rows.push_back(std::move(row));
  }
  return t;
}

Path path_from_table(const Table& table) {
  if (table.header.size() < 2) fail(ErrorCode::io_error, "path CSV needs a time and a value column");
  const std::size_t dim = table.header.size() - 1;
  std::vector<double> times, values;
  times.reserve(table.rows.size());
  values.reserve(table.rows.size() * dim);
  for (const auto& r : table.rows) {
    times.push_back(r[0]);
    values.insert(values.end(), r.begin() + 1, r.end());
  }
  return Path(std::move(times), std::move(values), dim);
}

}  // namespace driftlab
