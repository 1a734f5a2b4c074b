#include "condep/csv.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace condep::csv {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim surrounding whitespace and a possible trailing \r
    auto b = cell.find_first_not_of(" \t\r");
    auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

}  // namespace

std::size_t Table::column_index(const std::string& name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end())
    throw data_error("column '" + name + "' not found in input");
  return static_cast<std::size_t>(it - columns.begin());
}

Table read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open input file: " + path);
  Table table;
  std::string line;
  if (!std::getline(in, line)) throw data_error("empty input file: " + path);
  table.columns = split_line(line);
  if (table.columns.empty()) throw data_error("empty header row: " + path);

  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    auto cells = split_line(line);
    if (cells.size() != table.columns.size())
      throw data_error(path + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(table.columns.size()) + " cells, got " +
                       std::to_string(cells.size()));
    if (std::any_of(cells.begin(), cells.end(),
                    [](const std::string& c) { return c.empty(); })) {
      ++table.dropped_rows;
      continue;
    }
    std::vector<double> row(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const auto& c = cells[j];
      double v = 0.0;
      auto [p, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
      if (ec != std::errc{} || p != c.data() + c.size())
        throw data_error(path + ":" + std::to_string(lineno) +
                         ": non-numeric value '" + c + "' in column '" +
                         table.columns[j] + "'");
      row[j] = v;
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_csv(const std::string& path,
               const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot open output file: " + path);
  for (std::size_t j = 0; j < columns.size(); ++j)
    out << (j ? "," : "") << columns[j];
  out << "\n";
  char buf[64];
  for (const auto& row : rows) {
    if (row.size() != columns.size())
      throw data_error("write_csv: row width does not match header");
    for (std::size_t j = 0; j < row.size(); ++j) {
      auto [p, ec] =
          std::to_chars(buf, buf + sizeof buf, row[j],
                        std::chars_format::general, 17);
      if (ec != std::errc{}) throw numeric_error("write_csv: format failure");
      if (j) out << ",";
      out.write(buf, p - buf);
    }
    out << "\n";
  }
  if (!out) throw data_error("write failure: " + path);
}

}  // namespace condep::csv
