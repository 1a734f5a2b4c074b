#pragma once

#include <string>
#include <vector>

#include "condep/errors.hpp"

namespace condep::csv {

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::size_t dropped_rows = 0;  // rows removed for missing cells

  std::size_t column_index(const std::string& name) const;  // throws data_error
};

// Reads a numeric CSV with a header row. Rows with empty cells are dropped
// (counted); non-numeric cells raise data_error with row/column context.
Table read_csv(const std::string& path);

void write_csv(const std::string& path,
               const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows);

}  // namespace condep::csv
