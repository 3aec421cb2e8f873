#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

namespace hkwave::driver {

/// Empty, real, integer or text cell.
using Cell = std::variant<std::monostate, double, std::uint64_t, std::string>;

/// Result of a subcommand: a metadata block and a rectangular table.
struct Table {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void meta(std::string key, std::string value) { metadata.emplace_back(std::move(key), std::move(value)); }
  void add_row(std::vector<Cell> row);
  std::size_t column(const std::string& name) const;
  /// Value of a numeric cell; throws for text and empty cells.
  double number(std::size_t row, const std::string& name) const;
  const std::string& text(std::size_t row, const std::string& name) const;
  bool empty_cell(std::size_t row, const std::string& name) const;
};

/// Shortest decimal text that reads back as the same double.
std::string format_double(double x);

/// "# key: value" lines, then the header row, then data rows. Text cells are quoted
/// only when they contain a comma, quote or newline.
std::string to_csv(const Table& t);

/// {"metadata": {...}, "columns": [...], "rows": [[...], ...]}.
nlohmann::json to_json(const Table& t);

/// Writes `<directory>/<stem>.csv` and/or `.json`; returns the written paths.
std::vector<std::string> write_table(const Table& t, const std::string& directory, const std::string& stem,
                                     const std::vector<std::string>& formats);

}  // namespace hkwave::driver
