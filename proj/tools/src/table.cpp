#include "hkwave/driver/table.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace hkwave::driver {

void Table::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size()) throw std::invalid_argument("table row has the wrong number of cells");
  rows.push_back(std::move(row));
}

std::size_t Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  throw std::out_of_range("no column '" + name + "'");
}

double Table::number(std::size_t row, const std::string& name) const {
  const Cell& c = rows.at(row).at(column(name));
  if (const auto* d = std::get_if<double>(&c)) return *d;
  if (const auto* u = std::get_if<std::uint64_t>(&c)) return static_cast<double>(*u);
  throw std::invalid_argument("column '" + name + "' is not numeric in this row");
}

const std::string& Table::text(std::size_t row, const std::string& name) const {
  return std::get<std::string>(rows.at(row).at(column(name)));
}

bool Table::empty_cell(std::size_t row, const std::string& name) const {
  return std::holds_alternative<std::monostate>(rows.at(row).at(column(name)));
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace {

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string cell_text(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) return "";
        else if constexpr (std::is_same_v<T, double>) return format_double(v);
        else if constexpr (std::is_same_v<T, std::uint64_t>) return std::to_string(v);
        else return quote(v);
      },
      c);
}

}  // namespace

std::string to_csv(const Table& t) {
  std::string out;
  for (const auto& [k, v] : t.metadata) out += "# " + k + ": " + v + "\n";
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + quote(t.columns[i]);
  out += "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + cell_text(row[i]);
    out += "\n";
  }
  return out;
}

nlohmann::json to_json(const Table& t) {
  nlohmann::json j;
  j["metadata"] = nlohmann::json::object();
  for (const auto& [k, v] : t.metadata) j["metadata"][k] = v;
  j["columns"] = t.columns;
  j["rows"] = nlohmann::json::array();
  for (const auto& row : t.rows) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& c : row) {
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) r.push_back(nullptr);
            else r.push_back(v);
          },
          c);
    }
    j["rows"].push_back(std::move(r));
  }
  return j;
}

std::vector<std::string> write_table(const Table& t, const std::string& directory, const std::string& stem,
                                     const std::vector<std::string>& formats) {
  std::filesystem::create_directories(directory);
  std::vector<std::string> paths;
  for (const auto& f : formats) {
    const std::string path = (std::filesystem::path(directory) / (stem + "." + f)).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << (f == "json" ? to_json(t).dump(1) + "\n" : to_csv(t));
    if (!out) throw std::runtime_error("error writing " + path);
    paths.push_back(path);
  }
  return paths;
}

}  // namespace hkwave::driver
