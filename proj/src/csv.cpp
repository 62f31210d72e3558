#include "gridloop/csv.hpp"

#include "gridloop/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace gridloop::csv {

namespace {

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    auto field = line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) field.remove_suffix(1);
    out.emplace_back(field);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::string where(const Table& table, std::size_t row) {
  return table.source + ":" + std::to_string(table.lines.at(row));
}

} // namespace

std::size_t Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw Error(source + ": missing column '" + std::string(name) + "'");
}

Table read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(path.string() + ": cannot open file");
  Table table;
  table.source = path.string();
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    auto fields = split(line);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size())
      throw Error(table.source + ":" + std::to_string(lineno) + ": expected " + std::to_string(table.header.size()) +
                  " fields, found " + std::to_string(fields.size()));
    table.rows.push_back(std::move(fields));
    table.lines.push_back(lineno);
  }
  if (!have_header) throw Error(table.source + ": empty file");
  return table;
}

void expect_header(const Table& table, const std::vector<std::string>& header) {
  if (table.header != header) {
    std::string want;
    for (const auto& h : header) want += (want.empty() ? "" : ",") + h;
    throw Error(table.source + ":1: expected header '" + want + "'");
  }
}

double parse_double(std::string_view text, const Table& table, std::size_t row) {
  double value = 0.0;
  if (text == "inf" || text == "+inf") return HUGE_VAL;
  if (text == "-inf") return -HUGE_VAL;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end)
    throw Error(where(table, row) + ": malformed number '" + std::string(text) + "'");
  return value;
}

long long parse_int(std::string_view text, const Table& table, std::size_t row) {
  long long value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end)
    throw Error(where(table, row) + ": malformed integer '" + std::string(text) + "'");
  return value;
}

std::string format(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

Writer::Writer(const std::filesystem::path& path, const std::vector<std::string>& header)
    : path_(path), out_(path, std::ios::binary), width_(header.size()) {
  if (!out_) throw Error(path.string() + ": cannot open for writing");
  row(header);
}

void Writer::row(const std::vector<std::string>& fields) {
  if (fields.size() != width_) throw Error(path_.string() + ": row width mismatch");
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << ',';
    out_ << fields[i];
  }
  out_ << '\n';
  if (!out_) throw Error(path_.string() + ": write failed");
}

} // namespace gridloop::csv
