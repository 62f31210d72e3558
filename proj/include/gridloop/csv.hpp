#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace gridloop::csv {

struct Table {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines; // 1-based file line of each row

  /// Column index by name; throws naming the file when absent.
  std::size_t column(std::string_view name) const;
};

/// Reads a comma-separated file with a header row. Blank lines are skipped,
/// CR before LF is tolerated. Rows with the wrong field count are errors.
Table read(const std::filesystem::path& path);

/// Throws if the header does not match exactly.
void expect_header(const Table& table, const std::vector<std::string>& header);

double parse_double(std::string_view text, const Table& table, std::size_t row);
long long parse_int(std::string_view text, const Table& table, std::size_t row);

/// Shortest representation that round-trips exactly; "inf"/"-inf"/"nan" otherwise.
std::string format(double value);

/// Line-oriented CSV writer; LF endings, no quoting (fields never contain commas).
class Writer {
public:
  Writer(const std::filesystem::path& path, const std::vector<std::string>& header);

  void row(const std::vector<std::string>& fields);

private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t width_;
};

} // namespace gridloop::csv
