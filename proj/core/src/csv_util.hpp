#pragma once

// Minimal CSV helpers for the project's flat, unquoted file formats.

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sabr::detail {

std::string trim(const std::string& s);
std::vector<std::string> split_csv_line(const std::string& line);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Header-indexed table. Blank lines and lines starting with '#' are skipped.
class CsvTable {
 public:
  static CsvTable parse(const std::string& text);

  bool has_column(const std::string& name) const { return index_.count(name) != 0; }
  std::size_t rows() const { return rows_.size(); }
  /// Raw cell text; empty when the column is absent or the cell is empty.
  std::string cell(std::size_t row, const std::string& column) const;
  double number(std::size_t row, const std::string& column) const;
  std::optional<double> optional_number(std::size_t row, const std::string& column) const;
  std::size_t line_of(std::size_t row) const { return lines_[row]; }

 private:
  std::map<std::string, std::size_t> index_;
  std::vector<std::vector<std::string>> rows_;
  std::vector<std::size_t> lines_;
};

/// printf("%.9g") formatting used for every emitted number.
std::string fmt9(double x);

}  // namespace sabr::detail
