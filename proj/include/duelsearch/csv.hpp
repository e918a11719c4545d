#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <type_traits>
#include <string>
#include <vector>

namespace duelsearch {

/// Comma-separated output with a header row, '.' decimals and LF endings.
/// Doubles use the shortest round-trip representation, so identical values
/// always produce identical bytes.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  const std::vector<std::string>& header() const { return header_; }
  std::size_t rows() const { return rows_.size(); }
  const std::vector<std::vector<std::string>>& data() const { return rows_; }

  /// Appends a row; the cell count must match the header.
  void add(std::vector<std::string> cells);

  std::string str() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::string cell(double v);
std::string cell(std::optional<double> v);
std::string cell(std::int64_t v);
std::string cell(std::uint64_t v);
std::string cell(int v);
std::string cell(unsigned v);
std::string cell(std::optional<std::size_t> v);
std::string cell(bool v);
std::string cell(const std::string& v);
std::string cell(const char* v);

/// Writes text to a file, creating parent directories. Throws IoError.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace duelsearch
