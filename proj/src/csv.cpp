#include "duelsearch/csv.hpp"

#include <cmath>
#include <fstream>

#include <fmt/core.h>

#include "duelsearch/errors.hpp"

namespace duelsearch {

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add(std::vector<std::string> cells) {
  if (cells.size() != header_.size()) {
    throw Error(fmt::format("CSV row has {} cells, header has {}", cells.size(), header_.size()));
  }
  rows_.push_back(std::move(cells));
}

std::string CsvTable::str() const {
  std::string out;
  auto emit = [&out](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c) out += ',';
      out += cells[c];
    }
    out += '\n';
  };
  emit(header_);
  for (const auto& r : rows_) emit(r);
  return out;
}

void CsvTable::write(const std::filesystem::path& path) const { write_text_file(path, str()); }

std::string cell(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{}", v);
}
std::string cell(std::optional<double> v) { return v ? cell(*v) : std::string(); }
std::string cell(std::int64_t v) { return fmt::format("{}", v); }
std::string cell(std::uint64_t v) { return fmt::format("{}", v); }
std::string cell(int v) { return fmt::format("{}", v); }
std::string cell(unsigned v) { return fmt::format("{}", v); }
std::string cell(std::optional<std::size_t> v) { return v ? fmt::format("{}", *v) : std::string(); }
std::string cell(bool v) { return v ? "1" : "0"; }
std::string cell(const std::string& v) {
  if (v.find_first_of(",\"\n") == std::string::npos) return v;
  std::string quoted = "\"";
  for (char ch : v) {
    if (ch == '"') quoted += '"';
    quoted += ch;
  }
  return quoted + '"';
}
std::string cell(const char* v) { return cell(std::string(v)); }

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open {} for writing", path.string()));
  out << text;
  if (!out) throw IoError(fmt::format("failed writing {}", path.string()));
}

}  // namespace duelsearch
