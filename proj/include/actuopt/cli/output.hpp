#pragma once

// CSV and JSON writers. Files are written to a temporary sibling and renamed
// into place.

#include "actuopt/cli/config.hpp"

#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace actuopt::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

inline void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

/// Comma separated table with a header row, LF line endings, 17 significant digits.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : columns_(header.size()) {
    row_strings(header);
  }

  void row(const std::vector<double>& values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format_double(v));
    row_strings(cells);
  }

  void row_strings(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw std::logic_error("CsvTable: row width does not match the header");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) text_ += ',';
      text_ += cells[i];
    }
    text_ += '\n';
  }

  /// Free-form marker line, e.g. for a truncated run.
  void comment(const std::string& line) { text_ += "# " + line + "\n"; }

  const std::string& text() const { return text_; }
  void save(const fs::path& path) const { write_atomic(path, text_); }

 private:
  std::size_t columns_;
  std::string text_;
};

inline void save_json(const fs::path& path, const Json& j) { write_atomic(path, j.dump(2) + "\n"); }

inline Json to_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

}  // namespace actuopt::cli
