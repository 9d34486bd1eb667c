#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "ri/common.hpp"

namespace ri {

// Shortest round-trip decimal form, locale-independent (std::to_chars), so
// identical runs produce byte-identical files.
std::string format_double(double v);

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void comment(const std::string& line);
  void header(const std::vector<std::string>& cols);

  CsvWriter& cell(const std::string& v);
  CsvWriter& cell(const char* v) { return cell(std::string(v)); }
  CsvWriter& cell(double v) { return cell(format_double(v)); }
  CsvWriter& cell(int64_t v) { return cell(std::to_string(v)); }
  CsvWriter& cell(uint64_t v) { return cell(std::to_string(v)); }
  CsvWriter& cell(int v) { return cell(int64_t(v)); }
  CsvWriter& cell(bool v) { return cell(std::string(v ? "1" : "0")); }
  void endrow();

  void close();

 private:
  std::FILE* f_ = nullptr;
  bool row_open_ = false;
};

}  // namespace ri
