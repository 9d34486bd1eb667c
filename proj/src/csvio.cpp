#include "ri/csvio.hpp"

#include <charconv>

namespace ri {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::string& path) {
  f_ = std::fopen(path.c_str(), "wb");
  if (!f_) fail(errc::io_error, "cannot open for write: " + path);
}

CsvWriter::~CsvWriter() { close(); }

void CsvWriter::close() {
  if (f_) {
    if (row_open_) endrow();
    std::fclose(f_);
    f_ = nullptr;
  }
}

void CsvWriter::comment(const std::string& line) {
  std::fprintf(f_, "# %s\n", line.c_str());
}

void CsvWriter::header(const std::vector<std::string>& cols) {
  for (size_t i = 0; i < cols.size(); ++i)
    std::fprintf(f_, "%s%s", i ? "," : "", cols[i].c_str());
  std::fputc('\n', f_);
}

CsvWriter& CsvWriter::cell(const std::string& v) {
  if (row_open_) std::fputc(',', f_);
  std::fwrite(v.data(), 1, v.size(), f_);
  row_open_ = true;
  return *this;
}

void CsvWriter::endrow() {
  std::fputc('\n', f_);
  row_open_ = false;
}

}  // namespace ri
