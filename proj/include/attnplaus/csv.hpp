#pragma once

#include <string>
#include <vector>

namespace attnplaus {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column index by header name, -1 if absent.
  int column(const std::string& name) const;
};

// RFC-4180 style reader: quoted fields may contain commas, newlines and
// doubled quotes. Tolerates CRLF line endings and a UTF-8 BOM.
CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text, const std::string& origin = "<string>");

}  // namespace attnplaus
