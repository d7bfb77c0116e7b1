#include "attnplaus/csv.hpp"

#include <fstream>
#include <sstream>

#include "attnplaus/errors.hpp"

namespace attnplaus {

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

CsvTable parse_csv(const std::string& text, const std::string& origin) {
  CsvTable table;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_was_quoted = false;
  bool record_has_data = false;

  std::size_t i = 0;
  std::size_t n = text.size();
  // UTF-8 BOM
  if (n >= 3 && static_cast<unsigned char>(text[0]) == 0xEF &&
      static_cast<unsigned char>(text[1]) == 0xBB &&
      static_cast<unsigned char>(text[2]) == 0xBF) {
    i = 3;
  }

  auto end_field = [&]() {
    record.push_back(std::move(field));
    field.clear();
    field_was_quoted = false;
  };
  auto end_record = [&]() {
    end_field();
    if (table.header.empty()) {
      table.header = std::move(record);
    } else {
      table.rows.push_back(std::move(record));
    }
    record.clear();
    record_has_data = false;
  };

  for (; i < n; ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < n && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field.empty() && !field_was_quoted) {
          in_quotes = true;
          field_was_quoted = true;
        } else {
          field.push_back(c);  // stray quote mid-field, keep verbatim
        }
        record_has_data = true;
        break;
      case ',':
        end_field();
        record_has_data = true;
        break;
      case '\r':
        break;
      case '\n':
        if (record_has_data || !record.empty() || !field.empty() || field_was_quoted) {
          end_record();
        }
        break;
      default:
        field.push_back(c);
        record_has_data = true;
        break;
    }
  }
  if (in_quotes) {
    throw FormatError("unterminated quoted field in " + origin);
  }
  if (record_has_data || !record.empty() || !field.empty()) {
    end_record();
  }
  if (table.header.empty()) {
    throw SchemaError("no header row in " + origin);
  }
  return table;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) {
    throw IoError("read failure on " + path);
  }
  return parse_csv(buf.str(), path);
}

}  // namespace attnplaus
