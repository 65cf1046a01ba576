#pragma once

#include <fstream>
#include <map>
#include <string>
#include <vector>

namespace qilab {

// RFC-4180 field quoting: fields containing commas, quotes, or newlines are
// wrapped in double quotes with embedded quotes doubled.
std::string csv_quote(const std::string& field);

// Renders one CSV record (no trailing newline handling; caller writes lines).
std::string csv_line(const std::vector<std::string>& fields);

class CsvWriter {
public:
  explicit CsvWriter(const std::string& path);
  void row(const std::vector<std::string>& fields);
  void close();

private:
  std::ofstream out_;
  std::string path_;
};

// Parses an RFC-4180 CSV file (quoted fields, embedded newlines, CRLF).
std::vector<std::vector<std::string>> read_csv(const std::string& path);
// Same parser on in-memory text.
std::vector<std::vector<std::string>> read_csv_text(const std::string& text);

// Flat `key = value` config format: one pair per line, '#' comments, blank
// lines ignored, whitespace trimmed around both key and value.
std::map<std::string, std::string> read_flat_config(const std::string& path);
std::map<std::string, std::string> parse_flat_config(const std::string& text);

}  // namespace qilab
