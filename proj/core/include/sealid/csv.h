#ifndef SEALID_CSV_H_
#define SEALID_CSV_H_

#include <string>
#include <string_view>
#include <vector>

namespace sealid::csv {

// RFC 4180 field quoting; records end with LF.
std::string quote(std::string_view field);
std::string join_row(const std::vector<std::string>& fields);

// Parses LF or CRLF separated records, honouring quoted fields. A trailing
// newline does not produce an empty record.
std::vector<std::vector<std::string>> parse(std::string_view text);

// Shortest text that round-trips the double exactly.
std::string format_double(double v);

std::string read_file(const std::string& path);
// Writes atomically enough for our purposes: truncate then write.
void write_file(const std::string& path, std::string_view content);

}  // namespace sealid::csv

#endif  // SEALID_CSV_H_
