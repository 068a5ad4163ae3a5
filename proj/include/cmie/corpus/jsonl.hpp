#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "cmie/corpus/types.hpp"

namespace cmie::corpus {

// One report per line:
//   {"id": str, "text": str, "spans": [{"start": int, "end": int, "type": str}]}
// Preprocessed reports add "impression", "findings_first" and "kept".
// Offsets count Unicode code points.

std::string to_json_line(const Report& report);
/// Throws DataError prefixed with "line N:" on malformed input.
Report from_json_line(const std::string& line, std::size_t line_number);

std::vector<Report> read_jsonl(std::istream& in);
std::vector<Report> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::vector<Report>& reports, std::ostream& out);
void write_jsonl(const std::vector<Report>& reports, const std::filesystem::path& path);

}  // namespace cmie::corpus
