#include "cmie/corpus/jsonl.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "cmie/core/error.hpp"
#include "cmie/core/utf8.hpp"

namespace cmie::corpus {

using Json = nlohmann::ordered_json;

std::string to_json_line(const Report& report) {
  Json j;
  j["id"] = report.id;
  j["text"] = utf8::encode(report.text);
  Json spans = Json::array();
  for (const Span& s : report.gold_spans) {
    Json js;
    js["start"] = s.start;
    js["end"] = s.end;
    js["type"] = std::string(to_string(s.type));
    spans.push_back(std::move(js));
  }
  j["spans"] = std::move(spans);
  if (report.preprocessed) {
    j["impression"] = utf8::encode(report.impression);
    j["findings_first"] = utf8::encode(report.findings_first);
    j["kept"] = report.kept;
  }
  return j.dump();
}

namespace {

std::string where(std::size_t line) { return "line " + std::to_string(line) + ": "; }

const Json& field(const Json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end()) throw DataError(where(line) + "missing field '" + key + "'");
  return *it;
}

std::string string_field(const Json& j, const char* key, std::size_t line) {
  const Json& v = field(j, key, line);
  if (!v.is_string()) throw DataError(where(line) + "field '" + key + "' must be a string");
  return v.get<std::string>();
}

int int_field(const Json& j, const char* key, std::size_t line) {
  const Json& v = field(j, key, line);
  if (!v.is_number_integer()) throw DataError(where(line) + "field '" + key + "' must be an integer");
  return v.get<int>();
}

std::u32string decode_at(const std::string& s, std::size_t line) {
  try {
    return utf8::decode(s);
  } catch (const DataError& e) {
    throw DataError(where(line) + e.what());
  }
}

}  // namespace

Report from_json_line(const std::string& line, std::size_t line_number) {
  Json j;
  try {
    j = Json::parse(line);
  } catch (const Json::parse_error& e) {
    throw DataError(where(line_number) + "invalid JSON (" + e.what() + ")");
  }
  if (!j.is_object()) throw DataError(where(line_number) + "expected a JSON object");

  Report r;
  r.id = string_field(j, "id", line_number);
  r.text = decode_at(string_field(j, "text", line_number), line_number);
  if (auto it = j.find("spans"); it != j.end()) {
    if (!it->is_array()) throw DataError(where(line_number) + "field 'spans' must be an array");
    for (const Json& js : *it) {
      if (!js.is_object()) throw DataError(where(line_number) + "span entries must be objects");
      Span s;
      s.start = int_field(js, "start", line_number);
      s.end = int_field(js, "end", line_number);
      try {
        s.type = parse_attribute(string_field(js, "type", line_number));
      } catch (const DataError& e) {
        throw DataError(std::string(e.what()).starts_with("line") ? e.what() : where(line_number) + e.what());
      }
      r.gold_spans.push_back(std::move(s));
    }
  }
  try {
    validate_spans(r.gold_spans, static_cast<int>(r.text.size()));
    attach_text(r.gold_spans, r.text);
  } catch (const DataError& e) {
    throw DataError(where(line_number) + e.what());
  }
  if (j.contains("impression") || j.contains("findings_first") || j.contains("kept")) {
    r.preprocessed = true;
    r.impression = decode_at(string_field(j, "impression", line_number), line_number);
    r.findings_first = decode_at(string_field(j, "findings_first", line_number), line_number);
    const Json& kept = field(j, "kept", line_number);
    if (!kept.is_boolean()) throw DataError(where(line_number) + "field 'kept' must be a boolean");
    r.kept = kept.get<bool>();
  }
  return r;
}

std::vector<Report> read_jsonl(std::istream& in) {
  std::vector<Report> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    out.push_back(from_json_line(line, n));
  }
  return out;
}

std::vector<Report> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return read_jsonl(in);
}

void write_jsonl(const std::vector<Report>& reports, std::ostream& out) {
  for (const Report& r : reports) out << to_json_line(r) << '\n';
}

void write_jsonl(const std::vector<Report>& reports, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  write_jsonl(reports, out);
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace cmie::corpus
