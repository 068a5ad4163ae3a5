#include "cmie/corpus/types.hpp"

#include <algorithm>
#include <string>

#include "cmie/core/error.hpp"

namespace cmie::corpus {

std::string_view to_string(AttributeType type) {
  switch (type) {
    case AttributeType::PrimarySite: return "PRIMARY_SITE";
    case AttributeType::LesionSize: return "LESION_SIZE";
    case AttributeType::MetastasisSite: return "METASTASIS_SITE";
  }
  return "?";
}

AttributeType parse_attribute(std::string_view name) {
  for (AttributeType t : kAttributeTypes) {
    if (to_string(t) == name) return t;
  }
  throw DataError("unknown attribute type '" + std::string(name) + "'");
}

std::string_view short_code(AttributeType type) {
  switch (type) {
    case AttributeType::PrimarySite: return "PS";
    case AttributeType::LesionSize: return "LS";
    case AttributeType::MetastasisSite: return "MS";
  }
  return "?";
}

void attach_text(std::vector<Span>& spans, std::u32string_view text) {
  for (Span& s : spans) {
    if (s.start < 0 || s.end > static_cast<int>(text.size()) || s.start >= s.end) {
      throw DataError("span [" + std::to_string(s.start) + "," + std::to_string(s.end) +
                      ") out of range for text of length " + std::to_string(text.size()));
    }
    s.text = std::u32string(text.substr(s.start, s.end - s.start));
  }
}

void validate_spans(const std::vector<Span>& spans, int length) {
  for (const Span& s : spans) {
    if (s.start < 0 || s.start >= s.end || s.end > length) {
      throw DataError("span [" + std::to_string(s.start) + "," + std::to_string(s.end) +
                      ") invalid for length " + std::to_string(length));
    }
  }
  std::vector<Span> sorted = spans;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i - 1].overlaps(sorted[i])) {
      throw DataError("overlapping spans [" + std::to_string(sorted[i - 1].start) + "," +
                      std::to_string(sorted[i - 1].end) + ") and [" + std::to_string(sorted[i].start) + "," +
                      std::to_string(sorted[i].end) + ")");
    }
  }
}

}  // namespace cmie::corpus
