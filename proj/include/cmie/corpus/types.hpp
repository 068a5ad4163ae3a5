#pragma once

#include <array>
#include <compare>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace cmie::corpus {

enum class AttributeType { PrimarySite = 0, LesionSize = 1, MetastasisSite = 2 };

inline constexpr std::array<AttributeType, 3> kAttributeTypes = {
    AttributeType::PrimarySite, AttributeType::LesionSize, AttributeType::MetastasisSite};

/// Serialized names: "PRIMARY_SITE", "LESION_SIZE", "METASTASIS_SITE".
std::string_view to_string(AttributeType type);
/// Throws DataError for unknown names.
AttributeType parse_attribute(std::string_view name);
/// Tag suffix: "PS", "LS", "MS".
std::string_view short_code(AttributeType type);

/// Typed half-open interval over code points. `text` is derived from the
/// report and ignored by comparisons.
struct Span {
  int start = 0;
  int end = 0;
  AttributeType type = AttributeType::PrimarySite;
  std::u32string text;

  auto key() const { return std::tuple(start, end, static_cast<int>(type)); }
  friend bool operator==(const Span& a, const Span& b) { return a.key() == b.key(); }
  friend auto operator<=>(const Span& a, const Span& b) { return a.key() <=> b.key(); }
  bool overlaps(const Span& o) const { return start < o.end && o.start < end; }
  int length() const { return end - start; }
};

struct Report {
  std::string id;
  std::u32string text;
  std::u32string impression;
  std::u32string findings_first;
  std::vector<Span> gold_spans;
  bool kept = false;
  /// Set once filter + section split have run; controls which JSONL fields
  /// are written.
  bool preprocessed = false;
};

/// Fills span.text from `text`. Throws DataError if a span is out of range.
void attach_text(std::vector<Span>& spans, std::u32string_view text);

/// Checks 0 <= start < end <= length and pairwise non-overlap. Throws
/// DataError naming the offending span.
void validate_spans(const std::vector<Span>& spans, int length);

}  // namespace cmie::corpus
