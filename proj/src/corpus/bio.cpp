#include "cmie/corpus/bio.hpp"

#include <array>
#include <string>

#include "cmie/core/error.hpp"

namespace cmie::corpus {

namespace {
constexpr std::array<std::string_view, kNumLabels> kNames = {"O", "B-PS", "I-PS", "B-LS", "I-LS", "B-MS", "I-MS"};
}

std::string_view label_name(int label) {
  if (label < 0 || label >= kNumLabels) throw DataError("label id out of range: " + std::to_string(label));
  return kNames[label];
}

int parse_label(std::string_view name) {
  for (int i = 0; i < kNumLabels; ++i) {
    if (kNames[i] == name) return i;
  }
  throw DataError("unknown label '" + std::string(name) + "'");
}

int begin_label(AttributeType type) { return 1 + 2 * static_cast<int>(type); }
int inside_label(AttributeType type) { return 2 + 2 * static_cast<int>(type); }
bool is_begin(int label) { return label > 0 && label % 2 == 1; }
bool is_inside(int label) { return label > 0 && label % 2 == 0; }
AttributeType label_type(int label) { return static_cast<AttributeType>((label - 1) / 2); }

TagSequence encode_tags(const std::vector<Span>& spans, int length) {
  validate_spans(spans, length);
  TagSequence tags(length, kO);
  for (const Span& s : spans) {
    tags[s.start] = begin_label(s.type);
    for (int p = s.start + 1; p < s.end; ++p) tags[p] = inside_label(s.type);
  }
  return tags;
}

std::vector<Span> decode_tags(const TagSequence& tags) {
  std::vector<Span> spans;
  int open_start = -1;
  int open_label = kO;  // B-label of the open run
  auto close = [&](int end) {
    if (open_start >= 0) spans.push_back(Span{open_start, end, label_type(open_label), {}});
    open_start = -1;
    open_label = kO;
  };
  const int n = static_cast<int>(tags.size());
  for (int p = 0; p < n; ++p) {
    const int tag = tags[p];
    if (tag < 0 || tag >= kNumLabels || tag == kO) {
      close(p);
    } else if (is_begin(tag)) {
      close(p);
      open_start = p;
      open_label = tag;
    } else if (open_start >= 0 && open_label + 1 == tag) {
      // continues the open run
    } else {
      close(p);
      open_start = p;
      open_label = tag - 1;
    }
  }
  close(n);
  return spans;
}

}  // namespace cmie::corpus
