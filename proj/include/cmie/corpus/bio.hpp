#pragma once

#include <string_view>
#include <vector>

#include "cmie/corpus/types.hpp"

namespace cmie::corpus {

// Label ids of the BIO scheme over the three attribute types.
enum Label : int { kO = 0, kBPs = 1, kIPs = 2, kBLs = 3, kILs = 4, kBMs = 5, kIMs = 6 };
inline constexpr int kNumLabels = 7;

using TagSequence = std::vector<int>;

std::string_view label_name(int label);
int parse_label(std::string_view name);
int begin_label(AttributeType type);
int inside_label(AttributeType type);
bool is_begin(int label);
bool is_inside(int label);
/// Attribute type carried by a B-/I- label. Precondition: label != kO.
AttributeType label_type(int label);

/// Spans must be non-overlapping and inside [0, length); otherwise
/// DataError.
TagSequence encode_tags(const std::vector<Span>& spans, int length);

/// Total over all sequences. Maximal B-x I-x* runs become spans; an I-x
/// that does not continue a run of type x opens a new span. Sorted by start,
/// text left empty.
std::vector<Span> decode_tags(const TagSequence& tags);

}  // namespace cmie::corpus
