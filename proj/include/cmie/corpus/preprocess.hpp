#pragma once

#include <string>
#include <vector>

#include "cmie/corpus/types.hpp"

namespace cmie::corpus {

/// Keywords whose presence marks a report as cancer-related.
std::vector<std::u32string> default_keywords();

/// True iff any keyword occurs in `text`. Empty keyword entries never match.
bool contains_keyword(std::u32string_view text, const std::vector<std::u32string>& keywords);

/// Sets report.kept and returns it. Throws UsageError for an empty list.
bool filter_report(Report& report, const std::vector<std::u32string>& keywords);

struct SectionConfig {
  std::vector<std::u32string> impression_markers = {U"印象", U"意见", U"诊断"};
  std::vector<std::u32string> findings_markers = {U"所见", U"描述"};
  std::u32string sentence_delimiters = U"。；;";
  /// A marker is a section header only when a colon (： or :) follows
  /// within this many characters of the marker's end.
  int header_colon_window = 3;
};

struct Sections {
  std::u32string impression;
  std::u32string findings_first;
};

/// Extracts the impression section and the first findings sentence.
/// Both results are contiguous substrings of `text`.
Sections split_report(std::u32string_view text, const SectionConfig& config = {});

/// filter_report + split_report; marks the report preprocessed.
void preprocess(Report& report, const std::vector<std::u32string>& keywords, const SectionConfig& config = {});

}  // namespace cmie::corpus
