#include "cmie/corpus/preprocess.hpp"

#include <algorithm>
#include <optional>

#include "cmie/core/error.hpp"

namespace cmie::corpus {

std::vector<std::u32string> default_keywords() { return {U"癌", U"肿瘤", U"转移"}; }

bool contains_keyword(std::u32string_view text, const std::vector<std::u32string>& keywords) {
  return std::any_of(keywords.begin(), keywords.end(), [&](const std::u32string& k) {
    return !k.empty() && text.find(k) != std::u32string_view::npos;
  });
}

bool filter_report(Report& report, const std::vector<std::u32string>& keywords) {
  if (keywords.empty()) throw UsageError("filter keyword list is empty");
  report.kept = contains_keyword(report.text, keywords);
  return report.kept;
}

namespace {

struct Header {
  std::size_t start;          // first character of the header line
  std::size_t content_begin;  // first character after the colon
};

bool is_colon(char32_t c) { return c == U'：' || c == U':'; }

bool is_break(char32_t c, const SectionConfig& cfg) {
  return c == U'\n' || c == U'\r' || cfg.sentence_delimiters.find(c) != std::u32string::npos;
}

// Earliest marker occurrence followed closely by a colon.
std::optional<Header> find_header(std::u32string_view text, const std::vector<std::u32string>& markers,
                                  const SectionConfig& cfg) {
  std::optional<Header> best;
  for (const auto& marker : markers) {
    if (marker.empty()) continue;
    std::size_t pos = text.find(marker);
    while (pos != std::u32string_view::npos) {
      const std::size_t after = pos + marker.size();
      std::optional<std::size_t> colon;
      for (std::size_t k = after; k < text.size() && k <= after + cfg.header_colon_window; ++k) {
        if (is_colon(text[k])) {
          colon = k;
          break;
        }
        if (is_break(text[k], cfg)) break;
      }
      if (colon) {
        std::size_t start = pos;
        while (start > 0 && !is_break(text[start - 1], cfg)) --start;
        if (!best || start < best->start) best = Header{start, *colon + 1};
        break;
      }
      pos = text.find(marker, pos + 1);
    }
  }
  return best;
}

std::u32string_view trim(std::u32string_view s) {
  auto space = [](char32_t c) { return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'　'; };
  while (!s.empty() && space(s.front())) s.remove_prefix(1);
  while (!s.empty() && space(s.back())) s.remove_suffix(1);
  return s;
}

std::u32string_view first_sentence(std::u32string_view s, const SectionConfig& cfg) {
  s = trim(s);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (cfg.sentence_delimiters.find(s[i]) != std::u32string::npos) return s.substr(0, i + 1);
  }
  return s;
}

}  // namespace

Sections split_report(std::u32string_view text, const SectionConfig& config) {
  const auto imp = find_header(text, config.impression_markers, config);
  const auto fnd = find_header(text, config.findings_markers, config);
  auto section = [&](const Header& h, const std::optional<Header>& other) {
    std::size_t end = text.size();
    if (other && other->start >= h.content_begin) end = other->start;
    return text.substr(h.content_begin, end - h.content_begin);
  };

  Sections out;
  if (imp) out.impression = std::u32string(trim(section(*imp, fnd)));
  if (fnd) {
    out.findings_first = std::u32string(first_sentence(section(*fnd, imp), config));
  } else if (imp) {
    out.findings_first = std::u32string(first_sentence(text.substr(0, imp->start), config));
  } else {
    out.findings_first = std::u32string(first_sentence(text, config));
  }
  return out;
}

void preprocess(Report& report, const std::vector<std::u32string>& keywords, const SectionConfig& config) {
  filter_report(report, keywords);
  const Sections s = split_report(report.text, config);
  report.impression = s.impression;
  report.findings_first = s.findings_first;
  report.preprocessed = true;
}

}  // namespace cmie::corpus
