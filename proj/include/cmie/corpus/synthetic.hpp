#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cmie/corpus/types.hpp"

namespace cmie::corpus {

/// Template tables and rates for the synthetic imaging-report corpus. The
/// reports follow a findings/impression two-section layout with gold spans
/// placed at exact offsets by construction.
struct SyntheticSpec {
  std::uint64_t seed = 1;
  int n_reports = 100;
  /// Probability that a cancer report lacks a given attribute (independent
  /// per attribute).
  double noise_rate = 0.1;
  /// Fraction of non-cancer reports that contain no filter keyword.
  double distractor_rate = 0.1;
  /// Fraction of cancer reports with the impression before the findings.
  double swap_rate = 0.2;

  std::vector<std::u32string> primary_sites;
  std::vector<std::u32string> lesion_words;
  std::vector<std::u32string> cancer_terms;
  /// {a},{b}: one-decimal centimetres; {m},{n}: integer millimetres.
  std::vector<std::u32string> size_patterns;
  std::vector<std::u32string> metastasis_sites;
  std::vector<std::u32string> distractor_sentences;
  std::vector<std::u32string> findings_headers;
  std::vector<std::u32string> impression_headers;
  /// Complete keyword-free reports.
  std::vector<std::u32string> benign_reports;

  /// Spec with the built-in vocabulary tables.
  static SyntheticSpec with_defaults(std::uint64_t seed, int n_reports);
};

/// Deterministic in `spec`. Throws UsageError on empty tables or rates
/// outside [0, 1].
std::vector<Report> generate_corpus(const SyntheticSpec& spec);

}  // namespace cmie::corpus
