#pragma once

#include <vector>

#include "cmie/corpus/types.hpp"
#include "cmie/eval/eval.hpp"

namespace cmie::ensemble {

struct VoteConfig {
  /// Minimum number of models that must predict a span exactly; 0 selects
  /// the majority ceil(N/2).
  int threshold = 0;

  /// Effective threshold for N models. Throws UsageError if outside [1, N].
  int resolve(int num_models) const;
};

struct Candidate {
  corpus::Span span;
  int votes = 0;
};

/// Exact (start, end, type) triples with at least `threshold` votes, sorted
/// by span. A model votes at most once per triple.
std::vector<Candidate> candidates(const std::vector<std::vector<corpus::Span>>& predictions, int threshold);

/// Greedy non-overlapping selection in the order votes desc, length desc,
/// start asc, type asc. Result sorted by start.
std::vector<corpus::Span> resolve_overlaps(std::vector<Candidate> candidates);
std::vector<corpus::Span> resolve_overlaps(const std::vector<corpus::Span>& spans);

/// Throws UsageError when `predictions` is empty.
std::vector<corpus::Span> vote(const std::vector<std::vector<corpus::Span>>& predictions, const VoteConfig& config);

/// Votes report by report. Every system must cover the same report ids
/// (DataError otherwise); output follows the first system's order and its
/// spans carry text from the report.
std::vector<corpus::Report> vote_reports(const std::vector<std::vector<corpus::Report>>& systems,
                                         const VoteConfig& config);

struct SweepRow {
  int threshold = 0;
  eval::PRF prf;
};

/// Scores thresholds 1..N against `gold`.
std::vector<SweepRow> sweep_thresholds(const std::vector<std::vector<corpus::Report>>& systems,
                                       const std::vector<corpus::Report>& gold);

/// Threshold with the highest F1; ties go to the smaller threshold.
int best_threshold(const std::vector<SweepRow>& rows);

}  // namespace cmie::ensemble
