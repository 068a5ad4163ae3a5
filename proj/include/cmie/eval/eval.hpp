#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cmie/corpus/types.hpp"

namespace cmie::eval {

struct Counts {
  long tp = 0;
  long fp = 0;
  long fn = 0;

  Counts& operator+=(const Counts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const Counts&, const Counts&) = default;
};

/// Precision, recall and F1 with zero denominators mapping to 0.
struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  Counts counts;

  static PRF from_counts(const Counts& c);
};

/// Exact (start, end, type) matching. Duplicate predictions count once as
/// true positives and otherwise as false positives.
Counts match_spans(const std::vector<corpus::Span>& gold, const std::vector<corpus::Span>& pred);

/// 2pr / (p + r), or 0 when p + r == 0.
double f1_from_pr(double precision, double recall);

/// Rounds half away from zero to four decimals.
double round4(double v);

struct EvalReport {
  std::array<PRF, 3> per_attribute;  // indexed by AttributeType
  PRF overall;                       // micro average
};

/// Reports are matched by id. Gold reports without a prediction count all
/// their spans as false negatives; a prediction for an unknown id throws
/// DataError.
EvalReport evaluate(const std::vector<corpus::Report>& gold, const std::vector<corpus::Report>& predictions);

/// Fixed-width table with one row per system (or attribute) and columns
/// precision / recall / f1, four decimals.
std::string format_table(const std::vector<std::pair<std::string, PRF>>& rows);

/// Per-attribute rows followed by the overall row.
std::vector<std::pair<std::string, PRF>> attribute_rows(const EvalReport& report);

nlohmann::ordered_json to_json(const PRF& prf);
nlohmann::ordered_json to_json(const EvalReport& report);

}  // namespace cmie::eval
