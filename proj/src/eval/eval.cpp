#include "cmie/eval/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <unordered_map>

#include "cmie/core/error.hpp"

namespace cmie::eval {

PRF PRF::from_counts(const Counts& c) {
  PRF p;
  p.counts = c;
  p.precision = (c.tp + c.fp) == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  p.recall = (c.tp + c.fn) == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  p.f1 = f1_from_pr(p.precision, p.recall);
  return p;
}

Counts match_spans(const std::vector<corpus::Span>& gold, const std::vector<corpus::Span>& pred) {
  std::set<corpus::Span> gold_set(gold.begin(), gold.end());
  std::set<corpus::Span> matched;
  Counts c;
  for (const corpus::Span& s : pred) {
    if (gold_set.contains(s) && matched.insert(s).second) ++c.tp;
  }
  c.fp = static_cast<long>(pred.size()) - c.tp;
  c.fn = static_cast<long>(gold.size()) - c.tp;
  return c;
}

double f1_from_pr(double precision, double recall) {
  const double s = precision + recall;
  return s == 0.0 ? 0.0 : 2.0 * precision * recall / s;
}

double round4(double v) { return std::round(v * 1e4) / 1e4; }

namespace {

std::array<Counts, 3> per_type(const std::vector<corpus::Span>& gold, const std::vector<corpus::Span>& pred) {
  std::array<Counts, 3> out;
  for (corpus::AttributeType t : corpus::kAttributeTypes) {
    std::vector<corpus::Span> g, p;
    std::copy_if(gold.begin(), gold.end(), std::back_inserter(g), [t](const auto& s) { return s.type == t; });
    std::copy_if(pred.begin(), pred.end(), std::back_inserter(p), [t](const auto& s) { return s.type == t; });
    out[static_cast<int>(t)] = match_spans(g, p);
  }
  return out;
}

}  // namespace

EvalReport evaluate(const std::vector<corpus::Report>& gold, const std::vector<corpus::Report>& predictions) {
  std::unordered_map<std::string, const corpus::Report*> pred_by_id;
  for (const auto& p : predictions) {
    if (!pred_by_id.emplace(p.id, &p).second) throw DataError("duplicate prediction for report id " + p.id);
  }
  std::unordered_map<std::string, bool> gold_ids;
  for (const auto& g : gold) gold_ids.emplace(g.id, true);
  for (const auto& p : predictions) {
    if (!gold_ids.contains(p.id)) throw DataError("prediction for unknown report id " + p.id);
  }

  std::array<Counts, 3> totals;
  static const std::vector<corpus::Span> kNone;
  for (const auto& g : gold) {
    auto it = pred_by_id.find(g.id);
    const auto& pred = it == pred_by_id.end() ? kNone : it->second->gold_spans;
    const auto c = per_type(g.gold_spans, pred);
    for (int k = 0; k < 3; ++k) totals[k] += c[k];
  }
  EvalReport r;
  Counts overall;
  for (int k = 0; k < 3; ++k) {
    r.per_attribute[k] = PRF::from_counts(totals[k]);
    overall += totals[k];
  }
  r.overall = PRF::from_counts(overall);
  return r;
}

std::string format_table(const std::vector<std::pair<std::string, PRF>>& rows) {
  std::size_t width = 6;
  for (const auto& [name, _] : rows) width = std::max(width, name.size());
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-*s  %9s  %9s  %9s\n", static_cast<int>(width), "model", "precision", "recall", "f1");
  out += buf;
  for (const auto& [name, prf] : rows) {
    std::snprintf(buf, sizeof buf, "%-*s  %9.4f  %9.4f  %9.4f\n", static_cast<int>(width), name.c_str(),
                  round4(prf.precision), round4(prf.recall), round4(prf.f1));
    out += buf;
  }
  return out;
}

std::vector<std::pair<std::string, PRF>> attribute_rows(const EvalReport& report) {
  std::vector<std::pair<std::string, PRF>> rows;
  for (corpus::AttributeType t : corpus::kAttributeTypes) {
    rows.emplace_back(std::string(corpus::to_string(t)), report.per_attribute[static_cast<int>(t)]);
  }
  rows.emplace_back("ALL", report.overall);
  return rows;
}

nlohmann::ordered_json to_json(const PRF& prf) {
  nlohmann::ordered_json j;
  j["precision"] = round4(prf.precision);
  j["recall"] = round4(prf.recall);
  j["f1"] = round4(prf.f1);
  j["tp"] = prf.counts.tp;
  j["fp"] = prf.counts.fp;
  j["fn"] = prf.counts.fn;
  return j;
}

nlohmann::ordered_json to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json attrs;
  for (corpus::AttributeType t : corpus::kAttributeTypes) {
    attrs[std::string(corpus::to_string(t))] = to_json(report.per_attribute[static_cast<int>(t)]);
  }
  j["per_attribute"] = std::move(attrs);
  j["overall"] = to_json(report.overall);
  return j;
}

}  // namespace cmie::eval
