#include "cmie/ensemble/vote.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>

#include "cmie/core/error.hpp"

namespace cmie::ensemble {

int VoteConfig::resolve(int num_models) const {
  if (num_models < 1) throw UsageError("voting needs at least one model");
  const int t = threshold == 0 ? (num_models + 1) / 2 : threshold;
  if (t < 1 || t > num_models) {
    throw UsageError("vote threshold " + std::to_string(t) + " outside [1, " + std::to_string(num_models) + "]");
  }
  return t;
}

std::vector<Candidate> candidates(const std::vector<std::vector<corpus::Span>>& predictions, int threshold) {
  std::map<corpus::Span, int> votes;
  for (const auto& model : predictions) {
    const std::set<corpus::Span> unique(model.begin(), model.end());
    for (const auto& s : unique) ++votes[s];
  }
  std::vector<Candidate> out;
  for (const auto& [span, n] : votes) {
    if (n >= threshold) out.push_back({span, n});
  }
  return out;
}

std::vector<corpus::Span> resolve_overlaps(std::vector<Candidate> cands) {
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.votes != b.votes) return a.votes > b.votes;
    if (a.span.length() != b.span.length()) return a.span.length() > b.span.length();
    return a.span.key() < b.span.key();
  });
  std::vector<corpus::Span> kept;
  for (const auto& c : cands) {
    if (std::none_of(kept.begin(), kept.end(), [&](const corpus::Span& k) { return k.overlaps(c.span); })) {
      kept.push_back(c.span);
    }
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

std::vector<corpus::Span> resolve_overlaps(const std::vector<corpus::Span>& spans) {
  return resolve_overlaps(candidates({spans}, 1));
}

std::vector<corpus::Span> vote(const std::vector<std::vector<corpus::Span>>& predictions, const VoteConfig& config) {
  const int t = config.resolve(static_cast<int>(predictions.size()));
  return resolve_overlaps(candidates(predictions, t));
}

namespace {

// For each report of the first system, the matching report in every system.
std::vector<std::vector<const corpus::Report*>> align(const std::vector<std::vector<corpus::Report>>& systems) {
  if (systems.empty()) throw UsageError("voting needs at least one prediction set");
  std::vector<std::unordered_map<std::string, const corpus::Report*>> index(systems.size());
  for (std::size_t m = 0; m < systems.size(); ++m) {
    for (const auto& r : systems[m]) {
      if (!index[m].emplace(r.id, &r).second) throw DataError("duplicate report id '" + r.id + "' in prediction set " + std::to_string(m + 1));
    }
    if (index[m].size() != index[0].size()) throw DataError("prediction sets cover different numbers of reports");
  }
  std::vector<std::vector<const corpus::Report*>> rows;
  for (const auto& r : systems[0]) {
    std::vector<const corpus::Report*> row;
    for (const auto& idx : index) {
      auto it = idx.find(r.id);
      if (it == idx.end()) throw DataError("report '" + r.id + "' missing from a prediction set");
      row.push_back(it->second);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::vector<corpus::Report> vote_reports(const std::vector<std::vector<corpus::Report>>& systems,
                                         const VoteConfig& config) {
  const int t = config.resolve(static_cast<int>(systems.size()));
  std::vector<corpus::Report> out;
  for (const auto& row : align(systems)) {
    std::vector<std::vector<corpus::Span>> preds;
    for (const auto* r : row) preds.push_back(r->gold_spans);
    corpus::Report fused = *row[0];
    fused.gold_spans = resolve_overlaps(candidates(preds, t));
    corpus::attach_text(fused.gold_spans, fused.text);
    out.push_back(std::move(fused));
  }
  return out;
}

std::vector<SweepRow> sweep_thresholds(const std::vector<std::vector<corpus::Report>>& systems,
                                       const std::vector<corpus::Report>& gold) {
  std::vector<SweepRow> rows;
  for (int t = 1; t <= static_cast<int>(systems.size()); ++t) {
    rows.push_back({t, eval::evaluate(gold, vote_reports(systems, {t})).overall});
  }
  return rows;
}

int best_threshold(const std::vector<SweepRow>& rows) {
  if (rows.empty()) throw UsageError("empty threshold sweep");
  const SweepRow* best = &rows[0];
  for (const auto& r : rows) {
    if (r.prf.f1 > best->prf.f1) best = &r;
  }
  return best->threshold;
}

}  // namespace cmie::ensemble
