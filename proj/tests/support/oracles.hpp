#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cmie/core/matrix.hpp"
#include "cmie/core/rng.hpp"
#include "cmie/corpus/types.hpp"
#include "cmie/crf/crf.hpp"
#include "cmie/nn/parameter.hpp"
#include "cmie/nn/tape.hpp"

// Slow, independent reference implementations used by the unit and
// acceptance tests.
namespace cmie::oracle {

Matrix random_matrix(Rng& rng, int rows, int cols, double scale = 1.0);

/// Enumerates every label sequence.
struct CrfEnumeration {
  double log_partition = 0.0;
  double best_score = 0.0;
  std::vector<int> best;  // reverse-lexicographically smallest optimum
  int optimum_count = 0;  // sequences scoring exactly best_score
};
CrfEnumeration enumerate_crf(const Matrix& emissions, const crf::CrfParams& params);

crf::CrfParams random_crf(Rng& rng, int labels);

/// Largest relative error between the analytic gradient left in each
/// parameter's `grad` and a central difference of `loss`. Up to
/// `per_tensor` coordinates are sampled per parameter (all if <= 0).
struct GradCheck {
  double max_rel_error = 0.0;
  std::string worst;
  int checked = 0;
};
double relative_error(double analytic, double numeric);
GradCheck check_gradients(nn::ParameterSet& params, const std::function<double()>& loss, double h, int per_tensor,
                          Rng& rng);

/// Builds the loss sum(f(x) .* R) on a fresh tape, back-propagates into the
/// parameter grads, and compares with finite differences.
GradCheck check_module(nn::ParameterSet& params, const std::function<nn::Var(nn::Tape&)>& forward,
                       const Matrix& projection, double h, int per_tensor, Rng& rng);

/// Exhaustive (s, e) search with the documented tie rule.
struct PairSearch {
  int start = -1;
  int end = -1;  // inclusive
  double score = 0.0;
};
PairSearch exhaustive_pair(const std::vector<double>& p_start, const std::vector<double>& p_end, int max_len);

std::vector<double> random_simplex(Rng& rng, int n);

/// Pairwise count of exactly matching spans.
void pairwise_match(const std::vector<corpus::Span>& gold, const std::vector<corpus::Span>& pred, long& tp, long& fp,
                    long& fn);

/// Random non-overlapping spans inside [0, length).
std::vector<corpus::Span> random_spans(Rng& rng, int length, int max_spans);

/// Random spans that may overlap and repeat.
std::vector<corpus::Span> random_loose_spans(Rng& rng, int length, int count);

}  // namespace cmie::oracle
