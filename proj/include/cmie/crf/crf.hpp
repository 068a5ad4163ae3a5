#pragma once

#include <span>
#include <vector>

#include "cmie/core/matrix.hpp"

// Linear-chain CRF over L labels with dedicated start/stop scores:
//
//   score(y) = start[y_0] + sum_t e[t][y_t] + sum_{t>0} A[y_{t-1}][y_t] + stop[y_{T-1}]
//
// All lattice work is in log space, double precision. Disallowed transitions
// may be encoded as -infinity.

namespace cmie::crf {

struct CrfParams {
  int num_labels = 0;
  Matrix transitions;  // [from, to]
  std::vector<double> start;
  std::vector<double> stop;

  static CrfParams zeros(int num_labels);
};

/// Emissions [T, L] with optional gold tags.
struct CrfInstance {
  Matrix emissions;
  std::vector<int> tags;
};

struct Decoded {
  std::vector<int> tags;
  double score = 0.0;
};

struct Marginals {
  double log_partition = 0.0;
  Matrix unary;     // [T, L], rows sum to 1
  Matrix pairwise;  // [L, L], expected transition counts summed over t
  std::vector<double> first;  // P(y_0 = l)
  std::vector<double> last;   // P(y_{T-1} = l)
};

struct NllGradient {
  double loss = 0.0;
  Matrix d_emissions;
  Matrix d_transitions;
  std::vector<double> d_start;
  std::vector<double> d_stop;
};

/// Throws UsageError on shape mismatch or T == 0.
void validate(const Matrix& emissions, const CrfParams& params);

/// Throws UsageError if a tag is out of range or the length differs from T.
double score_sequence(const Matrix& emissions, const CrfParams& params, std::span<const int> tags);

double log_partition(const Matrix& emissions, const CrfParams& params);

Marginals marginals(const Matrix& emissions, const CrfParams& params);

/// Highest-scoring sequence. Ties resolve to the smallest label at each
/// backtracking step, i.e. the reverse-lexicographically smallest optimum.
/// The returned score equals score_sequence(tags) bit for bit.
Decoded viterbi(const Matrix& emissions, const CrfParams& params);

/// loss = logZ - score(gold); gradients are expected minus observed counts.
NllGradient nll_and_gradient(const Matrix& emissions, const CrfParams& params, std::span<const int> tags);

/// Enumeration oracles. Refuse (UsageError) when L^T exceeds 1e6.
double brute_force_log_partition(const Matrix& emissions, const CrfParams& params);
Decoded brute_force_decode(const Matrix& emissions, const CrfParams& params);

/// For the 7-label BIO set (O, B-x, I-x pairs): forbids start->I-x,
/// O->I-x and {B,I}-x -> I-y for y != x by setting those scores to -inf.
void apply_bio_constraints(CrfParams& params);

/// True if `to` may follow `from` under the BIO structure (from = -1 means
/// sequence start).
bool bio_transition_allowed(int from, int to);

}  // namespace cmie::crf
