#include "cmie/crf/crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cmie/core/error.hpp"

namespace cmie::crf {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(const double* x, int n) {
  double mx = kNegInf;
  for (int i = 0; i < n; ++i) mx = std::max(mx, x[i]);
  if (mx == kNegInf) return kNegInf;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::exp(x[i] - mx);
  return mx + std::log(s);
}

// alpha[t][j]: log-sum over prefixes ending in j at t, including e[t][j].
Matrix forward(const Matrix& e, const CrfParams& p) {
  const int T = e.rows();
  const int L = p.num_labels;
  Matrix alpha(T, L);
  for (int j = 0; j < L; ++j) alpha(0, j) = p.start[j] + e(0, j);
  std::vector<double> buf(L);
  for (int t = 1; t < T; ++t) {
    for (int j = 0; j < L; ++j) {
      for (int i = 0; i < L; ++i) buf[i] = alpha(t - 1, i) + p.transitions(i, j);
      alpha(t, j) = log_sum_exp(buf.data(), L) + e(t, j);
    }
  }
  return alpha;
}

// beta[t][i]: log-sum over suffixes after t given y_t = i, including stop.
Matrix backward(const Matrix& e, const CrfParams& p) {
  const int T = e.rows();
  const int L = p.num_labels;
  Matrix beta(T, L);
  for (int i = 0; i < L; ++i) beta(T - 1, i) = p.stop[i];
  std::vector<double> buf(L);
  for (int t = T - 2; t >= 0; --t) {
    for (int i = 0; i < L; ++i) {
      for (int j = 0; j < L; ++j) buf[j] = p.transitions(i, j) + e(t + 1, j) + beta(t + 1, j);
      beta(t, i) = log_sum_exp(buf.data(), L);
    }
  }
  return beta;
}

double final_log_z(const Matrix& alpha, const CrfParams& p) {
  const int L = p.num_labels;
  std::vector<double> buf(L);
  for (int j = 0; j < L; ++j) buf[j] = alpha(alpha.rows() - 1, j) + p.stop[j];
  return log_sum_exp(buf.data(), L);
}

double safe_exp(double x) { return x == kNegInf ? 0.0 : std::exp(x); }

std::size_t path_count(int T, int L) {
  double n = std::pow(static_cast<double>(L), T);
  if (n > 1e6) throw UsageError("brute force refused: " + std::to_string(L) + "^" + std::to_string(T) + " paths exceeds 1e6");
  return static_cast<std::size_t>(std::llround(n));
}

// Visits every label sequence in odometer order (position 0 fastest).
template <class F>
void enumerate(int T, int L, F visit) {
  path_count(T, L);
  std::vector<int> y(T, 0);
  while (true) {
    visit(std::span<const int>(y));
    int pos = 0;
    while (pos < T && ++y[pos] == L) y[pos++] = 0;
    if (pos == T) return;
  }
}

// Reverse-lexicographic order: compare from the last position backwards.
bool reverse_lex_less(std::span<const int> a, std::span<const int> b) {
  for (std::size_t k = a.size(); k-- > 0;) {
    if (a[k] != b[k]) return a[k] < b[k];
  }
  return false;
}

}  // namespace

CrfParams CrfParams::zeros(int num_labels) {
  CrfParams p;
  p.num_labels = num_labels;
  p.transitions = Matrix(num_labels, num_labels);
  p.start.assign(num_labels, 0.0);
  p.stop.assign(num_labels, 0.0);
  return p;
}

void validate(const Matrix& emissions, const CrfParams& params) {
  const int L = params.num_labels;
  if (L < 1) throw UsageError("CRF needs at least one label");
  if (params.transitions.rows() != L || params.transitions.cols() != L ||
      static_cast<int>(params.start.size()) != L || static_cast<int>(params.stop.size()) != L) {
    throw UsageError("CRF parameter shapes do not match label count");
  }
  if (emissions.rows() < 1) throw UsageError("CRF instance must have T >= 1");
  if (emissions.cols() != L) throw UsageError("emission width differs from CRF label count");
}

double score_sequence(const Matrix& e, const CrfParams& p, std::span<const int> tags) {
  validate(e, p);
  if (static_cast<int>(tags.size()) != e.rows()) throw UsageError("tag sequence length differs from T");
  for (int y : tags) {
    if (y < 0 || y >= p.num_labels) throw UsageError("tag " + std::to_string(y) + " out of range");
  }
  double s = p.start[tags[0]] + e(0, tags[0]);
  for (int t = 1; t < e.rows(); ++t) s = s + p.transitions(tags[t - 1], tags[t]) + e(t, tags[t]);
  return s + p.stop[tags.back()];
}

double log_partition(const Matrix& e, const CrfParams& p) {
  validate(e, p);
  return final_log_z(forward(e, p), p);
}

Marginals marginals(const Matrix& e, const CrfParams& p) {
  validate(e, p);
  const int T = e.rows();
  const int L = p.num_labels;
  const Matrix alpha = forward(e, p);
  const Matrix beta = backward(e, p);
  Marginals m;
  m.log_partition = final_log_z(alpha, p);
  const double lz = m.log_partition;
  m.unary = Matrix(T, L);
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < L; ++j) m.unary(t, j) = safe_exp(alpha(t, j) + beta(t, j) - lz);
  m.pairwise = Matrix(L, L);
  for (int t = 1; t < T; ++t)
    for (int i = 0; i < L; ++i)
      for (int j = 0; j < L; ++j)
        m.pairwise(i, j) += safe_exp(alpha(t - 1, i) + p.transitions(i, j) + e(t, j) + beta(t, j) - lz);
  m.first.resize(L);
  m.last.resize(L);
  for (int j = 0; j < L; ++j) {
    m.first[j] = m.unary(0, j);
    m.last[j] = m.unary(T - 1, j);
  }
  return m;
}

Decoded viterbi(const Matrix& e, const CrfParams& p) {
  validate(e, p);
  const int T = e.rows();
  const int L = p.num_labels;
  Matrix delta(T, L);
  std::vector<int> back(static_cast<std::size_t>(T) * L, 0);
  for (int j = 0; j < L; ++j) delta(0, j) = p.start[j] + e(0, j);
  for (int t = 1; t < T; ++t) {
    for (int j = 0; j < L; ++j) {
      int best_i = 0;
      double best = delta(t - 1, 0) + p.transitions(0, j);
      for (int i = 1; i < L; ++i) {
        const double v = delta(t - 1, i) + p.transitions(i, j);
        if (v > best) {
          best = v;
          best_i = i;
        }
      }
      delta(t, j) = best + e(t, j);
      back[static_cast<std::size_t>(t) * L + j] = best_i;
    }
  }
  int best_j = 0;
  double best = delta(T - 1, 0) + p.stop[0];
  for (int j = 1; j < L; ++j) {
    const double v = delta(T - 1, j) + p.stop[j];
    if (v > best) {
      best = v;
      best_j = j;
    }
  }
  Decoded d;
  d.score = best;
  d.tags.assign(T, 0);
  d.tags[T - 1] = best_j;
  for (int t = T - 1; t > 0; --t) d.tags[t - 1] = back[static_cast<std::size_t>(t) * L + d.tags[t]];
  return d;
}

NllGradient nll_and_gradient(const Matrix& e, const CrfParams& p, std::span<const int> tags) {
  const double gold = score_sequence(e, p, tags);
  const Marginals m = marginals(e, p);
  const int T = e.rows();
  NllGradient g;
  g.loss = m.log_partition - gold;
  g.d_emissions = m.unary;
  for (int t = 0; t < T; ++t) g.d_emissions(t, tags[t]) -= 1.0;
  g.d_transitions = m.pairwise;
  for (int t = 1; t < T; ++t) g.d_transitions(tags[t - 1], tags[t]) -= 1.0;
  g.d_start = m.first;
  g.d_start[tags[0]] -= 1.0;
  g.d_stop = m.last;
  g.d_stop[tags[T - 1]] -= 1.0;
  return g;
}

double brute_force_log_partition(const Matrix& e, const CrfParams& p) {
  validate(e, p);
  std::vector<double> scores;
  scores.reserve(path_count(e.rows(), p.num_labels));
  enumerate(e.rows(), p.num_labels, [&](std::span<const int> y) { scores.push_back(score_sequence(e, p, y)); });
  return log_sum_exp(scores.data(), static_cast<int>(scores.size()));
}

Decoded brute_force_decode(const Matrix& e, const CrfParams& p) {
  validate(e, p);
  Decoded best;
  bool have = false;
  enumerate(e.rows(), p.num_labels, [&](std::span<const int> y) {
    const double s = score_sequence(e, p, y);
    if (!have || s > best.score || (s == best.score && reverse_lex_less(y, best.tags))) {
      best.score = s;
      best.tags.assign(y.begin(), y.end());
      have = true;
    }
  });
  return best;
}

bool bio_transition_allowed(int from, int to) {
  const bool to_inside = to > 0 && to % 2 == 0;
  if (!to_inside) return true;
  if (from <= 0) return false;  // start or O
  // B-x = 2k-1, I-x = 2k: same type iff (from + 1) / 2 == to / 2
  return (from + 1) / 2 == to / 2;
}

void apply_bio_constraints(CrfParams& params) {
  const int L = params.num_labels;
  for (int j = 0; j < L; ++j) {
    if (!bio_transition_allowed(-1, j)) params.start[j] = kNegInf;
    for (int i = 0; i < L; ++i) {
      if (!bio_transition_allowed(i, j)) params.transitions(i, j) = kNegInf;
    }
  }
}

}  // namespace cmie::crf
