#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cmie::oracle {

Matrix random_matrix(Rng& rng, int rows, int cols, double scale) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = scale * rng.normal();
  return m;
}

crf::CrfParams random_crf(Rng& rng, int labels) {
  crf::CrfParams p;
  p.num_labels = labels;
  p.transitions = random_matrix(rng, labels, labels);
  for (int i = 0; i < labels; ++i) {
    p.start.push_back(rng.normal());
    p.stop.push_back(rng.normal());
  }
  return p;
}

CrfEnumeration enumerate_crf(const Matrix& e, const crf::CrfParams& p) {
  const int T = e.rows();
  const int L = e.cols();
  std::vector<int> y(T, 0);
  std::vector<double> scores;
  std::vector<std::vector<int>> seqs;
  while (true) {
    double s = p.start[y[0]] + p.stop[y[T - 1]];
    for (int t = 0; t < T; ++t) s += e(t, y[t]);
    for (int t = 1; t < T; ++t) s += p.transitions(y[t - 1], y[t]);
    scores.push_back(s);
    seqs.push_back(y);
    int t = 0;
    while (t < T && ++y[t] == L) y[t++] = 0;
    if (t == T) break;
  }
  CrfEnumeration out;
  out.best_score = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (double s : scores) sum += std::exp(s - out.best_score);
  out.log_partition = out.best_score + std::log(sum);
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    if (scores[i] != out.best_score) continue;
    ++out.optimum_count;
    const auto rev_less = [](const std::vector<int>& a, const std::vector<int>& b) {
      return std::lexicographical_compare(a.rbegin(), a.rend(), b.rbegin(), b.rend());
    };
    if (out.best.empty() || rev_less(seqs[i], out.best)) out.best = seqs[i];
  }
  return out;
}

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

GradCheck check_gradients(nn::ParameterSet& params, const std::function<double()>& loss, double h, int per_tensor,
                          Rng& rng) {
  GradCheck out;
  for (std::size_t i = 0; i < params.count(); ++i) {
    nn::Parameter& p = params[i];
    std::vector<std::size_t> coords(p.value.size());
    for (std::size_t k = 0; k < coords.size(); ++k) coords[k] = k;
    if (per_tensor > 0 && coords.size() > static_cast<std::size_t>(per_tensor)) {
      rng.shuffle(coords);
      coords.resize(per_tensor);
    }
    for (std::size_t k : coords) {
      double& v = p.value.data()[k];
      const double saved = v;
      v = saved + h;
      const double up = loss();
      v = saved - h;
      const double down = loss();
      v = saved;
      const double numeric = (up - down) / (2 * h);
      const double err = relative_error(p.grad.data()[k], numeric);
      ++out.checked;
      if (err > out.max_rel_error || std::isnan(err)) {
        out.max_rel_error = std::isnan(err) ? std::numeric_limits<double>::infinity() : err;
        out.worst = p.name + "[" + std::to_string(k) + "] analytic " + std::to_string(p.grad.data()[k]) +
                    " numeric " + std::to_string(numeric);
      }
    }
  }
  return out;
}

GradCheck check_module(nn::ParameterSet& params, const std::function<nn::Var(nn::Tape&)>& forward,
                       const Matrix& projection, double h, int per_tensor, Rng& rng) {
  params.zero_grad();
  {
    nn::Tape tape;
    const nn::Var y = forward(tape);
    tape.backward(nn::weighted_sum(tape, y, projection));
  }
  const auto loss = [&] {
    nn::Tape tape;
    return tape.value(nn::weighted_sum(tape, forward(tape), projection))(0, 0);
  };
  return check_gradients(params, loss, h, per_tensor, rng);
}

PairSearch exhaustive_pair(const std::vector<double>& ps, const std::vector<double>& pe, int max_len) {
  PairSearch best;
  const int T = static_cast<int>(ps.size());
  for (int s = 0; s < T; ++s) {
    for (int e = 0; e < T; ++e) {
      if (e < s || e >= s + max_len) continue;
      const double score = ps[s] + pe[e];
      const bool better = best.start < 0 || score > best.score ||
                          (score == best.score && (s < best.start || (s == best.start && e < best.end)));
      if (better) best = {s, e, score};
    }
  }
  return best;
}

std::vector<double> random_simplex(Rng& rng, int n) {
  std::vector<double> v(n);
  double sum = 0.0;
  for (double& x : v) {
    x = -std::log(1.0 - rng.uniform());
    sum += x;
  }
  for (double& x : v) x /= sum;
  return v;
}

void pairwise_match(const std::vector<corpus::Span>& gold, const std::vector<corpus::Span>& pred, long& tp, long& fp,
                    long& fn) {
  std::vector<corpus::Span> g;
  for (const auto& s : gold) {
    if (std::none_of(g.begin(), g.end(), [&](const corpus::Span& x) { return x == s; })) g.push_back(s);
  }
  std::vector<corpus::Span> p;
  for (const auto& s : pred) {
    if (std::none_of(p.begin(), p.end(), [&](const corpus::Span& x) { return x == s; })) p.push_back(s);
  }
  tp = 0;
  for (const auto& a : g) {
    for (const auto& b : p) {
      if (a.start == b.start && a.end == b.end && a.type == b.type) ++tp;
    }
  }
  fp = static_cast<long>(pred.size()) - tp;
  fn = static_cast<long>(gold.size()) - tp;
}

std::vector<corpus::Span> random_spans(Rng& rng, int length, int max_spans) {
  std::vector<corpus::Span> out;
  int pos = 0;
  const int n = static_cast<int>(rng.below(max_spans + 1));
  for (int i = 0; i < n && pos < length; ++i) {
    const int start = pos + static_cast<int>(rng.below(std::min(4, length - pos)));
    if (start >= length) break;
    const int len = 1 + static_cast<int>(rng.below(std::min(5, length - start)));
    out.push_back({start, start + len, corpus::kAttributeTypes[rng.below(3)], {}});
    pos = start + len;
  }
  return out;
}

std::vector<corpus::Span> random_loose_spans(Rng& rng, int length, int count) {
  std::vector<corpus::Span> out;
  for (int i = 0; i < count; ++i) {
    const int start = static_cast<int>(rng.below(length));
    const int len = 1 + static_cast<int>(rng.below(std::min(4, length - start)));
    out.push_back({start, start + len, corpus::kAttributeTypes[rng.below(3)], {}});
  }
  return out;
}

}  // namespace cmie::oracle
