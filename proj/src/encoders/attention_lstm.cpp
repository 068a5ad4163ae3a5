#include "cmie/encoders/attention_lstm.hpp"

#include <algorithm>
#include <limits>

#include "cmie/core/error.hpp"

namespace cmie::encoders {

AttentionLstmDirection AttentionLstmDirection::create(ParameterSet& params, const std::string& prefix, int input_dim,
                                                      int hidden, int codebook_size, int query_dim, Rng& rng) {
  if (codebook_size < 1) throw UsageError("attention-LSTM codebook must have at least one codeword");
  AttentionLstmDirection d;
  d.hidden = hidden;
  d.query_dim = query_dim;
  d.w_q = &params.add_fan_in(prefix + ".w_q", input_dim + hidden, query_dim, rng);
  d.b_q = &params.add(prefix + ".b_q", 1, query_dim);
  d.codebook = &params.add_uniform(prefix + ".codebook", codebook_size, query_dim, 1.0, rng);
  d.w_g = &params.add_fan_in(prefix + ".w_g", query_dim, hidden, rng);
  d.b_g = &params.add(prefix + ".b_g", 1, hidden);
  d.w_gates = &params.add_fan_in(prefix + ".w_gates", input_dim + hidden, 3 * hidden, rng);
  d.b_gates = &params.add(prefix + ".b_gates", 1, 3 * hidden);
  for (int c = hidden; c < 2 * hidden; ++c) d.b_gates->value(0, c) = 1.0;
  return d;
}

int nearest_codeword(const Matrix& codebook, const double* query) {
  if (codebook.rows() < 1) throw UsageError("attention-LSTM codebook is empty");
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int k = 0; k < codebook.rows(); ++k) {
    double d = 0.0;
    const double* m = codebook.row(k);
    for (int j = 0; j < codebook.cols(); ++j) d += (query[j] - m[j]) * (query[j] - m[j]);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

AttentionLstmStep attention_lstm_step(Tape& tape, Var x_t, Var h_prev, Var c_prev, const AttentionLstmDirection& dir) {
  const int H = dir.hidden;
  const Var xh = nn::concat_cols(tape, {x_t, h_prev});
  const Var q = nn::add_bias(tape, nn::matmul(tape, xh, tape.param(*dir.w_q)), tape.param(*dir.b_q));
  const int k = nearest_codeword(dir.codebook->value, tape.value(q).row(0));
  const int sel[] = {k};
  const Var r = nn::sub(tape, q, nn::gather_rows(tape, tape.param(*dir.codebook), sel));
  const Var g = nn::tanh(tape, nn::add_bias(tape, nn::matmul(tape, r, tape.param(*dir.w_g)), tape.param(*dir.b_g)));
  const Var gates =
      nn::add_bias(tape, nn::matmul(tape, xh, tape.param(*dir.w_gates)), tape.param(*dir.b_gates));
  const Var i = nn::sigmoid(tape, nn::slice_cols(tape, gates, 0, H));
  const Var f = nn::sigmoid(tape, nn::slice_cols(tape, gates, H, H));
  const Var o = nn::sigmoid(tape, nn::slice_cols(tape, gates, 2 * H, H));
  const Var c = nn::add(tape, nn::mul(tape, f, c_prev), nn::mul(tape, i, g));
  const Var h = nn::mul(tape, o, nn::tanh(tape, c));
  return AttentionLstmStep{h, c, q, k};
}

Var attention_lstm_scan(Tape& tape, Var x, const AttentionLstmDirection& dir, bool reverse, std::vector<int>* codewords,
                        std::vector<Matrix>* queries) {
  const int T = tape.value(x).rows();
  Var h = tape.constant(Matrix(1, dir.hidden));
  Var c = tape.constant(Matrix(1, dir.hidden));
  std::vector<Var> states(T);
  if (codewords != nullptr) codewords->assign(T, -1);
  for (int step = 0; step < T; ++step) {
    const int t = reverse ? T - 1 - step : step;
    const AttentionLstmStep s = attention_lstm_step(tape, nn::slice_rows(tape, x, t, 1), h, c, dir);
    h = s.h;
    c = s.c;
    states[t] = h;
    if (codewords != nullptr) (*codewords)[t] = s.codeword;
    if (queries != nullptr) queries->push_back(tape.value(s.query));
  }
  return nn::concat_rows(tape, states);
}

AttentionLstm AttentionLstm::create(ParameterSet& params, const std::string& prefix, int input_dim,
                                    const EncoderSpec& spec, Rng& rng) {
  auto fwd = AttentionLstmDirection::create(params, prefix + ".fwd", input_dim, spec.alstm_hidden,
                                            spec.alstm_codebook_size, spec.alstm_query_dim, rng);
  auto bwd = AttentionLstmDirection::create(params, prefix + ".bwd", input_dim, spec.alstm_hidden,
                                            spec.alstm_codebook_size, spec.alstm_query_dim, rng);
  return AttentionLstm(fwd, bwd);
}

Var AttentionLstm::forward(Tape& tape, Var x) const {
  return nn::concat_cols(tape, {attention_lstm_scan(tape, x, fwd_, false), attention_lstm_scan(tape, x, bwd_, true)});
}

void AttentionLstm::init_codebooks_from_queries(const std::vector<Matrix>& inputs, Rng& rng) {
  for (const AttentionLstmDirection* dir : {&fwd_, &bwd_}) {
    std::vector<Matrix> queries;
    for (const Matrix& x : inputs) {
      Tape tape;
      attention_lstm_scan(tape, tape.constant(x), *dir, dir == &bwd_, nullptr, &queries);
    }
    Matrix& book = dir->codebook->value;
    if (queries.empty()) continue;
    std::vector<std::size_t> order(queries.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    // Distinct queries first; repeat with small jitter if there are too few.
    std::vector<std::size_t> picked;
    for (std::size_t idx : order) {
      if (static_cast<int>(picked.size()) == book.rows()) break;
      const bool dup = std::any_of(picked.begin(), picked.end(), [&](std::size_t p) { return queries[p] == queries[idx]; });
      if (!dup) picked.push_back(idx);
    }
    for (int k = 0; k < book.rows(); ++k) {
      const Matrix& q = queries[picked[k % picked.size()]];
      for (int j = 0; j < book.cols(); ++j) {
        const double jitter = k < static_cast<int>(picked.size()) ? 0.0 : rng.uniform(-1e-2, 1e-2);
        book(k, j) = static_cast<float>(q(0, j) + jitter);
      }
    }
  }
}

}  // namespace cmie::encoders
