#include "cmie/encoders/bilstm.hpp"

#include <algorithm>

namespace cmie::encoders {

LstmDirection LstmDirection::create(ParameterSet& params, const std::string& prefix, int input_dim, int hidden,
                                    Rng& rng) {
  LstmDirection d;
  d.hidden = hidden;
  d.w_x = &params.add_fan_in(prefix + ".w_x", input_dim, 4 * hidden, rng);
  d.w_h = &params.add_fan_in(prefix + ".w_h", hidden, 4 * hidden, rng);
  d.bias = &params.add(prefix + ".bias", 1, 4 * hidden);
  // forget gate starts open
  for (int c = hidden; c < 2 * hidden; ++c) d.bias->value(0, c) = 1.0;
  return d;
}

Var lstm_scan(Tape& tape, Var x, const LstmDirection& dir, bool reverse) {
  const int T = tape.value(x).rows();
  const int H = dir.hidden;
  const Var projected = nn::add_bias(tape, nn::matmul(tape, x, tape.param(*dir.w_x)), tape.param(*dir.bias));
  const Var w_h = tape.param(*dir.w_h);
  std::vector<Var> states(T);
  Var h, c;
  for (int step = 0; step < T; ++step) {
    const int t = reverse ? T - 1 - step : step;
    Var gates = nn::slice_rows(tape, projected, t, 1);
    if (h.valid()) gates = nn::add(tape, gates, nn::matmul(tape, h, w_h));
    const Var i = nn::sigmoid(tape, nn::slice_cols(tape, gates, 0, H));
    const Var f = nn::sigmoid(tape, nn::slice_cols(tape, gates, H, H));
    const Var g = nn::tanh(tape, nn::slice_cols(tape, gates, 2 * H, H));
    const Var o = nn::sigmoid(tape, nn::slice_cols(tape, gates, 3 * H, H));
    const Var ig = nn::mul(tape, i, g);
    c = c.valid() ? nn::add(tape, nn::mul(tape, f, c), ig) : ig;
    h = nn::mul(tape, o, nn::tanh(tape, c));
    states[t] = h;
  }
  return nn::concat_rows(tape, states);
}

BiLstm BiLstm::create(ParameterSet& params, const std::string& prefix, int input_dim, int hidden, Rng& rng) {
  LstmDirection fwd = LstmDirection::create(params, prefix + ".fwd", input_dim, hidden, rng);
  LstmDirection bwd = LstmDirection::create(params, prefix + ".bwd", input_dim, hidden, rng);
  return BiLstm(fwd, bwd);
}

Var BiLstm::forward(Tape& tape, Var x) const {
  return nn::concat_cols(tape, {lstm_scan(tape, x, fwd_, false), lstm_scan(tape, x, bwd_, true)});
}

}  // namespace cmie::encoders
