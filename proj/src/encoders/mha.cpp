#include "cmie/encoders/mha.hpp"

#include <cmath>

#include "cmie/core/error.hpp"

namespace cmie::encoders {

MhaParams MhaParams::create(ParameterSet& params, const std::string& prefix, int d_model, int heads, Rng& rng) {
  if (heads < 1 || d_model % heads != 0) throw UsageError("d_model must be a multiple of the head count");
  MhaParams p;
  p.heads = heads;
  p.d_k = d_model / heads;
  p.w_q = &params.add_fan_in(prefix + ".w_q", d_model, d_model, rng);
  p.w_k = &params.add_fan_in(prefix + ".w_k", d_model, d_model, rng);
  p.w_v = &params.add_fan_in(prefix + ".w_v", d_model, d_model, rng);
  p.w_o = &params.add_fan_in(prefix + ".w_o", d_model, d_model, rng);
  return p;
}

Var mha_forward(Tape& tape, Var x, const MhaParams& p, std::vector<Matrix>* attention) {
  if (tape.value(x).cols() != p.w_q->value.rows()) throw UsageError("mha input width differs from d_model");
  const Var q = nn::matmul(tape, x, tape.param(*p.w_q));
  const Var k = nn::matmul(tape, x, tape.param(*p.w_k));
  const Var v = nn::matmul(tape, x, tape.param(*p.w_v));
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(p.d_k));
  std::vector<Var> heads;
  heads.reserve(p.heads);
  if (attention != nullptr) attention->clear();
  for (int h = 0; h < p.heads; ++h) {
    const Var qh = nn::slice_cols(tape, q, h * p.d_k, p.d_k);
    const Var kh = nn::slice_cols(tape, k, h * p.d_k, p.d_k);
    const Var vh = nn::slice_cols(tape, v, h * p.d_k, p.d_k);
    const Var weights = nn::softmax_rows(tape, nn::scale(tape, nn::matmul_nt(tape, qh, kh), inv_sqrt_dk));
    if (attention != nullptr) attention->push_back(tape.value(weights));
    heads.push_back(nn::matmul(tape, weights, vh));
  }
  const Var joined = heads.size() == 1 ? heads[0] : nn::concat_cols(tape, heads);
  return nn::matmul(tape, joined, tape.param(*p.w_o));
}

Matrix sinusoidal_positions(int length, int dim) {
  Matrix pe(length, dim);
  for (int pos = 0; pos < length; ++pos) {
    for (int i = 0; i < dim; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / dim);
      pe(pos, i) = (i % 2 == 0) ? std::sin(pos * rate) : std::cos(pos * rate);
    }
  }
  return pe;
}

SelfAttentionEncoder SelfAttentionEncoder::create(ParameterSet& params, const std::string& prefix, int input_dim,
                                                  const EncoderSpec& spec, Rng& rng) {
  std::optional<Linear> proj;
  if (input_dim != spec.mha_model_dim) proj = Linear::create(params, prefix + ".input", input_dim, spec.mha_model_dim, rng);
  MhaParams mha = MhaParams::create(params, prefix + ".mha", spec.mha_model_dim, spec.mha_heads, rng);
  return SelfAttentionEncoder(proj, mha, spec.mha_position_encoding, spec.mha_residual);
}

Var SelfAttentionEncoder::forward(Tape& tape, Var x) const {
  Var in = input_projection_ ? (*input_projection_)(tape, x) : x;
  if (positions_) {
    const Matrix& v = tape.value(in);
    in = nn::add(tape, in, tape.constant(sinusoidal_positions(v.rows(), v.cols())));
  }
  const Var out = mha_forward(tape, in, mha_);
  return residual_ ? nn::add(tape, out, in) : out;
}

}  // namespace cmie::encoders
