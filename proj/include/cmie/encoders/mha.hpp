#pragma once

#include <optional>
#include <vector>

#include "cmie/encoders/encoder.hpp"

namespace cmie::encoders {

/// Multi-head attention weights. Head i uses column block
/// [i*d_k, (i+1)*d_k) of w_q, w_k and w_v; heads * d_k == d_model.
struct MhaParams {
  int heads = 1;
  int d_k = 0;
  Parameter* w_q = nullptr;  // [d_model, heads*d_k]
  Parameter* w_k = nullptr;
  Parameter* w_v = nullptr;
  Parameter* w_o = nullptr;  // [heads*d_k, d_model]

  int d_model() const { return heads * d_k; }
  static MhaParams create(ParameterSet& params, const std::string& prefix, int d_model, int heads, Rng& rng);
};

/// Self-attention with Q = K = V = x:
///   head_i = softmax((x Wq_i)(x Wk_i)^T / sqrt(d_k)) (x Wv_i)
///   out    = concat(head_1..head_h) W_o
/// When `attention` is non-null it receives one [T, T] weight matrix per head.
Var mha_forward(Tape& tape, Var x, const MhaParams& params, std::vector<Matrix>* attention = nullptr);

/// Fixed sinusoidal position table [T, d].
Matrix sinusoidal_positions(int length, int dim);

/// Self-attention encoder: optional input projection to d_model, sinusoidal
/// positions, attention, optional residual connection.
class SelfAttentionEncoder final : public Encoder {
 public:
  SelfAttentionEncoder(std::optional<Linear> input_projection, MhaParams mha, bool positions, bool residual)
      : input_projection_(input_projection), mha_(mha), positions_(positions), residual_(residual) {}
  static SelfAttentionEncoder create(ParameterSet& params, const std::string& prefix, int input_dim,
                                     const EncoderSpec& spec, Rng& rng);

  Var forward(Tape& tape, Var x) const override;
  int output_dim() const override { return mha_.d_model(); }
  const MhaParams& mha() const { return mha_; }

 private:
  std::optional<Linear> input_projection_;
  MhaParams mha_;
  bool positions_;
  bool residual_;
};

}  // namespace cmie::encoders
