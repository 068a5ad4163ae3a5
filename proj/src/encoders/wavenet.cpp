#include "cmie/encoders/wavenet.hpp"

#include "cmie/core/error.hpp"

namespace cmie::encoders {

int receptive_field(int kernel, int layers, bool dilated) {
  if (kernel < 1 || layers < 0) throw UsageError("receptive_field needs kernel >= 1 and layers >= 0");
  if (!dilated) return layers * (kernel - 1) + 1;
  // sum of dilations 1 + 2 + ... + 2^(layers-1)
  return (kernel - 1) * ((1 << layers) - 1) + 1;
}

DilatedConvStack DilatedConvStack::create(ParameterSet& params, const std::string& prefix, int input_dim, int layers,
                                          int channels, Rng& rng) {
  std::vector<DilatedLayer> out;
  int in = input_dim;
  for (int l = 0; l < layers; ++l) {
    const std::string p = prefix + ".layer" + std::to_string(l);
    DilatedLayer layer;
    layer.dilation = 1 << l;
    layer.residual = in == channels;
    layer.w_fwd = &params.add_fan_in(p + ".w_fwd", 2 * in, channels, rng);
    layer.b_fwd = &params.add(p + ".b_fwd", 1, channels);
    layer.w_bwd = &params.add_fan_in(p + ".w_bwd", 2 * in, channels, rng);
    layer.b_bwd = &params.add(p + ".b_bwd", 1, channels);
    layer.w_mix = &params.add_fan_in(p + ".w_mix", 2 * channels, channels, rng);
    layer.b_mix = &params.add(p + ".b_mix", 1, channels);
    out.push_back(layer);
    in = channels;
  }
  return DilatedConvStack(std::move(out), channels);
}

Var DilatedConvStack::forward(Tape& tape, Var x) const {
  Var h = x;
  for (const DilatedLayer& l : layers_) {
    const Var past = nn::concat_cols(tape, {h, nn::shift_rows(tape, h, l.dilation)});
    const Var future = nn::concat_cols(tape, {h, nn::shift_rows(tape, h, -l.dilation)});
    const Var fwd = nn::add_bias(tape, nn::matmul(tape, past, tape.param(*l.w_fwd)), tape.param(*l.b_fwd));
    const Var bwd = nn::add_bias(tape, nn::matmul(tape, future, tape.param(*l.w_bwd)), tape.param(*l.b_bwd));
    const Var mixed = nn::add_bias(tape, nn::matmul(tape, nn::concat_cols(tape, {fwd, bwd}), tape.param(*l.w_mix)),
                                   tape.param(*l.b_mix));
    const Var y = nn::tanh(tape, mixed);
    h = l.residual ? nn::add(tape, y, h) : y;
  }
  return h;
}

}  // namespace cmie::encoders
