#include "cmie/encoders/ucnn.hpp"

namespace cmie::encoders {

Ucnn Ucnn::create(ParameterSet& params, const std::string& prefix, int input_dim, const UnetConfig& config, Rng& rng) {
  auto channels = [&](int level) { return config.base_channels << level; };
  std::vector<Conv1d> down;
  int in = input_dim;
  for (int l = 0; l < config.depth; ++l) {
    down.push_back(Conv1d::create(params, prefix + ".down" + std::to_string(l), config.kernel, in, channels(l), rng));
    in = channels(l);
  }
  Conv1d bottom = Conv1d::create(params, prefix + ".bottom", config.kernel, in, channels(config.depth), rng);
  std::vector<Conv1d> up(config.depth);
  for (int l = config.depth - 1; l >= 0; --l) {
    up[l] = Conv1d::create(params, prefix + ".up" + std::to_string(l), config.kernel,
                           channels(l + 1) + channels(l), channels(l), rng);
  }
  return Ucnn(config, std::move(down), bottom, std::move(up));
}

int Ucnn::padded_length(int length) const {
  const int block = 1 << config_.depth;
  return (length + block - 1) / block * block;
}

Var Ucnn::forward(Tape& tape, Var x) const {
  const int T = tape.value(x).rows();
  Var h = nn::pad_rows(tape, x, padded_length(T));
  std::vector<Var> skips;
  for (const Conv1d& conv : down_) {
    const Var level = nn::relu(tape, conv(tape, h));
    skips.push_back(level);
    h = nn::maxpool2_rows(tape, level);
  }
  h = nn::relu(tape, bottom_(tape, h));
  for (int l = config_.depth - 1; l >= 0; --l) {
    const Var merged = nn::concat_cols(tape, {nn::upsample2_rows(tape, h), skips[l]});
    h = nn::relu(tape, up_[l](tape, merged));
  }
  return tape.value(h).rows() == T ? h : nn::slice_rows(tape, h, 0, T);
}

}  // namespace cmie::encoders
