#pragma once

#include <vector>

#include "cmie/encoders/encoder.hpp"

namespace cmie::encoders {

/// Number of input positions on one side (including the centre) that can
/// reach an output. Dilated stacks use dilations 1, 2, 4, ...
int receptive_field(int kernel, int layers, bool dilated);

/// One bidirectional dilated layer (kernel width 2 per direction):
///   fwd = [x_t, x_{t-d}] W_f + b_f
///   bwd = [x_t, x_{t+d}] W_b + b_b
///   y   = tanh([fwd, bwd] W_m + b_m)  (+ x when widths match)
struct DilatedLayer {
  int dilation = 1;
  bool residual = false;
  Parameter* w_fwd = nullptr;  // [2*C_in, C]
  Parameter* b_fwd = nullptr;
  Parameter* w_bwd = nullptr;  // [2*C_in, C]
  Parameter* b_bwd = nullptr;
  Parameter* w_mix = nullptr;  // [2*C, C]
  Parameter* b_mix = nullptr;
};

/// Stack with dilation 2^(l-1) at layer l. Output t depends only on inputs
/// within t +/- (2^n - 1).
class DilatedConvStack final : public Encoder {
 public:
  DilatedConvStack(std::vector<DilatedLayer> layers, int channels) : layers_(std::move(layers)), channels_(channels) {}
  static DilatedConvStack create(ParameterSet& params, const std::string& prefix, int input_dim, int layers,
                                 int channels, Rng& rng);

  Var forward(Tape& tape, Var x) const override;
  int output_dim() const override { return channels_; }
  const std::vector<DilatedLayer>& layers() const { return layers_; }

 private:
  std::vector<DilatedLayer> layers_;
  int channels_;
};

}  // namespace cmie::encoders
