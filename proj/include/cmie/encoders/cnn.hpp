#pragma once

#include "cmie/encoders/encoder.hpp"

namespace cmie::encoders {

/// Parallel same-length convolutions (ReLU) concatenated along channels.
/// With the default widths {2,3,4} x 128 filters the output has 384 channels.
class MultiWidthCnn final : public Encoder {
 public:
  explicit MultiWidthCnn(std::vector<Conv1d> branches);
  static MultiWidthCnn create(ParameterSet& params, const std::string& prefix, int input_dim,
                              const std::vector<int>& widths, const std::vector<int>& filters, Rng& rng);

  Var forward(Tape& tape, Var x) const override;
  int output_dim() const override { return out_dim_; }
  const std::vector<Conv1d>& branches() const { return branches_; }

 private:
  std::vector<Conv1d> branches_;
  int out_dim_ = 0;
};

}  // namespace cmie::encoders
