#pragma once

#include <vector>

#include "cmie/encoders/encoder.hpp"

namespace cmie::encoders {

struct UnetConfig {
  int depth = 2;
  int base_channels = 32;  // level l uses base_channels << l
  int kernel = 3;
};

/// 1-D U-net. Encoder levels: conv+ReLU, then pairwise max-pool. Decoder
/// levels: nearest-neighbour x2 upsample, concatenate the matching encoder
/// output, conv+ReLU. Input is zero-padded to a multiple of 2^depth and the
/// output cropped back to T rows.
class Ucnn final : public Encoder {
 public:
  Ucnn(UnetConfig config, std::vector<Conv1d> down, Conv1d bottom, std::vector<Conv1d> up)
      : config_(config), down_(std::move(down)), bottom_(bottom), up_(std::move(up)) {}
  static Ucnn create(ParameterSet& params, const std::string& prefix, int input_dim, const UnetConfig& config,
                     Rng& rng);

  Var forward(Tape& tape, Var x) const override;
  int output_dim() const override { return config_.base_channels; }
  /// Internal length for an input of `length` rows.
  int padded_length(int length) const;

 private:
  UnetConfig config_;
  std::vector<Conv1d> down_;
  Conv1d bottom_;
  std::vector<Conv1d> up_;  // up_[l] produces level-l channels
};

}  // namespace cmie::encoders
