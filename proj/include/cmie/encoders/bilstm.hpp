#pragma once

#include "cmie/encoders/encoder.hpp"

namespace cmie::encoders {

/// One LSTM direction. Gate blocks are laid out [input, forget, candidate,
/// output] along the columns of w_x, w_h and bias.
struct LstmDirection {
  int hidden = 0;
  Parameter* w_x = nullptr;   // [d, 4H]
  Parameter* w_h = nullptr;   // [H, 4H]
  Parameter* bias = nullptr;  // [1, 4H]

  static LstmDirection create(ParameterSet& params, const std::string& prefix, int input_dim, int hidden, Rng& rng);
};

/// Runs one direction from zero state. The result is always in input time
/// order; `reverse` only changes the scan direction.
Var lstm_scan(Tape& tape, Var x, const LstmDirection& dir, bool reverse);

/// [T, d] -> [T, 2H]: forward states then backward states.
class BiLstm final : public Encoder {
 public:
  BiLstm(LstmDirection fwd, LstmDirection bwd) : fwd_(fwd), bwd_(bwd) {}
  static BiLstm create(ParameterSet& params, const std::string& prefix, int input_dim, int hidden, Rng& rng);

  Var forward(Tape& tape, Var x) const override;
  int output_dim() const override { return fwd_.hidden + bwd_.hidden; }

  const LstmDirection& forward_direction() const { return fwd_; }
  const LstmDirection& backward_direction() const { return bwd_; }

 private:
  LstmDirection fwd_;
  LstmDirection bwd_;
};

}  // namespace cmie::encoders
