#pragma once

#include <vector>

#include "cmie/encoders/encoder.hpp"

namespace cmie::encoders {

/// LSTM cell whose candidate input is a codebook residual:
///   q   = [x_t, h_prev] W_q + b_q
///   k*  = argmin_k ||q - m_k||  (ties -> smallest k)
///   r   = q - m_k*
///   g   = tanh(r W_g + b_g)
///   i, f, o = sigmoid([x_t, h_prev] W_gates + b_gates)
///   c_t = f * c_prev + i * g,   h_t = o * tanh(c_t)
/// The selection is a constant for differentiation; gradients reach q and
/// the selected row m_k* through r only.
struct AttentionLstmDirection {
  int hidden = 0;
  int query_dim = 0;
  Parameter* w_q = nullptr;       // [d + H, p]
  Parameter* b_q = nullptr;       // [1, p]
  Parameter* codebook = nullptr;  // [K, p]
  Parameter* w_g = nullptr;       // [p, H]
  Parameter* b_g = nullptr;       // [1, H]
  Parameter* w_gates = nullptr;   // [d + H, 3H], blocks [i, f, o]
  Parameter* b_gates = nullptr;   // [1, 3H]

  static AttentionLstmDirection create(ParameterSet& params, const std::string& prefix, int input_dim, int hidden,
                                       int codebook_size, int query_dim, Rng& rng);
};

struct AttentionLstmStep {
  Var h;
  Var c;
  Var query;
  int codeword = -1;
};

/// Index of the nearest codebook row to `query` (a 1 x p row); ties go to the
/// smallest index. Throws UsageError for an empty codebook.
int nearest_codeword(const Matrix& codebook, const double* query);

AttentionLstmStep attention_lstm_step(Tape& tape, Var x_t, Var h_prev, Var c_prev, const AttentionLstmDirection& dir);

/// Scans one direction; rows of the result follow input time order.
/// `codewords`, if given, receives the selection per time step.
Var attention_lstm_scan(Tape& tape, Var x, const AttentionLstmDirection& dir, bool reverse,
                        std::vector<int>* codewords = nullptr, std::vector<Matrix>* queries = nullptr);

/// Bidirectional attention-LSTM: [T, d] -> [T, 2H].
class AttentionLstm final : public Encoder {
 public:
  AttentionLstm(AttentionLstmDirection fwd, AttentionLstmDirection bwd) : fwd_(fwd), bwd_(bwd) {}
  static AttentionLstm create(ParameterSet& params, const std::string& prefix, int input_dim, const EncoderSpec& spec,
                              Rng& rng);

  Var forward(Tape& tape, Var x) const override;
  int output_dim() const override { return fwd_.hidden + bwd_.hidden; }

  /// Re-seeds each codebook with distinct queries drawn from running the
  /// current parameters over `inputs` ([T, d] feature matrices).
  void init_codebooks_from_queries(const std::vector<Matrix>& inputs, Rng& rng);

  const AttentionLstmDirection& forward_direction() const { return fwd_; }
  const AttentionLstmDirection& backward_direction() const { return bwd_; }

 private:
  AttentionLstmDirection fwd_;
  AttentionLstmDirection bwd_;
};

}  // namespace cmie::encoders
