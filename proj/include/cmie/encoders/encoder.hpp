#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cmie/core/rng.hpp"
#include "cmie/encoders/vocab.hpp"
#include "cmie/nn/parameter.hpp"
#include "cmie/nn/tape.hpp"

namespace cmie::encoders {

using nn::Parameter;
using nn::ParameterSet;
using nn::Tape;
using nn::Var;

/// Maps a [T, d_in] feature matrix to [T, output_dim()].
class Encoder {
 public:
  virtual ~Encoder() = default;
  virtual Var forward(Tape& tape, Var x) const = 0;
  virtual int output_dim() const = 0;
};

/// Hyperparameters for every encoder kind; only the fields of `kind` are read.
struct EncoderSpec {
  /// none | bilstm | cnn | mha | wavenet | ucnn | attention_lstm
  std::string kind = "bilstm";

  int lstm_hidden = 64;

  std::vector<int> cnn_widths = {2, 3, 4};
  std::vector<int> cnn_filters = {128, 128, 128};

  int mha_model_dim = 256;
  int mha_heads = 16;
  bool mha_position_encoding = true;
  bool mha_residual = true;

  int wavenet_layers = 4;
  int wavenet_channels = 64;

  int ucnn_depth = 2;
  int ucnn_base_channels = 32;
  int ucnn_kernel = 3;

  int alstm_hidden = 64;
  int alstm_codebook_size = 32;
  int alstm_query_dim = 32;
};

const std::vector<std::string>& encoder_kinds();

/// Builds an encoder and registers its parameters under `prefix`. Throws
/// UsageError for an unknown kind or invalid sizes.
std::unique_ptr<Encoder> make_encoder(const EncoderSpec& spec, int input_dim, ParameterSet& params,
                                      const std::string& prefix, Rng& rng);

/// Passes its input through; the "crf" tagger uses it.
class IdentityEncoder final : public Encoder {
 public:
  explicit IdentityEncoder(int dim) : dim_(dim) {}
  Var forward(Tape&, Var x) const override { return x; }
  int output_dim() const override { return dim_; }

 private:
  int dim_;
};

/// Character embedding lookup.
struct EmbeddingTable {
  Vocab vocab;
  Parameter* weights = nullptr;  // [V, d]
};

Var embed(Tape& tape, std::span<const int> char_ids, const EmbeddingTable& table);

/// y = x W + b.
struct Linear {
  Parameter* weight = nullptr;  // [in, out]
  Parameter* bias = nullptr;    // [1, out]

  static Linear create(ParameterSet& params, const std::string& name, int in, int out, Rng& rng);
  Var operator()(Tape& tape, Var x) const;
};

/// Same-length 1-D convolution with zero padding: a width-w kernel pads
/// ceil((w-1)/2) rows before and floor((w-1)/2) after.
struct Conv1d {
  int width = 1;
  Parameter* weight = nullptr;  // [width * in, out], tap-major
  Parameter* bias = nullptr;    // [1, out]

  static Conv1d create(ParameterSet& params, const std::string& name, int width, int in, int out, Rng& rng);
  Var operator()(Tape& tape, Var x) const;
};

}  // namespace cmie::encoders
