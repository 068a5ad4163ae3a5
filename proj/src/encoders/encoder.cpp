#include "cmie/encoders/encoder.hpp"

#include <algorithm>

#include "cmie/core/error.hpp"
#include "cmie/encoders/attention_lstm.hpp"
#include "cmie/encoders/bilstm.hpp"
#include "cmie/encoders/cnn.hpp"
#include "cmie/encoders/mha.hpp"
#include "cmie/encoders/ucnn.hpp"
#include "cmie/encoders/wavenet.hpp"

namespace cmie::encoders {

const std::vector<std::string>& encoder_kinds() {
  static const std::vector<std::string> kinds = {"none", "bilstm", "cnn", "mha", "wavenet", "ucnn", "attention_lstm"};
  return kinds;
}

namespace {
void positive(int v, const char* what) {
  if (v < 1) throw UsageError(std::string(what) + " must be positive");
}
}  // namespace

std::unique_ptr<Encoder> make_encoder(const EncoderSpec& spec, int input_dim, ParameterSet& params,
                                      const std::string& prefix, Rng& rng) {
  positive(input_dim, "encoder input dimension");
  if (spec.kind == "none") return std::make_unique<IdentityEncoder>(input_dim);
  if (spec.kind == "bilstm") {
    positive(spec.lstm_hidden, "lstm_hidden");
    return std::make_unique<BiLstm>(BiLstm::create(params, prefix, input_dim, spec.lstm_hidden, rng));
  }
  if (spec.kind == "cnn") {
    if (spec.cnn_widths.empty() || spec.cnn_widths.size() != spec.cnn_filters.size()) {
      throw UsageError("cnn_widths and cnn_filters must be non-empty and of equal length");
    }
    for (int w : spec.cnn_widths) positive(w, "cnn width");
    for (int f : spec.cnn_filters) positive(f, "cnn filter count");
    return std::make_unique<MultiWidthCnn>(
        MultiWidthCnn::create(params, prefix, input_dim, spec.cnn_widths, spec.cnn_filters, rng));
  }
  if (spec.kind == "mha") {
    positive(spec.mha_heads, "mha_heads");
    positive(spec.mha_model_dim, "mha_model_dim");
    if (spec.mha_model_dim % spec.mha_heads != 0) throw UsageError("mha_model_dim must be divisible by mha_heads");
    return std::make_unique<SelfAttentionEncoder>(SelfAttentionEncoder::create(params, prefix, input_dim, spec, rng));
  }
  if (spec.kind == "wavenet") {
    positive(spec.wavenet_layers, "wavenet_layers");
    positive(spec.wavenet_channels, "wavenet_channels");
    return std::make_unique<DilatedConvStack>(
        DilatedConvStack::create(params, prefix, input_dim, spec.wavenet_layers, spec.wavenet_channels, rng));
  }
  if (spec.kind == "ucnn") {
    if (spec.ucnn_depth < 0) throw UsageError("ucnn_depth must be non-negative");
    positive(spec.ucnn_base_channels, "ucnn_base_channels");
    positive(spec.ucnn_kernel, "ucnn_kernel");
    return std::make_unique<Ucnn>(Ucnn::create(
        params, prefix, input_dim, UnetConfig{spec.ucnn_depth, spec.ucnn_base_channels, spec.ucnn_kernel}, rng));
  }
  if (spec.kind == "attention_lstm") {
    positive(spec.alstm_hidden, "alstm_hidden");
    positive(spec.alstm_codebook_size, "alstm_codebook_size");
    positive(spec.alstm_query_dim, "alstm_query_dim");
    return std::make_unique<AttentionLstm>(AttentionLstm::create(params, prefix, input_dim, spec, rng));
  }
  std::string valid;
  for (const auto& k : encoder_kinds()) valid += (valid.empty() ? "" : ", ") + k;
  throw UsageError("unknown encoder kind '" + spec.kind + "' (valid: " + valid + ")");
}

Var embed(Tape& tape, std::span<const int> char_ids, const EmbeddingTable& table) {
  const int v = table.weights->value.rows();
  for (int id : char_ids) {
    if (id < 0 || id >= v) throw UsageError("character id " + std::to_string(id) + " outside embedding table");
  }
  return nn::gather_rows(tape, tape.param(*table.weights), char_ids);
}

Linear Linear::create(ParameterSet& params, const std::string& name, int in, int out, Rng& rng) {
  Linear l;
  l.weight = &params.add_fan_in(name + ".weight", in, out, rng);
  l.bias = &params.add(name + ".bias", 1, out);
  return l;
}

Var Linear::operator()(Tape& tape, Var x) const {
  return nn::add_bias(tape, nn::matmul(tape, x, tape.param(*weight)), tape.param(*bias));
}

Conv1d Conv1d::create(ParameterSet& params, const std::string& name, int width, int in, int out, Rng& rng) {
  Conv1d c;
  c.width = width;
  c.weight = &params.add_fan_in(name + ".weight", width * in, out, rng);
  c.bias = &params.add(name + ".bias", 1, out);
  return c;
}

Var Conv1d::operator()(Tape& tape, Var x) const {
  const int left = width / 2;  // ceil((w-1)/2)
  Var cols = x;
  if (width > 1) {
    std::vector<Var> taps;
    taps.reserve(width);
    for (int k = 0; k < width; ++k) {
      const int offset = left - k;  // tap k reads x[t - left + k]
      taps.push_back(offset == 0 ? x : nn::shift_rows(tape, x, offset));
    }
    cols = nn::concat_cols(tape, taps);
  }
  return nn::add_bias(tape, nn::matmul(tape, cols, tape.param(*weight)), tape.param(*bias));
}

}  // namespace cmie::encoders
