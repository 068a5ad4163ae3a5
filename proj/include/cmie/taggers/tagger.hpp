#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cmie/corpus/bio.hpp"
#include "cmie/corpus/types.hpp"
#include "cmie/crf/crf.hpp"
#include "cmie/encoders/encoder.hpp"
#include "cmie/encoders/vocab.hpp"
#include "cmie/nn/parameter.hpp"
#include "cmie/nn/tape.hpp"

namespace cmie::taggers {

enum class Decoder { Softmax, Crf };

/// What the tagger reads: the whole report, or the impression section and
/// the first findings sentence as two separate sequences.
enum class InputView { Joint, Sections };

/// Character range of a report handed to the tagger as one sequence.
struct Segment {
  int offset = 0;
  int length = 0;
};

/// Joint: the whole text. Sections: the impression and first findings
/// sentence where they occur in the text (whole text when the report was not
/// preprocessed or neither section was found).
std::vector<Segment> segments(const corpus::Report& report, InputView view);

/// Gold spans lying inside `segment`, shifted to segment coordinates.
std::vector<corpus::Span> spans_in(const std::vector<corpus::Span>& spans, const Segment& segment);

/// One single-model configuration. `for_model` fixes the architecture:
///
///   crf                 embed -> linear -> CRF
///   lstm                embed -> BiLSTM -> linear -> softmax
///   lstm_crf            embed -> BiLSTM -> linear -> CRF
///   cnn_crf             embed -> CNN(2,3,4 x 128) -> linear -> CRF
///   self_attention      embed -> MHA(256, 16 heads) -> linear -> softmax
///   ucnn                embed -> UCNN -> linear -> softmax
///   regressive_wavenet  embed -> bidirectional dilated conv -> linear -> softmax
///   attention_lstm      embed -> attention-LSTM -> linear -> softmax
struct TaggerConfig {
  std::string name = "lstm_crf";
  Decoder decoder = Decoder::Crf;
  encoders::EncoderSpec encoder;
  int embedding_dim = 64;
  bool crf_constrained = false;
  InputView input = InputView::Joint;
  int min_char_count = 2;
  std::uint64_t seed = 1;

  /// Throws UsageError listing valid names for an unknown name.
  static TaggerConfig for_model(std::string_view name, std::uint64_t seed = 1);
};

const std::vector<std::string>& model_names();

nlohmann::ordered_json to_json(const TaggerConfig& config);
nlohmann::ordered_json to_json(const encoders::EncoderSpec& spec);
/// Strict parse: unknown keys throw UsageError.
TaggerConfig tagger_config_from_json(const nlohmann::ordered_json& j);
encoders::EncoderSpec encoder_spec_from_json(const nlohmann::ordered_json& j);

/// Embedding + encoder + linear projection + softmax/CRF decoder.
class Tagger {
 public:
  Tagger(TaggerConfig config, encoders::Vocab vocab);
  Tagger(Tagger&&) = default;
  Tagger& operator=(Tagger&&) = default;

  const TaggerConfig& config() const { return config_; }
  const encoders::Vocab& vocab() const { return embedding_.vocab; }
  nn::ParameterSet& parameters() { return *params_; }
  const nn::ParameterSet& parameters() const { return *params_; }
  encoders::Encoder& encoder() { return *encoder_; }
  const encoders::EmbeddingTable& embedding() const { return embedding_; }

  /// [T, 7] label scores.
  nn::Var emissions(nn::Tape& tape, std::span<const int> char_ids) const;
  Matrix emissions(std::span<const int> char_ids) const;

  /// CRF negative log-likelihood, or mean per-position cross-entropy.
  nn::Var loss(nn::Tape& tape, std::span<const int> char_ids, const corpus::TagSequence& gold) const;

  /// Viterbi (CRF) or per-position argmax with lowest-index ties.
  corpus::TagSequence decode(const Matrix& emissions) const;
  corpus::TagSequence predict_tags(std::span<const int> char_ids) const;
  /// Tags every segment of the report and maps spans back to report
  /// offsets.
  std::vector<corpus::Span> predict_spans(const corpus::Report& report) const;

  /// Effective transition scores (constraints applied). Requires a CRF
  /// decoder.
  crf::CrfParams crf_params() const;

 private:
  TaggerConfig config_;
  std::unique_ptr<nn::ParameterSet> params_;
  encoders::EmbeddingTable embedding_;
  std::unique_ptr<encoders::Encoder> encoder_;
  encoders::Linear projection_;
  nn::Parameter* transitions_ = nullptr;
  nn::Parameter* start_ = nullptr;
  nn::Parameter* stop_ = nullptr;
};

/// Builds a tagger with deterministic initialization from config.seed.
Tagger build_tagger(const TaggerConfig& config, const encoders::Vocab& vocab);

/// Vocabulary over report texts with the config's frequency cut-off.
encoders::Vocab build_vocab(const std::vector<corpus::Report>& reports, int min_count);

/// Tape op for the CRF negative log-likelihood of `gold` given emissions and
/// the three CRF parameter tensors ([L,L], [1,L], [1,L]).
nn::Var crf_nll(nn::Tape& tape, nn::Var emissions, nn::Var transitions, nn::Var start, nn::Var stop,
                std::span<const int> gold, bool constrained);

/// Fraction of characters whose predicted label equals the gold label, over
/// the segments the tagger reads.
double token_accuracy(const Tagger& tagger, const std::vector<corpus::Report>& reports);

}  // namespace cmie::taggers
