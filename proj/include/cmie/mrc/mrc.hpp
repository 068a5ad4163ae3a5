#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cmie/corpus/types.hpp"
#include "cmie/encoders/encoder.hpp"
#include "cmie/encoders/vocab.hpp"
#include "cmie/eval/eval.hpp"
#include "cmie/nn/parameter.hpp"
#include "cmie/nn/tape.hpp"
#include "cmie/taggers/train.hpp"

namespace cmie::mrc {

/// Fixed question asked for each attribute.
std::u32string question_text(corpus::AttributeType type);

struct MrcConfig {
  /// Reject when p_start(s) + p_end(e) of the best pair is below tau.
  double tau = 1.0;
  /// Answers cover at most this many characters.
  int max_answer_length = 20;
  /// Replace tau by the dev-set F1 optimum of the 21-point grid after
  /// training.
  bool select_tau = true;
  encoders::EncoderSpec encoder;
  int embedding_dim = 64;
  int min_char_count = 2;
  std::uint64_t seed = 1;

  /// Throws UsageError unless 0 <= tau <= 2 and max_answer_length >= 1.
  void validate() const;
};

nlohmann::ordered_json to_json(const MrcConfig& config);
/// Strict parse over the defaults; unknown keys throw UsageError.
MrcConfig mrc_config_from_json(const nlohmann::ordered_json& j);

struct AnswerDecision {
  bool accepted = false;
  int start = 0;  // half-open [start, end) in passage positions
  int end = 0;
  /// Best pair score, reported for rejections as well.
  double score = 0.0;
};

/// Highest p_start(s) + p_end(e) over s <= e < s + max_len; ties go to the
/// smallest s, then the smallest e. Rejects when that score is below tau.
AnswerDecision extract_answer(std::span<const double> p_start, std::span<const double> p_end, double tau,
                              int max_answer_length);

/// 0, 0.1, ..., 2.0.
std::vector<double> tau_grid();

struct BoundaryProbs {
  std::vector<double> start;
  std::vector<double> end;
};

/// Boundary model: question + separator + passage through one encoder, two
/// linear heads over passage positions, softmax over the passage.
class MrcModel {
 public:
  MrcModel(MrcConfig config, encoders::Vocab vocab);
  MrcModel(MrcModel&&) = default;
  MrcModel& operator=(MrcModel&&) = default;

  const MrcConfig& config() const { return config_; }
  MrcConfig& config() { return config_; }
  const encoders::Vocab& vocab() const { return embedding_.vocab; }
  nn::ParameterSet& parameters() { return *params_; }
  const nn::ParameterSet& parameters() const { return *params_; }

  /// [1, T] start and end logits over passage positions. Throws DataError
  /// for an empty passage.
  std::pair<nn::Var, nn::Var> logits(nn::Tape& tape, corpus::AttributeType type, std::span<const int> passage) const;
  BoundaryProbs forward(corpus::AttributeType type, std::u32string_view passage) const;
  /// Cross-entropy of the gold start plus that of the gold end (inclusive).
  nn::Var loss(nn::Tape& tape, corpus::AttributeType type, std::span<const int> passage, int start, int end) const;

 private:
  MrcConfig config_;
  std::unique_ptr<nn::ParameterSet> params_;
  encoders::EmbeddingTable embedding_;
  std::unique_ptr<encoders::Encoder> encoder_;
  encoders::Linear start_head_;
  encoders::Linear end_head_;
};

/// Report vocabulary plus every question character.
encoders::Vocab build_mrc_vocab(const std::vector<corpus::Report>& reports, int min_count);

struct MrcExample {
  std::size_t report = 0;
  corpus::AttributeType type = corpus::AttributeType::PrimarySite;
  int start = 0;
  int end = 0;  // inclusive
};

/// One example per (report, attribute) with a gold span, targeting the
/// first such span. Attributes without gold spans are skipped.
std::vector<MrcExample> make_examples(const std::vector<corpus::Report>& reports);

/// Best-pair decisions for the three questions, before thresholding.
std::array<AnswerDecision, 3> answer_report(const MrcModel& model, const corpus::Report& report);
/// Accepted answers as spans sorted by start. When two answers overlap only
/// the higher-scoring one is kept.
std::vector<corpus::Span> spans_at(const std::array<AnswerDecision, 3>& answers, double tau,
                                   std::u32string_view text);
std::vector<corpus::Span> mrc_predict_report(const MrcModel& model, const corpus::Report& report);
std::vector<corpus::Report> mrc_predict(const MrcModel& model, const std::vector<corpus::Report>& reports);

struct TauRow {
  double tau = 0.0;
  eval::EvalReport report;
  long answered = 0;  // questions whose best pair reaches tau
};

std::vector<TauRow> sweep_tau(const MrcModel& model, const std::vector<corpus::Report>& dev,
                              const std::vector<double>& taus);
/// Highest overall F1; ties go to the smaller tau.
double best_tau(const std::vector<TauRow>& rows);

/// Same loop as tagger training: early stopping on dev F1 at the current
/// tau, best parameters restored, then tau selection when enabled.
taggers::TrainHistory train_mrc(MrcModel& model, const std::vector<corpus::Report>& train_set,
                                const std::vector<corpus::Report>& dev_set, const taggers::TrainConfig& config,
                                const taggers::EpochCallback& on_epoch = {});

void save_mrc(const MrcModel& model, const std::filesystem::path& dir,
              const nlohmann::ordered_json& extra = nlohmann::ordered_json::object());
MrcModel load_mrc(const std::filesystem::path& dir);

}  // namespace cmie::mrc
