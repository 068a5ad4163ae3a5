#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cmie/corpus/types.hpp"
#include "cmie/eval/eval.hpp"
#include "cmie/taggers/tagger.hpp"

namespace cmie::taggers {

struct TrainConfig {
  double learning_rate = 5e-3;
  int batch_size = 8;
  int max_epochs = 30;
  /// Epochs without a dev F1 improvement before stopping.
  int patience = 5;
  double clip_norm = 5.0;
  std::uint64_t seed = 1;
  /// Share of the input held out for early stopping when no dev set is given.
  double dev_fraction = 0.1;
  /// Stop as soon as token accuracy on the training set reaches this value
  /// (0 disables the check).
  double target_train_accuracy = 0.0;

  /// Throws UsageError for non-positive sizes or rates.
  void validate() const;
};

nlohmann::ordered_json to_json(const TrainConfig& config);
/// Strict parse over the defaults; unknown keys throw UsageError.
TrainConfig train_config_from_json(const nlohmann::ordered_json& j);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  eval::PRF dev;
  double train_accuracy = -1.0;  // only tracked with target_train_accuracy
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = -1;
};

nlohmann::ordered_json to_json(const TrainHistory& history);

/// Deterministic shuffle-and-split; the dev part has round(n * fraction)
/// reports.
std::pair<std::vector<corpus::Report>, std::vector<corpus::Report>> split_train_dev(
    const std::vector<corpus::Report>& reports, double dev_fraction, std::uint64_t seed);

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Adam with global-norm clipping over shuffled mini-batches. With a dev
/// set, keeps the parameters of the first epoch with the highest dev span
/// F1 and stops after `patience` epochs without improvement; without one,
/// keeps the final parameters. Values end rounded to float. Throws
/// NumericError when the loss or gradient stops being finite.
TrainHistory train(Tagger& tagger, const std::vector<corpus::Report>& train_set,
                   const std::vector<corpus::Report>& dev_set, const TrainConfig& config,
                   const EpochCallback& on_epoch = {});

/// Span predictions for every report, gold spans replaced.
std::vector<corpus::Report> predict_reports(const Tagger& tagger, const std::vector<corpus::Report>& reports);

}  // namespace cmie::taggers
