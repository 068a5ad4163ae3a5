#include "cmie/taggers/train.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "cmie/core/error.hpp"
#include "cmie/core/rng.hpp"
#include "cmie/encoders/attention_lstm.hpp"
#include "cmie/nn/optim.hpp"

namespace cmie::taggers {

using Json = nlohmann::ordered_json;

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw UsageError("learning_rate must be positive");
  if (batch_size < 1) throw UsageError("batch_size must be positive");
  if (max_epochs < 1) throw UsageError("max_epochs must be positive");
  if (patience < 1) throw UsageError("patience must be positive");
  if (clip_norm < 0.0) throw UsageError("clip_norm must be non-negative");
  if (!(dev_fraction >= 0.0 && dev_fraction < 1.0)) throw UsageError("dev_fraction must be in [0, 1)");
  if (!(target_train_accuracy >= 0.0 && target_train_accuracy <= 1.0)) {
    throw UsageError("target_train_accuracy must be in [0, 1]");
  }
}

Json to_json(const TrainConfig& c) {
  Json j;
  j["learning_rate"] = c.learning_rate;
  j["batch_size"] = c.batch_size;
  j["max_epochs"] = c.max_epochs;
  j["patience"] = c.patience;
  j["clip_norm"] = c.clip_norm;
  j["seed"] = c.seed;
  j["dev_fraction"] = c.dev_fraction;
  j["target_train_accuracy"] = c.target_train_accuracy;
  return j;
}

TrainConfig train_config_from_json(const Json& j) {
  if (!j.is_object()) throw UsageError("train config must be a JSON object");
  TrainConfig c;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    try {
      if (k == "learning_rate") {
        c.learning_rate = it->get<double>();
      } else if (k == "batch_size") {
        c.batch_size = it->get<int>();
      } else if (k == "max_epochs") {
        c.max_epochs = it->get<int>();
      } else if (k == "patience") {
        c.patience = it->get<int>();
      } else if (k == "clip_norm") {
        c.clip_norm = it->get<double>();
      } else if (k == "seed") {
        c.seed = it->get<std::uint64_t>();
      } else if (k == "dev_fraction") {
        c.dev_fraction = it->get<double>();
      } else if (k == "target_train_accuracy") {
        c.target_train_accuracy = it->get<double>();
      } else {
        throw UsageError("unknown key '" + k + "' in train config");
      }
    } catch (const Json::exception&) {
      throw UsageError("train config key '" + k + "' has the wrong type");
    }
  }
  c.validate();
  return c;
}

Json to_json(const TrainHistory& h) {
  Json epochs = Json::array();
  for (const auto& e : h.epochs) {
    Json j;
    j["epoch"] = e.epoch;
    j["train_loss"] = e.train_loss;
    j["dev"] = eval::to_json(e.dev);
    if (e.train_accuracy >= 0.0) j["train_accuracy"] = e.train_accuracy;
    j["seconds"] = e.seconds;
    epochs.push_back(std::move(j));
  }
  Json j;
  j["best_epoch"] = h.best_epoch;
  j["epochs"] = std::move(epochs);
  return j;
}

std::pair<std::vector<corpus::Report>, std::vector<corpus::Report>> split_train_dev(
    const std::vector<corpus::Report>& reports, double dev_fraction, std::uint64_t seed) {
  if (!(dev_fraction >= 0.0 && dev_fraction < 1.0)) throw UsageError("dev_fraction must be in [0, 1)");
  std::vector<std::size_t> order(reports.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  rng.shuffle(order);
  const auto n_dev = static_cast<std::size_t>(std::llround(static_cast<double>(reports.size()) * dev_fraction));
  std::vector<corpus::Report> train_part;
  std::vector<corpus::Report> dev_part;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_dev ? dev_part : train_part).push_back(reports[order[i]]);
  }
  return {std::move(train_part), std::move(dev_part)};
}

std::vector<corpus::Report> predict_reports(const Tagger& tagger, const std::vector<corpus::Report>& reports) {
  std::vector<corpus::Report> out;
  out.reserve(reports.size());
  for (const auto& r : reports) {
    corpus::Report p = r;
    p.gold_spans = tagger.predict_spans(r);
    out.push_back(std::move(p));
  }
  return out;
}

namespace {

struct Example {
  std::vector<int> ids;
  corpus::TagSequence tags;
};

void init_codebooks(Tagger& tagger, const std::vector<Example>& examples, Rng& rng) {
  auto* alstm = dynamic_cast<encoders::AttentionLstm*>(&tagger.encoder());
  if (alstm == nullptr) return;
  std::vector<Matrix> inputs;
  for (std::size_t i = 0; i < examples.size() && i < 64; ++i) {
    nn::Tape tape;
    inputs.push_back(tape.value(encoders::embed(tape, examples[i].ids, tagger.embedding())));
  }
  alstm->init_codebooks_from_queries(inputs, rng);
}

[[noreturn]] void diverged(const Tagger& tagger, int epoch, std::size_t batch, double loss, double grad_norm) {
  std::ostringstream msg;
  msg << "training diverged at epoch " << epoch << ", batch " << batch << ": loss " << loss << ", gradient norm "
      << grad_norm << ", parameter norm " << tagger.parameters().value_norm();
  throw NumericError(msg.str());
}

}  // namespace

TrainHistory train(Tagger& tagger, const std::vector<corpus::Report>& train_set,
                   const std::vector<corpus::Report>& dev_set, const TrainConfig& config,
                   const EpochCallback& on_epoch) {
  config.validate();
  using Clock = std::chrono::steady_clock;

  std::vector<Example> examples;
  for (const auto& r : train_set) {
    for (const Segment& seg : segments(r, tagger.config().input)) {
      if (seg.length == 0) continue;
      examples.push_back({tagger.vocab().encode(std::u32string_view(r.text).substr(seg.offset, seg.length)),
                          corpus::encode_tags(spans_in(r.gold_spans, seg), seg.length)});
    }
  }
  if (examples.empty()) throw DataError("training set has no non-empty reports");

  Rng rng(config.seed);
  init_codebooks(tagger, examples, rng);

  nn::ParameterSet& params = tagger.parameters();
  params.zero_grad();
  nn::Adam adam(params, {.learning_rate = config.learning_rate, .clip_norm = config.clip_norm});

  TrainHistory history;
  std::vector<Matrix> best;
  double best_f1 = -1.0;
  int since_best = 0;
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    const auto t0 = Clock::now();
    rng.shuffle(order);
    double total_loss = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t b = 0; b < order.size(); b += config.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), b + config.batch_size);
      const double weight = 1.0 / static_cast<double>(end - b);
      double batch_loss = 0.0;
      for (std::size_t i = b; i < end; ++i) {
        const Example& ex = examples[order[i]];
        nn::Tape tape;
        const nn::Var loss = tagger.loss(tape, ex.ids, ex.tags);
        batch_loss += tape.value(loss)(0, 0);
        tape.backward(loss, weight);
      }
      if (!std::isfinite(batch_loss)) diverged(tagger, epoch, batch_index, batch_loss, params.grad_norm());
      const double norm = adam.step();
      if (!std::isfinite(norm)) diverged(tagger, epoch, batch_index, batch_loss, norm);
      total_loss += batch_loss;
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = total_loss / static_cast<double>(examples.size());
    if (!dev_set.empty()) record.dev = eval::evaluate(dev_set, predict_reports(tagger, dev_set)).overall;
    if (config.target_train_accuracy > 0.0) record.train_accuracy = token_accuracy(tagger, train_set);
    record.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    history.epochs.push_back(record);
    if (on_epoch) on_epoch(record);

    if (!dev_set.empty()) {
      if (record.dev.f1 > best_f1) {
        best_f1 = record.dev.f1;
        best = params.snapshot();
        history.best_epoch = epoch;
        since_best = 0;
      } else if (++since_best >= config.patience) {
        break;
      }
    } else {
      history.best_epoch = epoch;
    }
    if (config.target_train_accuracy > 0.0 && record.train_accuracy >= config.target_train_accuracy) break;
  }

  if (!best.empty()) params.restore(best);
  params.round_to_float();
  return history;
}

}  // namespace cmie::taggers
