#include "cmie/mrc/mrc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "cmie/core/error.hpp"
#include "cmie/core/rng.hpp"
#include "cmie/io/container.hpp"
#include "cmie/nn/optim.hpp"
#include "cmie/taggers/tagger.hpp"

namespace cmie::mrc {

using corpus::AttributeType;
using Json = nlohmann::ordered_json;

std::u32string question_text(AttributeType type) {
  switch (type) {
    case AttributeType::PrimarySite:
      return U"原发部位？";
    case AttributeType::LesionSize:
      return U"原发部位的病灶大小是？";
    case AttributeType::MetastasisSite:
      return U"原发部位的转移部位是？";
  }
  throw UsageError("unknown attribute type");
}

void MrcConfig::validate() const {
  if (!(tau >= 0.0 && tau <= 2.0)) throw UsageError("tau must be in [0, 2]");
  if (max_answer_length < 1) throw UsageError("max_answer_length must be at least 1");
  if (embedding_dim < 1) throw UsageError("embedding_dim must be positive");
}

Json to_json(const MrcConfig& c) {
  Json j;
  j["tau"] = c.tau;
  j["max_answer_length"] = c.max_answer_length;
  j["select_tau"] = c.select_tau;
  j["embedding_dim"] = c.embedding_dim;
  j["min_char_count"] = c.min_char_count;
  j["seed"] = c.seed;
  j["encoder"] = taggers::to_json(c.encoder);
  return j;
}

MrcConfig mrc_config_from_json(const Json& j) {
  if (!j.is_object()) throw UsageError("mrc config must be a JSON object");
  MrcConfig c;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    try {
      if (k == "tau") {
        c.tau = it->get<double>();
      } else if (k == "max_answer_length") {
        c.max_answer_length = it->get<int>();
      } else if (k == "select_tau") {
        c.select_tau = it->get<bool>();
      } else if (k == "embedding_dim") {
        c.embedding_dim = it->get<int>();
      } else if (k == "min_char_count") {
        c.min_char_count = it->get<int>();
      } else if (k == "seed") {
        c.seed = it->get<std::uint64_t>();
      } else if (k == "encoder") {
        Json merged = taggers::to_json(c.encoder);
        if (!it->is_object()) throw UsageError("encoder config must be a JSON object");
        for (auto e = it->begin(); e != it->end(); ++e) merged[e.key()] = e.value();
        c.encoder = taggers::encoder_spec_from_json(merged);
      } else {
        throw UsageError("unknown key '" + k + "' in mrc config");
      }
    } catch (const Json::exception&) {
      throw UsageError("mrc config key '" + k + "' has the wrong type");
    }
  }
  c.validate();
  return c;
}

AnswerDecision extract_answer(std::span<const double> p_start, std::span<const double> p_end, double tau,
                              int max_answer_length) {
  if (p_start.size() != p_end.size()) throw UsageError("boundary vectors differ in length");
  if (max_answer_length < 1) throw UsageError("max_answer_length must be at least 1");
  AnswerDecision best;
  bool found = false;
  const int T = static_cast<int>(p_start.size());
  for (int s = 0; s < T; ++s) {
    const int last = std::min(T, s + max_answer_length);
    for (int e = s; e < last; ++e) {
      const double score = p_start[s] + p_end[e];
      if (!found || score > best.score) {
        best = {false, s, e + 1, score};
        found = true;
      }
    }
  }
  best.accepted = found && best.score >= tau;
  return best;
}

std::vector<double> tau_grid() {
  std::vector<double> taus;
  for (int i = 0; i <= 20; ++i) taus.push_back(i / 10.0);
  return taus;
}

MrcModel::MrcModel(MrcConfig config, encoders::Vocab vocab)
    : config_(std::move(config)), params_(std::make_unique<nn::ParameterSet>()) {
  config_.validate();
  Rng rng(config_.seed);
  embedding_.vocab = std::move(vocab);
  embedding_.weights = &params_->add_uniform("embedding", embedding_.vocab.size(), config_.embedding_dim, 0.5, rng);
  encoder_ = encoders::make_encoder(config_.encoder, config_.embedding_dim, *params_, "encoder", rng);
  start_head_ = encoders::Linear::create(*params_, "start_head", encoder_->output_dim(), 1, rng);
  end_head_ = encoders::Linear::create(*params_, "end_head", encoder_->output_dim(), 1, rng);
}

std::pair<nn::Var, nn::Var> MrcModel::logits(nn::Tape& tape, AttributeType type, std::span<const int> passage) const {
  if (passage.empty()) throw DataError("empty passage");
  std::vector<int> ids = vocab().encode(question_text(type));
  const int offset = static_cast<int>(ids.size()) + 1;
  ids.push_back(encoders::Vocab::kSep);
  ids.insert(ids.end(), passage.begin(), passage.end());
  const nn::Var h = encoder_->forward(tape, encoders::embed(tape, ids, embedding_));
  const nn::Var body = nn::slice_rows(tape, h, offset, static_cast<int>(passage.size()));
  return {nn::transpose(tape, start_head_(tape, body)), nn::transpose(tape, end_head_(tape, body))};
}

BoundaryProbs MrcModel::forward(AttributeType type, std::u32string_view passage) const {
  nn::Tape tape;
  const auto ids = vocab().encode(passage);
  const auto [s, e] = logits(tape, type, ids);
  const Matrix& ps = tape.value(nn::softmax_rows(tape, s));
  const Matrix& pe = tape.value(nn::softmax_rows(tape, e));
  return {{ps.values().begin(), ps.values().end()}, {pe.values().begin(), pe.values().end()}};
}

nn::Var MrcModel::loss(nn::Tape& tape, AttributeType type, std::span<const int> passage, int start, int end) const {
  const int T = static_cast<int>(passage.size());
  if (start < 0 || end < start || end >= T) throw DataError("answer boundaries outside the passage");
  const auto [s, e] = logits(tape, type, passage);
  const int gs[1] = {start};
  const int ge[1] = {end};
  return nn::add(tape, nn::softmax_cross_entropy(tape, s, gs), nn::softmax_cross_entropy(tape, e, ge));
}

encoders::Vocab build_mrc_vocab(const std::vector<corpus::Report>& reports, int min_count) {
  std::vector<std::u32string> texts;
  for (const auto& r : reports) texts.push_back(r.text);
  for (AttributeType t : corpus::kAttributeTypes) {
    for (int i = 0; i < std::max(1, min_count); ++i) texts.push_back(question_text(t));
  }
  return encoders::Vocab::build(texts, min_count);
}

std::vector<MrcExample> make_examples(const std::vector<corpus::Report>& reports) {
  std::vector<MrcExample> out;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    for (AttributeType t : corpus::kAttributeTypes) {
      const corpus::Span* first = nullptr;
      for (const auto& s : reports[i].gold_spans) {
        if (s.type == t && (first == nullptr || s.start < first->start)) first = &s;
      }
      if (first != nullptr) out.push_back({i, t, first->start, first->end - 1});
    }
  }
  return out;
}

std::array<AnswerDecision, 3> answer_report(const MrcModel& model, const corpus::Report& report) {
  std::array<AnswerDecision, 3> out{};
  if (report.text.empty()) return out;
  for (AttributeType t : corpus::kAttributeTypes) {
    const BoundaryProbs p = model.forward(t, report.text);
    out[static_cast<int>(t)] = extract_answer(p.start, p.end, 0.0, model.config().max_answer_length);
  }
  return out;
}

std::vector<corpus::Span> spans_at(const std::array<AnswerDecision, 3>& answers, double tau, std::u32string_view text) {
  // Answers to different questions may overlap; the higher score wins, ties
  // go to the earlier attribute.
  std::array<int, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return answers[a].score > answers[b].score; });
  std::vector<corpus::Span> spans;
  for (int i : order) {
    const AnswerDecision& a = answers[i];
    if (!(a.end > a.start && a.score >= tau)) continue;
    const corpus::Span s{a.start, a.end, corpus::kAttributeTypes[i], {}};
    if (std::none_of(spans.begin(), spans.end(), [&](const corpus::Span& k) { return k.overlaps(s); })) {
      spans.push_back(s);
    }
  }
  std::sort(spans.begin(), spans.end());
  corpus::attach_text(spans, text);
  return spans;
}

std::vector<corpus::Span> mrc_predict_report(const MrcModel& model, const corpus::Report& report) {
  return spans_at(answer_report(model, report), model.config().tau, report.text);
}

std::vector<corpus::Report> mrc_predict(const MrcModel& model, const std::vector<corpus::Report>& reports) {
  std::vector<corpus::Report> out;
  for (const auto& r : reports) {
    corpus::Report p = r;
    p.gold_spans = mrc_predict_report(model, r);
    out.push_back(std::move(p));
  }
  return out;
}

namespace {

std::vector<TauRow> sweep_answers(const std::vector<std::array<AnswerDecision, 3>>& answers,
                                  const std::vector<corpus::Report>& dev, const std::vector<double>& taus) {
  std::vector<TauRow> rows;
  for (double tau : taus) {
    std::vector<corpus::Report> preds;
    long answered = 0;
    for (std::size_t i = 0; i < dev.size(); ++i) {
      corpus::Report p = dev[i];
      p.gold_spans = spans_at(answers[i], tau, p.text);
      for (const auto& a : answers[i]) answered += a.end > a.start && a.score >= tau;
      preds.push_back(std::move(p));
    }
    rows.push_back({tau, eval::evaluate(dev, preds), answered});
  }
  return rows;
}

}  // namespace

std::vector<TauRow> sweep_tau(const MrcModel& model, const std::vector<corpus::Report>& dev,
                              const std::vector<double>& taus) {
  std::vector<std::array<AnswerDecision, 3>> answers;
  for (const auto& r : dev) answers.push_back(answer_report(model, r));
  return sweep_answers(answers, dev, taus);
}

double best_tau(const std::vector<TauRow>& rows) {
  if (rows.empty()) throw UsageError("empty tau sweep");
  const TauRow* best = &rows[0];
  for (const auto& r : rows) {
    if (r.report.overall.f1 > best->report.overall.f1) best = &r;
  }
  return best->tau;
}

taggers::TrainHistory train_mrc(MrcModel& model, const std::vector<corpus::Report>& train_set,
                                const std::vector<corpus::Report>& dev_set, const taggers::TrainConfig& config,
                                const taggers::EpochCallback& on_epoch) {
  config.validate();
  using Clock = std::chrono::steady_clock;
  const std::vector<MrcExample> examples = make_examples(train_set);
  if (examples.empty()) throw DataError("no training questions: every report lacks gold spans");
  std::vector<std::vector<int>> passages;
  for (const auto& r : train_set) passages.push_back(model.vocab().encode(r.text));

  Rng rng(config.seed);
  nn::ParameterSet& params = model.parameters();
  params.zero_grad();
  nn::Adam adam(params, {.learning_rate = config.learning_rate, .clip_norm = config.clip_norm});
  const std::vector<double> grid = model.config().select_tau ? tau_grid() : std::vector<double>{model.config().tau};

  taggers::TrainHistory history;
  std::vector<Matrix> best;
  double best_f1 = -1.0;
  double chosen_tau = model.config().tau;
  int since_best = 0;
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    const auto t0 = Clock::now();
    rng.shuffle(order);
    double total = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t b = 0; b < order.size(); b += config.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), b + config.batch_size);
      const double weight = 1.0 / static_cast<double>(end - b);
      double batch_loss = 0.0;
      for (std::size_t i = b; i < end; ++i) {
        const MrcExample& ex = examples[order[i]];
        nn::Tape tape;
        const nn::Var loss = model.loss(tape, ex.type, passages[ex.report], ex.start, ex.end);
        batch_loss += tape.value(loss)(0, 0);
        tape.backward(loss, weight);
      }
      const double norm = adam.step();
      if (!std::isfinite(batch_loss) || !std::isfinite(norm)) {
        std::ostringstream msg;
        msg << "training diverged at epoch " << epoch << ", batch " << batch_index << ": loss " << batch_loss
            << ", gradient norm " << norm << ", parameter norm " << params.value_norm();
        throw NumericError(msg.str());
      }
      total += batch_loss;
    }

    taggers::EpochRecord record;
    record.epoch = epoch;
    record.train_loss = total / static_cast<double>(examples.size());
    double epoch_tau = model.config().tau;
    if (!dev_set.empty()) {
      const auto rows = sweep_tau(model, dev_set, grid);
      epoch_tau = best_tau(rows);
      for (const auto& r : rows) {
        if (r.tau == epoch_tau) record.dev = r.report.overall;
      }
    }
    record.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    history.epochs.push_back(record);
    if (on_epoch) on_epoch(record);

    if (!dev_set.empty()) {
      if (record.dev.f1 > best_f1) {
        best_f1 = record.dev.f1;
        best = params.snapshot();
        chosen_tau = epoch_tau;
        history.best_epoch = epoch;
        since_best = 0;
      } else if (++since_best >= config.patience) {
        break;
      }
    } else {
      history.best_epoch = epoch;
    }
  }

  if (!best.empty()) params.restore(best);
  params.round_to_float();
  if (model.config().select_tau && !dev_set.empty()) model.config().tau = chosen_tau;
  return history;
}

void save_mrc(const MrcModel& model, const std::filesystem::path& dir, const Json& extra) {
  io::save_container(dir, "mrc", to_json(model.config()), model.vocab(), model.parameters(), extra);
}

MrcModel load_mrc(const std::filesystem::path& dir) {
  const io::Container c = io::read_container(dir);
  if (c.kind != "mrc") throw DataError(dir.string() + " holds a '" + c.kind + "' model, not a reading-comprehension model");
  MrcConfig config;
  try {
    config = mrc_config_from_json(c.config);
  } catch (const UsageError& e) {
    throw IntegrityError(std::string("manifest config: ") + e.what());
  }
  MrcModel model(config, c.vocab);
  io::load_parameters(c, model.parameters());
  return model;
}

}  // namespace cmie::mrc
