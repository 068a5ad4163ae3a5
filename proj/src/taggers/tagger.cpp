#include "cmie/taggers/tagger.hpp"

#include <algorithm>
#include <limits>

#include "cmie/core/error.hpp"
#include "cmie/core/rng.hpp"

namespace cmie::taggers {

using encoders::EncoderSpec;
using Json = nlohmann::ordered_json;

const std::vector<std::string>& model_names() {
  static const std::vector<std::string> names = {"crf",  "lstm", "lstm_crf", "cnn_crf", "self_attention",
                                                 "ucnn", "regressive_wavenet", "attention_lstm"};
  return names;
}

TaggerConfig TaggerConfig::for_model(std::string_view name, std::uint64_t seed) {
  TaggerConfig c;
  c.name = std::string(name);
  c.seed = seed;
  if (name == "crf") {
    c.encoder.kind = "none";
    c.decoder = Decoder::Crf;
  } else if (name == "lstm") {
    c.encoder.kind = "bilstm";
    c.decoder = Decoder::Softmax;
  } else if (name == "lstm_crf") {
    c.encoder.kind = "bilstm";
    c.decoder = Decoder::Crf;
  } else if (name == "cnn_crf") {
    c.encoder.kind = "cnn";
    c.decoder = Decoder::Crf;
  } else if (name == "self_attention") {
    c.encoder.kind = "mha";
    c.embedding_dim = c.encoder.mha_model_dim;
    c.decoder = Decoder::Softmax;
  } else if (name == "ucnn") {
    c.encoder.kind = "ucnn";
    c.decoder = Decoder::Softmax;
  } else if (name == "regressive_wavenet") {
    c.encoder.kind = "wavenet";
    c.decoder = Decoder::Softmax;
  } else if (name == "attention_lstm") {
    c.encoder.kind = "attention_lstm";
    c.decoder = Decoder::Softmax;
  } else {
    std::string valid;
    for (const auto& n : model_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw UsageError("unknown model '" + std::string(name) + "' (valid: " + valid + ")");
  }
  return c;
}

std::vector<Segment> segments(const corpus::Report& report, InputView view) {
  const int n = static_cast<int>(report.text.size());
  if (view == InputView::Joint || !report.preprocessed) return {{0, n}};
  std::vector<Segment> out;
  for (const std::u32string* part : {&report.findings_first, &report.impression}) {
    if (part->empty()) continue;
    const auto pos = report.text.find(*part);
    if (pos == std::u32string::npos) continue;
    const Segment seg{static_cast<int>(pos), static_cast<int>(part->size())};
    const bool dup = std::any_of(out.begin(), out.end(), [&](const Segment& o) {
      return seg.offset < o.offset + o.length && o.offset < seg.offset + seg.length;
    });
    if (!dup) out.push_back(seg);
  }
  if (out.empty()) return {{0, n}};
  std::sort(out.begin(), out.end(), [](const Segment& a, const Segment& b) { return a.offset < b.offset; });
  return out;
}

std::vector<corpus::Span> spans_in(const std::vector<corpus::Span>& spans, const Segment& segment) {
  std::vector<corpus::Span> out;
  for (const auto& s : spans) {
    if (s.start >= segment.offset && s.end <= segment.offset + segment.length) {
      out.push_back({s.start - segment.offset, s.end - segment.offset, s.type, {}});
    }
  }
  return out;
}

Json to_json(const EncoderSpec& s) {
  Json j;
  j["kind"] = s.kind;
  j["lstm_hidden"] = s.lstm_hidden;
  j["cnn_widths"] = s.cnn_widths;
  j["cnn_filters"] = s.cnn_filters;
  j["mha_model_dim"] = s.mha_model_dim;
  j["mha_heads"] = s.mha_heads;
  j["mha_position_encoding"] = s.mha_position_encoding;
  j["mha_residual"] = s.mha_residual;
  j["wavenet_layers"] = s.wavenet_layers;
  j["wavenet_channels"] = s.wavenet_channels;
  j["ucnn_depth"] = s.ucnn_depth;
  j["ucnn_base_channels"] = s.ucnn_base_channels;
  j["ucnn_kernel"] = s.ucnn_kernel;
  j["alstm_hidden"] = s.alstm_hidden;
  j["alstm_codebook_size"] = s.alstm_codebook_size;
  j["alstm_query_dim"] = s.alstm_query_dim;
  return j;
}

Json to_json(const TaggerConfig& c) {
  Json j;
  j["name"] = c.name;
  j["decoder"] = c.decoder == Decoder::Crf ? "crf" : "softmax";
  j["embedding_dim"] = c.embedding_dim;
  j["crf_constrained"] = c.crf_constrained;
  j["input"] = c.input == InputView::Sections ? "sections" : "joint";
  j["min_char_count"] = c.min_char_count;
  j["seed"] = c.seed;
  j["encoder"] = to_json(c.encoder);
  return j;
}

namespace {

template <class T>
void read(const Json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) {
    try {
      out = it->get<T>();
    } catch (const Json::exception&) {
      throw UsageError(std::string("config key '") + key + "' has the wrong type");
    }
  }
}

void reject_unknown(const Json& j, std::initializer_list<const char*> known, const char* where) {
  if (!j.is_object()) throw UsageError(std::string(where) + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return it.key() == k; })) {
      throw UsageError(std::string("unknown key '") + it.key() + "' in " + where);
    }
  }
}

}  // namespace

EncoderSpec encoder_spec_from_json(const Json& j) {
  reject_unknown(j,
                 {"kind", "lstm_hidden", "cnn_widths", "cnn_filters", "mha_model_dim", "mha_heads",
                  "mha_position_encoding", "mha_residual", "wavenet_layers", "wavenet_channels", "ucnn_depth",
                  "ucnn_base_channels", "ucnn_kernel", "alstm_hidden", "alstm_codebook_size", "alstm_query_dim"},
                 "encoder config");
  EncoderSpec s;
  read(j, "kind", s.kind);
  read(j, "lstm_hidden", s.lstm_hidden);
  read(j, "cnn_widths", s.cnn_widths);
  read(j, "cnn_filters", s.cnn_filters);
  read(j, "mha_model_dim", s.mha_model_dim);
  read(j, "mha_heads", s.mha_heads);
  read(j, "mha_position_encoding", s.mha_position_encoding);
  read(j, "mha_residual", s.mha_residual);
  read(j, "wavenet_layers", s.wavenet_layers);
  read(j, "wavenet_channels", s.wavenet_channels);
  read(j, "ucnn_depth", s.ucnn_depth);
  read(j, "ucnn_base_channels", s.ucnn_base_channels);
  read(j, "ucnn_kernel", s.ucnn_kernel);
  read(j, "alstm_hidden", s.alstm_hidden);
  read(j, "alstm_codebook_size", s.alstm_codebook_size);
  read(j, "alstm_query_dim", s.alstm_query_dim);
  return s;
}

TaggerConfig tagger_config_from_json(const Json& j) {
  reject_unknown(j, {"name", "decoder", "embedding_dim", "crf_constrained", "input", "min_char_count", "seed", "encoder"},
                 "tagger config");
  std::string name;
  read(j, "name", name);
  if (name.empty()) throw UsageError("tagger config needs a 'name'");
  std::uint64_t seed = 1;
  read(j, "seed", seed);
  TaggerConfig c = TaggerConfig::for_model(name, seed);
  if (auto it = j.find("decoder"); it != j.end()) {
    const std::string d = it->is_string() ? it->get<std::string>() : "";
    if (d == "crf") {
      c.decoder = Decoder::Crf;
    } else if (d == "softmax") {
      c.decoder = Decoder::Softmax;
    } else {
      throw UsageError("decoder must be \"crf\" or \"softmax\"");
    }
  }
  read(j, "embedding_dim", c.embedding_dim);
  read(j, "crf_constrained", c.crf_constrained);
  if (auto it = j.find("input"); it != j.end()) {
    const std::string v = it->is_string() ? it->get<std::string>() : "";
    if (v == "joint") {
      c.input = InputView::Joint;
    } else if (v == "sections") {
      c.input = InputView::Sections;
    } else {
      throw UsageError("input must be \"joint\" or \"sections\"");
    }
  }
  read(j, "min_char_count", c.min_char_count);
  if (auto it = j.find("encoder"); it != j.end()) {
    // overlay onto the architecture defaults
    Json merged = to_json(c.encoder);
    reject_unknown(*it,
                   {"kind", "lstm_hidden", "cnn_widths", "cnn_filters", "mha_model_dim", "mha_heads",
                    "mha_position_encoding", "mha_residual", "wavenet_layers", "wavenet_channels", "ucnn_depth",
                    "ucnn_base_channels", "ucnn_kernel", "alstm_hidden", "alstm_codebook_size", "alstm_query_dim"},
                   "encoder config");
    for (auto e = it->begin(); e != it->end(); ++e) merged[e.key()] = e.value();
    c.encoder = encoder_spec_from_json(merged);
  }
  if (c.embedding_dim < 1) throw UsageError("embedding_dim must be positive");
  return c;
}

Tagger::Tagger(TaggerConfig config, encoders::Vocab vocab)
    : config_(std::move(config)), params_(std::make_unique<nn::ParameterSet>()) {
  Rng rng(config_.seed);
  embedding_.vocab = std::move(vocab);
  embedding_.weights = &params_->add_uniform("embedding", embedding_.vocab.size(), config_.embedding_dim, 0.5, rng);
  encoder_ = encoders::make_encoder(config_.encoder, config_.embedding_dim, *params_, "encoder", rng);
  projection_ = encoders::Linear::create(*params_, "projection", encoder_->output_dim(), corpus::kNumLabels, rng);
  if (config_.decoder == Decoder::Crf) {
    transitions_ = &params_->add("crf.transitions", corpus::kNumLabels, corpus::kNumLabels);
    start_ = &params_->add("crf.start", 1, corpus::kNumLabels);
    stop_ = &params_->add("crf.stop", 1, corpus::kNumLabels);
  }
}

nn::Var Tagger::emissions(nn::Tape& tape, std::span<const int> char_ids) const {
  const nn::Var x = encoders::embed(tape, char_ids, embedding_);
  return projection_(tape, encoder_->forward(tape, x));
}

Matrix Tagger::emissions(std::span<const int> char_ids) const {
  nn::Tape tape;
  return tape.value(emissions(tape, char_ids));
}

nn::Var Tagger::loss(nn::Tape& tape, std::span<const int> char_ids, const corpus::TagSequence& gold) const {
  if (gold.size() != char_ids.size()) throw DataError("tag sequence length differs from character count");
  if (char_ids.empty()) throw DataError("cannot compute a loss on an empty sequence");
  const nn::Var e = emissions(tape, char_ids);
  if (config_.decoder == Decoder::Crf) {
    return crf_nll(tape, e, tape.param(*transitions_), tape.param(*start_), tape.param(*stop_), gold,
                   config_.crf_constrained);
  }
  return nn::scale(tape, nn::softmax_cross_entropy(tape, e, gold), 1.0 / static_cast<double>(gold.size()));
}

crf::CrfParams Tagger::crf_params() const {
  if (config_.decoder != Decoder::Crf) throw UsageError("tagger has no CRF decoder");
  crf::CrfParams p = crf::CrfParams::zeros(corpus::kNumLabels);
  p.transitions = transitions_->value;
  for (int j = 0; j < corpus::kNumLabels; ++j) {
    p.start[j] = start_->value(0, j);
    p.stop[j] = stop_->value(0, j);
  }
  if (config_.crf_constrained) crf::apply_bio_constraints(p);
  return p;
}

corpus::TagSequence Tagger::decode(const Matrix& e) const {
  if (config_.decoder == Decoder::Crf) return crf::viterbi(e, crf_params()).tags;
  corpus::TagSequence tags(e.rows());
  for (int t = 0; t < e.rows(); ++t) {
    const double* row = e.row(t);
    tags[t] = static_cast<int>(std::max_element(row, row + e.cols()) - row);
  }
  return tags;
}

corpus::TagSequence Tagger::predict_tags(std::span<const int> char_ids) const {
  if (char_ids.empty()) return {};
  return decode(emissions(char_ids));
}

std::vector<corpus::Span> Tagger::predict_spans(const corpus::Report& report) const {
  std::vector<corpus::Span> spans;
  for (const Segment& seg : segments(report, config_.input)) {
    const auto ids = vocab().encode(std::u32string_view(report.text).substr(seg.offset, seg.length));
    for (auto s : corpus::decode_tags(predict_tags(ids))) {
      s.start += seg.offset;
      s.end += seg.offset;
      spans.push_back(s);
    }
  }
  corpus::attach_text(spans, report.text);
  return spans;
}

Tagger build_tagger(const TaggerConfig& config, const encoders::Vocab& vocab) {
  TaggerConfig::for_model(config.name);  // validates the name
  return Tagger(config, vocab);
}

encoders::Vocab build_vocab(const std::vector<corpus::Report>& reports, int min_count) {
  std::vector<std::u32string> texts;
  texts.reserve(reports.size());
  for (const auto& r : reports) texts.push_back(r.text);
  return encoders::Vocab::build(texts, min_count);
}

nn::Var crf_nll(nn::Tape& tape, nn::Var emissions, nn::Var transitions, nn::Var start, nn::Var stop,
                std::span<const int> gold, bool constrained) {
  const Matrix& e = tape.value(emissions);
  const int L = e.cols();
  crf::CrfParams p = crf::CrfParams::zeros(L);
  p.transitions = tape.value(transitions);
  for (int j = 0; j < L; ++j) {
    p.start[j] = tape.value(start)(0, j);
    p.stop[j] = tape.value(stop)(0, j);
  }
  if (constrained) crf::apply_bio_constraints(p);
  auto g = std::make_shared<crf::NllGradient>(crf::nll_and_gradient(e, p, gold));
  const double loss = g->loss;
  return tape.record(Matrix(1, 1, loss), {emissions, transitions, start, stop},
                     [=](nn::Tape& t, int self) {
                       const double s = t.grad(self)(0, 0);
                       if (t.requires_grad(emissions)) {
                         Matrix& ge = t.grad(emissions.id);
                         for (std::size_t i = 0; i < ge.size(); ++i) ge.data()[i] += s * g->d_emissions.data()[i];
                       }
                       if (t.requires_grad(transitions)) {
                         Matrix& ga = t.grad(transitions.id);
                         for (std::size_t i = 0; i < ga.size(); ++i) ga.data()[i] += s * g->d_transitions.data()[i];
                       }
                       if (t.requires_grad(start)) {
                         Matrix& gs = t.grad(start.id);
                         for (int j = 0; j < L; ++j) gs(0, j) += s * g->d_start[j];
                       }
                       if (t.requires_grad(stop)) {
                         Matrix& gs = t.grad(stop.id);
                         for (int j = 0; j < L; ++j) gs(0, j) += s * g->d_stop[j];
                       }
                     });
}

double token_accuracy(const Tagger& tagger, const std::vector<corpus::Report>& reports) {
  long correct = 0;
  long total = 0;
  for (const auto& r : reports) {
    for (const Segment& seg : segments(r, tagger.config().input)) {
      const auto gold = corpus::encode_tags(spans_in(r.gold_spans, seg), seg.length);
      const auto pred =
          tagger.predict_tags(tagger.vocab().encode(std::u32string_view(r.text).substr(seg.offset, seg.length)));
      for (std::size_t i = 0; i < gold.size(); ++i) correct += gold[i] == pred[i] ? 1 : 0;
      total += static_cast<long>(gold.size());
    }
  }
  return total == 0 ? 1.0 : static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace cmie::taggers
