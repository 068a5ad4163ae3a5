#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "cmie/core/error.hpp"
#include "cmie/corpus/preprocess.hpp"
#include "cmie/corpus/synthetic.hpp"
#include "cmie/io/container.hpp"
#include "cmie/taggers/serialize.hpp"
#include "cmie/taggers/train.hpp"
#include "oracles.hpp"

using namespace cmie;
using namespace cmie::taggers;
namespace fs = std::filesystem;

namespace {

TaggerConfig tiny(const std::string& name, std::uint64_t seed = 1) {
  TaggerConfig c = TaggerConfig::for_model(name, seed);
  c.embedding_dim = 6;
  c.encoder.lstm_hidden = 4;
  c.encoder.cnn_filters = {3, 3, 3};
  c.encoder.mha_model_dim = 8;
  c.encoder.mha_heads = 2;
  c.encoder.wavenet_layers = 2;
  c.encoder.wavenet_channels = 4;
  c.encoder.ucnn_base_channels = 4;
  c.encoder.alstm_hidden = 4;
  c.encoder.alstm_codebook_size = 4;
  c.encoder.alstm_query_dim = 3;
  return c;
}

std::vector<corpus::Report> small_corpus(int n, std::uint64_t seed = 3) {
  std::vector<corpus::Report> out;
  for (auto& r : corpus::generate_corpus(corpus::SyntheticSpec::with_defaults(seed, n * 2))) {
    corpus::preprocess(r, corpus::default_keywords());
    if (r.kept && static_cast<int>(out.size()) < n) out.push_back(r);
  }
  return out;
}

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cmie_taggers_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(TaggerConfig, ArchitectureTable) {
  const auto& names = model_names();
  ASSERT_EQ(names.size(), 8u);
  EXPECT_EQ(TaggerConfig::for_model("crf").encoder.kind, "none");
  EXPECT_EQ(TaggerConfig::for_model("crf").decoder, Decoder::Crf);
  EXPECT_EQ(TaggerConfig::for_model("lstm").decoder, Decoder::Softmax);
  EXPECT_EQ(TaggerConfig::for_model("lstm_crf").encoder.kind, "bilstm");
  EXPECT_EQ(TaggerConfig::for_model("cnn_crf").encoder.kind, "cnn");
  EXPECT_EQ(TaggerConfig::for_model("cnn_crf").decoder, Decoder::Crf);
  EXPECT_EQ(TaggerConfig::for_model("self_attention").encoder.kind, "mha");
  EXPECT_EQ(TaggerConfig::for_model("ucnn").encoder.kind, "ucnn");
  EXPECT_EQ(TaggerConfig::for_model("regressive_wavenet").encoder.kind, "wavenet");
  EXPECT_EQ(TaggerConfig::for_model("attention_lstm").encoder.kind, "attention_lstm");
  for (const char* n : {"self_attention", "ucnn", "regressive_wavenet", "attention_lstm"}) {
    EXPECT_EQ(TaggerConfig::for_model(n).decoder, Decoder::Softmax) << n;
  }
  try {
    TaggerConfig::for_model("bert");
    FAIL();
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("lstm_crf"), std::string::npos);
  }
}

TEST(TaggerConfig, JsonRoundTripAndStrictness) {
  TaggerConfig c = tiny("cnn_crf", 5);
  c.crf_constrained = true;
  c.input = InputView::Sections;
  const TaggerConfig back = tagger_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back).dump(), to_json(c).dump());
  auto j = to_json(c);
  j["dropout"] = 0.5;
  EXPECT_THROW(tagger_config_from_json(j), UsageError);
  auto k = to_json(c);
  k["encoder"]["depth"] = 3;
  EXPECT_THROW(tagger_config_from_json(k), UsageError);
  nlohmann::ordered_json partial = {{"name", "self_attention"}, {"decoder", "crf"}};
  const auto p = tagger_config_from_json(partial);
  EXPECT_EQ(p.decoder, Decoder::Crf);
  EXPECT_EQ(p.embedding_dim, 256);
}

TEST(Tagger, BuildIsDeterministic) {
  const auto vocab = encoders::Vocab({U'a', U'b'});
  for (const auto& name : model_names()) {
    const Tagger a = build_tagger(tiny(name), vocab);
    const Tagger b = build_tagger(tiny(name), vocab);
    ASSERT_EQ(a.parameters().count(), b.parameters().count());
    for (std::size_t i = 0; i < a.parameters().count(); ++i) {
      EXPECT_EQ(a.parameters()[i].value, b.parameters()[i].value) << name;
    }
  }
}

TEST(Tagger, ParameterCountsFollowClosedForms) {
  const auto vocab = encoders::Vocab({U'a', U'b', U'c', U'd', U'e'});
  const long V = vocab.size();  // 8 with the reserved ids
  const long d = 6, H = 4, L = 7;
  const long crf_extra = L * L + 2 * L;
  const auto count = [&](const std::string& n) { return static_cast<long>(build_tagger(tiny(n), vocab).parameters().scalar_count()); };
  EXPECT_EQ(count("crf"), V * d + d * L + L + crf_extra);
  const long lstm = 2 * (d * 4 * H + H * 4 * H + 4 * H);
  EXPECT_EQ(count("lstm"), V * d + lstm + 2 * H * L + L);
  EXPECT_EQ(count("lstm_crf"), V * d + lstm + 2 * H * L + L + crf_extra);
  const long cnn = (2 + 3 + 4) * d * 3 + 3 * 3;
  EXPECT_EQ(count("cnn_crf"), V * d + cnn + 9 * L + L + crf_extra);
  const long m = 8;
  const long mha = (d * m + m) + 4 * m * m;
  EXPECT_EQ(count("self_attention"), V * d + mha + m * L + L);
  const long C = 4;
  const long wave = (2 * d * C + C) * 2 + (2 * C * C + C) + (2 * C * C + C) * 2 + (2 * C * C + C) + 0;
  EXPECT_EQ(count("regressive_wavenet"), V * d + wave + C * L + L);
  // ucnn, depth 2, base 4, kernel 3: down 6->4, 4->8, bottom 8->16, up (16+8)->8, (8+4)->4
  const long ucnn = (3 * d * 4 + 4) + (3 * 4 * 8 + 8) + (3 * 8 * 16 + 16) + (3 * 24 * 8 + 8) + (3 * 12 * 4 + 4);
  EXPECT_EQ(count("ucnn"), V * d + ucnn + 4 * L + L);
  const long p = 3, K = 4;
  const long alstm = 2 * ((d + H) * p + p + K * p + p * H + H + (d + H) * 3 * H + 3 * H);
  EXPECT_EQ(count("attention_lstm"), V * d + alstm + 2 * H * L + L);
}

TEST(Tagger, CrfModelHasNoEncoderParameters) {
  const Tagger t = build_tagger(tiny("crf"), encoders::Vocab({U'x'}));
  for (std::size_t i = 0; i < t.parameters().count(); ++i) {
    EXPECT_EQ(t.parameters()[i].name.rfind("encoder", 0), std::string::npos) << t.parameters()[i].name;
  }
}

TEST(Tagger, SoftmaxLossVanishesForConfidentGold) {
  Tagger t = build_tagger(tiny("lstm"), encoders::Vocab({U'x', U'y'}));
  auto& w = *t.parameters().find("projection.weight");
  auto& b = *t.parameters().find("projection.bias");
  w.value.fill(0.0);
  b.value.fill(0.0);
  b.value(0, corpus::kO) = 50.0;
  nn::Tape tape;
  const int ids[] = {3, 4, 3};
  const double loss = tape.value(t.loss(tape, ids, {corpus::kO, corpus::kO, corpus::kO}))(0, 0);
  EXPECT_LT(loss, 1e-3);
  EXPECT_THROW(t.loss(tape, ids, {0, 0}), DataError);
}

TEST(Tagger, CrfLossDelegatesToCrfModule) {
  Tagger t = build_tagger(tiny("lstm_crf"), encoders::Vocab({U'x', U'y'}));
  Rng rng(3);
  t.parameters().at("crf.transitions").value = oracle::random_matrix(rng, 7, 7);
  const int ids[] = {3, 4, 2, 3};
  const corpus::TagSequence gold = {1, 2, 0, 5};
  nn::Tape tape;
  const double loss = tape.value(t.loss(tape, ids, gold))(0, 0);
  const auto direct = crf::nll_and_gradient(t.emissions(ids), t.crf_params(), gold);
  EXPECT_NEAR(loss, direct.loss, 1e-12);
}

TEST(Tagger, LossGradientSpotChecks) {
  Rng rng(4);
  const auto vocab = encoders::Vocab({U'x', U'y', U'z'});
  const int ids[] = {3, 4, 5, 1, 3, 4};
  const corpus::TagSequence gold = {1, 2, 0, 3, 4, 0};
  for (const auto& name : model_names()) {
    Tagger t = build_tagger(tiny(name), vocab);
    if (t.config().decoder == Decoder::Crf) {
      t.parameters().at("crf.transitions").value = oracle::random_matrix(rng, 7, 7, 0.3);
    }
    auto& ps = t.parameters();
    ps.zero_grad();
    {
      nn::Tape tape;
      tape.backward(t.loss(tape, ids, gold));
    }
    const auto loss = [&] {
      nn::Tape tape;
      return tape.value(t.loss(tape, ids, gold))(0, 0);
    };
    // Five random coordinates over the whole model.
    std::vector<std::pair<std::size_t, std::size_t>> coords;
    for (std::size_t i = 0; i < ps.count(); ++i) {
      for (std::size_t k = 0; k < ps[i].value.size(); ++k) coords.emplace_back(i, k);
    }
    rng.shuffle(coords);
    for (int c = 0; c < 5; ++c) {
      auto [i, k] = coords[c];
      double& v = ps[i].value.data()[k];
      const double saved = v;
      v = saved + 1e-5;
      const double up = loss();
      v = saved - 1e-5;
      const double down = loss();
      v = saved;
      EXPECT_LE(oracle::relative_error(ps[i].grad.data()[k], (up - down) / 2e-5), 1e-4) << name << " " << ps[i].name;
    }
  }
}

TEST(Tagger, PredictionComposesDecodeAndBio) {
  Tagger t = build_tagger(tiny("lstm_crf"), encoders::Vocab({U'左', U'肺', U'癌'}));
  corpus::Report r{.id = "r", .text = U"左肺癌"};
  auto& b = *t.parameters().find("projection.bias");
  auto& w = *t.parameters().find("projection.weight");
  w.value.fill(0.0);
  b.value.fill(0.0);
  b.value(0, corpus::kO) = 20.0;
  EXPECT_TRUE(t.predict_spans(r).empty());

  Rng rng(5);
  w.value = oracle::random_matrix(rng, w.value.rows(), w.value.cols());
  b.value.fill(0.0);
  const auto ids = t.vocab().encode(r.text);
  const Matrix e = t.emissions(ids);
  auto expected = corpus::decode_tags(crf::viterbi(e, t.crf_params()).tags);
  corpus::attach_text(expected, r.text);
  const auto got = t.predict_spans(r);
  EXPECT_EQ(got, expected);
  for (const auto& s : got) EXPECT_EQ(s.text, r.text.substr(s.start, s.length()));
}

TEST(Tagger, ForcedGoldEmissionsDecodeToGold) {
  for (const char* name : {"crf", "lstm"}) {
    const Tagger t = build_tagger(tiny(name), encoders::Vocab({U'a'}));
    const corpus::TagSequence gold = {0, 1, 2, 0, 5, 6, 3};
    Matrix e(7, 7, -10.0);
    for (int i = 0; i < 7; ++i) e(i, gold[i]) = 10.0;
    EXPECT_EQ(t.decode(e), gold) << name;
  }
}

TEST(Tagger, SectionsViewMapsOffsetsBack) {
  auto reports = small_corpus(5);
  for (auto& r : reports) {
    const auto segs = segments(r, InputView::Sections);
    ASSERT_FALSE(segs.empty());
    for (const auto& s : segs) {
      ASSERT_GE(s.offset, 0);
      ASSERT_LE(s.offset + s.length, static_cast<int>(r.text.size()));
    }
    EXPECT_EQ(segments(r, InputView::Joint).size(), 1u);
  }
  TaggerConfig c = tiny("crf");
  c.input = InputView::Sections;
  const Tagger t = build_tagger(c, build_vocab(reports, 1));
  for (const auto& r : reports) {
    const auto spans = t.predict_spans(r);
    EXPECT_NO_THROW(corpus::validate_spans(spans, static_cast<int>(r.text.size())));
  }
}

TEST(Train, DeterministicAndDescending) {
  const auto reports = small_corpus(12);
  const auto [tr, dv] = split_train_dev(reports, 0.25, 7);
  EXPECT_EQ(dv.size(), 3u);
  TrainConfig tc;
  tc.max_epochs = 6;
  tc.patience = 10;
  auto run = [&] {
    Tagger t = build_tagger(tiny("lstm_crf"), build_vocab(tr, 1));
    auto h = train(t, tr, dv, tc);
    return std::make_pair(std::move(t), h);
  };
  auto [a, ha] = run();
  auto [b, hb] = run();
  ASSERT_EQ(ha.epochs.size(), hb.epochs.size());
  for (std::size_t i = 0; i < ha.epochs.size(); ++i) {
    EXPECT_EQ(ha.epochs[i].train_loss, hb.epochs[i].train_loss);
    EXPECT_EQ(ha.epochs[i].dev.f1, hb.epochs[i].dev.f1);
  }
  EXPECT_EQ(ha.best_epoch, hb.best_epoch);
  for (std::size_t i = 0; i < a.parameters().count(); ++i) EXPECT_EQ(a.parameters()[i].value, b.parameters()[i].value);
  EXPECT_LT(ha.epochs[5].train_loss, ha.epochs[0].train_loss);
  // Best epoch is the first maximum of dev F1.
  int best = 0;
  for (std::size_t i = 0; i < ha.epochs.size(); ++i) {
    if (ha.epochs[i].dev.f1 > ha.epochs[best].dev.f1) best = static_cast<int>(i);
  }
  EXPECT_EQ(ha.best_epoch, best);
}

TEST(Train, DecoderConsistency) {
  const auto reports = small_corpus(8);
  Tagger t = build_tagger(tiny("lstm_crf"), build_vocab(reports, 1));
  TrainConfig tc;
  tc.max_epochs = 3;
  train(t, reports, {}, tc);
  for (const auto& r : reports) {
    const auto ids = t.vocab().encode(r.text);
    const Matrix e = t.emissions(ids);
    const auto p = t.crf_params();
    const auto pred = t.decode(e);
    const auto gold = corpus::encode_tags(r.gold_spans, static_cast<int>(r.text.size()));
    if (pred != gold) EXPECT_GE(crf::score_sequence(e, p, pred), crf::score_sequence(e, p, gold));
  }
}

TEST(Train, NanAbortsWithDiagnostics) {
  const auto reports = small_corpus(4);
  Tagger t = build_tagger(tiny("lstm"), build_vocab(reports, 1));
  t.parameters().at("projection.bias").value(0, 0) = std::numeric_limits<double>::quiet_NaN();
  TrainConfig tc;
  tc.max_epochs = 1;
  try {
    train(t, reports, {}, tc);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("epoch 0"), std::string::npos) << msg;
    EXPECT_NE(msg.find("batch"), std::string::npos) << msg;
    EXPECT_NE(msg.find("parameter norm"), std::string::npos) << msg;
  }
}

TEST(Train, RejectsBadConfig) {
  TrainConfig tc;
  tc.batch_size = 0;
  EXPECT_THROW(tc.validate(), UsageError);
  EXPECT_THROW(train_config_from_json({{"momentum", 0.9}}), UsageError);
  EXPECT_EQ(train_config_from_json({{"max_epochs", 3}}).max_epochs, 3);
}

TEST(Serialize, RoundTripPredictions) {
  const auto reports = small_corpus(20);
  for (const char* name : {"lstm_crf", "attention_lstm"}) {
    Tagger t = build_tagger(tiny(name), build_vocab(reports, 2));
    TrainConfig tc;
    tc.max_epochs = 1;
    train(t, reports, {}, tc);
    const fs::path dir = temp_dir(name);
    save_model(t, dir);
    const Tagger back = load_model(dir);
    EXPECT_EQ(to_json(back.config()).dump(), to_json(t.config()).dump());
    EXPECT_EQ(back.vocab().chars(), t.vocab().chars());
    for (const auto& r : reports) EXPECT_EQ(back.predict_spans(r), t.predict_spans(r));
    for (std::size_t i = 0; i < t.parameters().count(); ++i) {
      EXPECT_EQ(back.parameters()[i].value, t.parameters()[i].value);
    }
    fs::remove_all(dir);
  }
}

TEST(Serialize, CorruptedTensorFileIsIntegrityError) {
  const Tagger t = build_tagger(tiny("crf"), encoders::Vocab({U'a'}));
  const fs::path dir = temp_dir("corrupt");
  save_model(t, dir);
  fs::resize_file(dir / io::kTensorFile, fs::file_size(dir / io::kTensorFile) - 4);
  EXPECT_THROW(load_model(dir), IntegrityError);
  fs::remove_all(dir);
}

TEST(Serialize, UnknownVersionIsRejected) {
  const Tagger t = build_tagger(tiny("crf"), encoders::Vocab({U'a'}));
  const fs::path dir = temp_dir("version");
  save_model(t, dir);
  std::ifstream in(dir / io::kManifestFile);
  auto m = nlohmann::ordered_json::parse(in);
  in.close();
  m["version"] = 99;
  std::ofstream(dir / io::kManifestFile) << m.dump();
  try {
    load_model(dir);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("unsupported"), std::string::npos);
  }
  fs::remove_all(dir);
}

TEST(Serialize, ShapeMismatchIsIntegrityError) {
  const Tagger t = build_tagger(tiny("crf"), encoders::Vocab({U'a'}));
  const fs::path dir = temp_dir("shape");
  save_model(t, dir);
  std::ifstream in(dir / io::kManifestFile);
  auto m = nlohmann::ordered_json::parse(in);
  in.close();
  m["config"]["embedding_dim"] = 7;
  std::ofstream(dir / io::kManifestFile) << m.dump();
  EXPECT_THROW(load_model(dir), IntegrityError);
  fs::remove_all(dir);
}
