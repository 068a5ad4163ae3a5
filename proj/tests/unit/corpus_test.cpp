#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "cmie/core/error.hpp"
#include "cmie/corpus/bio.hpp"
#include "cmie/corpus/jsonl.hpp"
#include "cmie/corpus/preprocess.hpp"
#include "cmie/corpus/synthetic.hpp"
#include "oracles.hpp"

using namespace cmie;
using namespace cmie::corpus;

namespace {

Span ps(int s, int e) { return {s, e, AttributeType::PrimarySite, {}}; }
Span ms(int s, int e) { return {s, e, AttributeType::MetastasisSite, {}}; }

}  // namespace

TEST(Attribute, StableNames) {
  EXPECT_EQ(to_string(AttributeType::PrimarySite), "PRIMARY_SITE");
  EXPECT_EQ(to_string(AttributeType::LesionSize), "LESION_SIZE");
  EXPECT_EQ(to_string(AttributeType::MetastasisSite), "METASTASIS_SITE");
  for (auto t : kAttributeTypes) EXPECT_EQ(parse_attribute(to_string(t)), t);
  EXPECT_THROW(parse_attribute("SIZE"), DataError);
}

TEST(Bio, LabelOrder) {
  const char* names[] = {"O", "B-PS", "I-PS", "B-LS", "I-LS", "B-MS", "I-MS"};
  for (int i = 0; i < kNumLabels; ++i) {
    EXPECT_EQ(label_name(i), names[i]);
    EXPECT_EQ(parse_label(names[i]), i);
  }
}

TEST(Bio, EncodeExamples) {
  EXPECT_EQ(encode_tags({}, 4), (TagSequence{kO, kO, kO, kO}));
  EXPECT_EQ(encode_tags({ps(1, 3)}, 4), (TagSequence{kO, kBPs, kIPs, kO}));
}

TEST(Bio, EncodeRejectsBadSpans) {
  EXPECT_THROW(encode_tags({ps(1, 3), ms(2, 4)}, 5), DataError);
  EXPECT_THROW(encode_tags({ps(3, 6)}, 5), DataError);
  EXPECT_THROW(encode_tags({ps(2, 2)}, 5), DataError);
}

TEST(Bio, DecodeExamples) {
  EXPECT_EQ(decode_tags({kO, kBPs, kIPs, kO}), (std::vector<Span>{ps(1, 3)}));
  EXPECT_EQ(decode_tags({kIMs, kIMs, kO}), (std::vector<Span>{ms(0, 2)}));
  EXPECT_EQ(decode_tags({kBPs, kBPs}), (std::vector<Span>{ps(0, 1), ps(1, 2)}));
  EXPECT_EQ(decode_tags({kBPs, kIMs}), (std::vector<Span>{ps(0, 1), ms(1, 2)}));
  EXPECT_TRUE(decode_tags({}).empty());
}

TEST(Bio, RoundTripRandomSpanSets) {
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const int length = 1 + static_cast<int>(rng.below(30));
    const auto spans = oracle::random_spans(rng, length, 6);
    ASSERT_EQ(decode_tags(encode_tags(spans, length)), spans);
  }
}

TEST(Bio, DecodeIsTotalAndValidForShortSequences) {
  for (int T = 1; T <= 4; ++T) {
    int total = 1;
    for (int i = 0; i < T; ++i) total *= kNumLabels;
    for (int code = 0; code < total; ++code) {
      TagSequence tags(T);
      int c = code;
      for (int t = 0; t < T; ++t, c /= kNumLabels) tags[t] = c % kNumLabels;
      const auto spans = decode_tags(tags);
      EXPECT_NO_THROW(validate_spans(spans, T));
      // Re-encoding repairs the sequence; decoding is stable afterwards.
      EXPECT_EQ(decode_tags(encode_tags(spans, T)), spans);
    }
  }
}

TEST(Filter, KeywordExamples) {
  const auto kw = default_keywords();
  Report a, b, c;
  a.id = "a";
  a.text = U"左肺上叶肺癌，伴骨转移";
  b.id = "b";
  b.text = U"心脏彩超：各房室大小正常";
  c.id = "c";
  EXPECT_TRUE(filter_report(a, kw));
  EXPECT_TRUE(a.kept);
  EXPECT_FALSE(filter_report(b, kw));
  EXPECT_FALSE(filter_report(c, kw));
  EXPECT_THROW(filter_report(a, {}), UsageError);
}

TEST(Filter, AddingKeywordsNeverUnkeeps) {
  auto corpus = generate_corpus(SyntheticSpec::with_defaults(4, 200));
  auto kw = default_keywords();
  auto more = kw;
  more.push_back(U"结节");
  for (auto& r : corpus) {
    const bool before = contains_keyword(r.text, kw);
    if (before) {
      EXPECT_TRUE(contains_keyword(r.text, more));
    }
  }
}

TEST(Split, FindingsThenImpression) {
  const auto s = split_report(U"检查所见：左肺上叶见肿块影，大小约3.2cm×2.1cm。边界不清。印象：左肺上叶肺癌。");
  EXPECT_EQ(s.impression, U"左肺上叶肺癌。");
  EXPECT_EQ(s.findings_first, U"左肺上叶见肿块影，大小约3.2cm×2.1cm。");
}

TEST(Split, NoMarkers) {
  const auto s = split_report(U"左肺占位。建议复查。");
  EXPECT_EQ(s.impression, U"");
  EXPECT_EQ(s.findings_first, U"左肺占位。");
}

TEST(Split, SwappedOrder) {
  const auto s = split_report(U"印象：左肺上叶肺癌。检查所见：左肺上叶见肿块影，大小约3.2cm×2.1cm。边界不清。");
  EXPECT_EQ(s.impression, U"左肺上叶肺癌。");
  EXPECT_EQ(s.findings_first, U"左肺上叶见肿块影，大小约3.2cm×2.1cm。");
}

TEST(Split, MarkerWithoutColonIsNotHeader) {
  const auto s = split_report(U"所见：肝内见低密度影。诊断明确后复查。意见：肝癌。");
  EXPECT_EQ(s.impression, U"肝癌。");
  EXPECT_EQ(s.findings_first, U"肝内见低密度影。");
}

TEST(Split, SectionsAreSubstringsOfSyntheticReports) {
  auto corpus = generate_corpus(SyntheticSpec::with_defaults(5, 300));
  for (auto& r : corpus) {
    preprocess(r, default_keywords());
    EXPECT_NE(r.text.find(r.impression), std::u32string::npos);
    EXPECT_NE(r.text.find(r.findings_first), std::u32string::npos);
    if (r.kept) {
      EXPECT_FALSE(r.impression.empty()) << r.id;
      EXPECT_FALSE(r.findings_first.empty()) << r.id;
    }
  }
}

TEST(Synthetic, DeterministicBytes) {
  std::ostringstream a;
  std::ostringstream b;
  write_jsonl(generate_corpus(SyntheticSpec::with_defaults(1, 10)), a);
  write_jsonl(generate_corpus(SyntheticSpec::with_defaults(1, 10)), b);
  EXPECT_EQ(a.str(), b.str());
  std::ostringstream c;
  write_jsonl(generate_corpus(SyntheticSpec::with_defaults(2, 10)), c);
  EXPECT_NE(a.str(), c.str());
}

TEST(Synthetic, SpansMatchText) {
  for (const auto& r : generate_corpus(SyntheticSpec::with_defaults(3, 300))) {
    validate_spans(r.gold_spans, static_cast<int>(r.text.size()));
    for (const auto& s : r.gold_spans) EXPECT_EQ(s.text, r.text.substr(s.start, s.length()));
  }
}

TEST(Synthetic, NoiseRateRemovesMetastasis) {
  auto spec = SyntheticSpec::with_defaults(8, 1000);
  spec.noise_rate = 0.2;
  int cancer = 0;
  int lacking = 0;
  for (auto& r : generate_corpus(spec)) {
    if (r.gold_spans.empty() && !contains_keyword(r.text, default_keywords())) continue;
    if (r.gold_spans.empty()) continue;
    ++cancer;
    const bool has_ms = std::any_of(r.gold_spans.begin(), r.gold_spans.end(),
                                    [](const Span& s) { return s.type == AttributeType::MetastasisSite; });
    lacking += has_ms ? 0 : 1;
  }
  ASSERT_GT(cancer, 700);
  const double p = static_cast<double>(lacking) / cancer;
  const double sd = std::sqrt(0.2 * 0.8 / cancer);
  EXPECT_NEAR(p, 0.2, 4 * sd);
}

TEST(Synthetic, DistractorsAreFilteredOut) {
  auto spec = SyntheticSpec::with_defaults(6, 500);
  int dropped = 0;
  for (auto& r : generate_corpus(spec)) {
    if (!filter_report(r, default_keywords())) {
      ++dropped;
      EXPECT_TRUE(r.gold_spans.empty());
    }
  }
  EXPECT_GT(dropped, 0);
}

TEST(Synthetic, RejectsBadSpecs) {
  auto spec = SyntheticSpec::with_defaults(1, 5);
  spec.primary_sites.clear();
  EXPECT_THROW(generate_corpus(spec), UsageError);
  spec = SyntheticSpec::with_defaults(1, 5);
  spec.noise_rate = 1.5;
  EXPECT_THROW(generate_corpus(spec), UsageError);
}

TEST(Jsonl, RoundTrip) {
  auto corpus = generate_corpus(SyntheticSpec::with_defaults(9, 20));
  for (auto& r : corpus) preprocess(r, default_keywords());
  std::stringstream buf;
  write_jsonl(corpus, buf);
  const auto back = read_jsonl(buf);
  ASSERT_EQ(back.size(), corpus.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].id, corpus[i].id);
    EXPECT_EQ(back[i].text, corpus[i].text);
    EXPECT_EQ(back[i].impression, corpus[i].impression);
    EXPECT_EQ(back[i].findings_first, corpus[i].findings_first);
    EXPECT_EQ(back[i].kept, corpus[i].kept);
    EXPECT_EQ(back[i].gold_spans, corpus[i].gold_spans);
  }
  std::stringstream again;
  write_jsonl(back, again);
  EXPECT_EQ(again.str(), buf.str());
}

TEST(Jsonl, MissingSpansMeansNoGold) {
  std::istringstream in("{\"id\":\"x\",\"text\":\"肺癌\"}\n");
  const auto r = read_jsonl(in);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_TRUE(r[0].gold_spans.empty());
  EXPECT_FALSE(r[0].preprocessed);
}

TEST(Jsonl, ErrorsNameTheLine) {
  std::istringstream in(
      "{\"id\":\"x\",\"text\":\"肺癌\"}\n"
      "{\"id\":\"y\",\"text\":\"肺癌\",\"spans\":[{\"start\":\"0\",\"end\":1,\"type\":\"PRIMARY_SITE\"}]}\n");
  try {
    read_jsonl(in);
    FAIL() << "expected a DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  std::istringstream bad_range("{\"id\":\"x\",\"text\":\"肺癌\",\"spans\":[{\"start\":1,\"end\":5,\"type\":\"PRIMARY_SITE\"}]}\n");
  EXPECT_THROW(read_jsonl(bad_range), DataError);
  std::istringstream not_json("{oops\n");
  EXPECT_THROW(read_jsonl(not_json), DataError);
}
