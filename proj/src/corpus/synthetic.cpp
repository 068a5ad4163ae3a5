#include "cmie/corpus/synthetic.hpp"

#include <algorithm>
#include <cstdio>

#include "cmie/core/error.hpp"
#include "cmie/core/rng.hpp"
#include "cmie/core/utf8.hpp"

namespace cmie::corpus {

SyntheticSpec SyntheticSpec::with_defaults(std::uint64_t seed, int n_reports) {
  SyntheticSpec s;
  s.seed = seed;
  s.n_reports = n_reports;
  s.primary_sites = {U"左肺上叶", U"左肺下叶", U"右肺上叶", U"右肺中叶", U"右肺下叶", U"胃窦",
                     U"胃体小弯侧", U"食管中段", U"直肠", U"乙状结肠", U"胰头", U"左乳外上象限",
                     U"右乳", U"升结肠"};
  s.lesion_words = {U"软组织肿块影", U"结节影", U"不规则肿块", U"团块状软组织影", U"占位性病变"};
  s.cancer_terms = {U"癌", U"恶性肿瘤", U"占位，考虑癌"};
  s.size_patterns = {U"{a}cm×{b}cm", U"{a}×{b}cm", U"{a}cm", U"{m}mm×{n}mm"};
  s.metastasis_sites = {U"骨", U"脑", U"肝", U"肾上腺", U"腹膜", U"纵隔淋巴结", U"锁骨上淋巴结", U"胸膜"};
  s.distractor_sentences = {U"边界欠清。", U"增强扫描呈不均匀强化。", U"周围可见毛刺征。", U"气管居中。",
                            U"心影大小形态未见异常。", U"邻近结构受压推移。", U"扫描范围内未见积液。",
                            U"余未见明显异常。"};
  s.findings_headers = {U"检查所见：", U"影像所见：", U"所见：", U"检查描述："};
  s.impression_headers = {U"印象：", U"诊断意见：", U"影像诊断：", U"意见："};
  s.benign_reports = {
      U"检查所见：心脏各房室大小正常，室壁运动协调。印象：心脏结构未见明显异常。",
      U"检查所见：甲状腺形态规则，回声均匀。印象：甲状腺未见明显异常。",
      U"检查所见：双肾大小形态正常，集合系统未见分离。印象：双肾未见异常。",
      U"心脏彩超：各房室大小正常，瓣膜活动良好。诊断意见：心脏超声未见异常。",
      U"检查描述：颈部血管走行自然，管壁光滑。印象：颈部血管未见明显异常。",
  };
  return s;
}

namespace {

class Builder {
 public:
  void append(std::u32string_view s) { text_ += s; }
  void append_span(std::u32string_view s, AttributeType type) {
    const int start = static_cast<int>(text_.size());
    text_ += s;
    spans_.push_back(Span{start, static_cast<int>(text_.size()), type, std::u32string(s)});
  }
  std::u32string& text() { return text_; }
  std::vector<Span>& spans() { return spans_; }

 private:
  std::u32string text_;
  std::vector<Span> spans_;
};

const std::u32string& pick(const std::vector<std::u32string>& v, Rng& rng) { return v[rng.below(v.size())]; }

std::u32string decimal(Rng& rng) {
  const int tenths = 5 + static_cast<int>(rng.below(95));  // 0.5 .. 9.9
  char buf[16];
  std::snprintf(buf, sizeof buf, "%d.%d", tenths / 10, tenths % 10);
  return utf8::decode(buf);
}

std::u32string integer_mm(Rng& rng) { return utf8::decode(std::to_string(5 + rng.below(91))); }

std::u32string render_size(std::u32string pattern, Rng& rng) {
  auto replace = [&](std::u32string_view key, auto make) {
    const auto pos = pattern.find(key);
    if (pos != std::u32string::npos) pattern.replace(pos, key.size(), make(rng));
  };
  replace(U"{a}", decimal);
  replace(U"{b}", decimal);
  replace(U"{m}", integer_mm);
  replace(U"{n}", integer_mm);
  return pattern;
}

void check_table(const std::vector<std::u32string>& t, const char* name) {
  if (t.empty()) throw UsageError(std::string("synthetic corpus table '") + name + "' is empty");
}

void check_rate(double r, const char* name) {
  if (!(r >= 0.0 && r <= 1.0)) throw UsageError(std::string("synthetic corpus rate '") + name + "' outside [0,1]");
}

std::string report_id(std::uint64_t seed, int index) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "s%llu-%06d", static_cast<unsigned long long>(seed), index);
  return buf;
}

void findings_section(Builder& b, const SyntheticSpec& spec, const std::u32string* site, bool has_size, Rng& rng) {
  b.append(pick(spec.findings_headers, rng));
  if (site != nullptr) b.append_span(*site, AttributeType::PrimarySite);
  b.append(U"见");
  b.append(pick(spec.lesion_words, rng));
  if (has_size) {
    b.append(U"，大小约");
    b.append_span(render_size(pick(spec.size_patterns, rng), rng), AttributeType::LesionSize);
  }
  b.append(U"。");
  const int extra = 1 + static_cast<int>(rng.below(2));
  for (int i = 0; i < extra; ++i) b.append(pick(spec.distractor_sentences, rng));
}

void impression_section(Builder& b, const SyntheticSpec& spec, const std::u32string* site,
                        const std::vector<std::u32string>& metastases, Rng& rng) {
  b.append(pick(spec.impression_headers, rng));
  if (site != nullptr) {
    b.append_span(*site, AttributeType::PrimarySite);
    b.append(pick(spec.cancer_terms, rng));
  } else {
    b.append(U"考虑恶性肿瘤");
  }
  if (metastases.empty()) {
    if (rng.bernoulli(0.5)) b.append(U"，未见明确转移征象");
  } else if (metastases.size() == 1 && rng.bernoulli(0.5)) {
    b.append(U"，考虑");
    b.append_span(metastases[0], AttributeType::MetastasisSite);
    b.append(U"转移");
  } else {
    b.append(U"，伴");
    for (std::size_t i = 0; i < metastases.size(); ++i) {
      if (i > 0) b.append(U"、");
      b.append_span(metastases[i], AttributeType::MetastasisSite);
    }
    b.append(U"转移");
  }
  b.append(U"。");
}

}  // namespace

std::vector<Report> generate_corpus(const SyntheticSpec& spec) {
  check_table(spec.primary_sites, "primary_sites");
  check_table(spec.lesion_words, "lesion_words");
  check_table(spec.cancer_terms, "cancer_terms");
  check_table(spec.size_patterns, "size_patterns");
  check_table(spec.metastasis_sites, "metastasis_sites");
  check_table(spec.distractor_sentences, "distractor_sentences");
  check_table(spec.findings_headers, "findings_headers");
  check_table(spec.impression_headers, "impression_headers");
  check_table(spec.benign_reports, "benign_reports");
  check_rate(spec.noise_rate, "noise_rate");
  check_rate(spec.distractor_rate, "distractor_rate");
  check_rate(spec.swap_rate, "swap_rate");
  if (spec.n_reports < 0) throw UsageError("n_reports must be non-negative");

  Rng rng(spec.seed);
  std::vector<Report> out;
  out.reserve(spec.n_reports);
  for (int i = 0; i < spec.n_reports; ++i) {
    Report r;
    r.id = report_id(spec.seed, i);
    if (rng.bernoulli(spec.distractor_rate)) {
      r.text = pick(spec.benign_reports, rng);
      out.push_back(std::move(r));
      continue;
    }
    const bool has_site = !rng.bernoulli(spec.noise_rate);
    const bool has_size = !rng.bernoulli(spec.noise_rate);
    const bool has_meta = !rng.bernoulli(spec.noise_rate);
    const std::u32string* site = has_site ? &pick(spec.primary_sites, rng) : nullptr;
    std::vector<std::u32string> metastases;
    if (has_meta) {
      const std::size_t want = 1 + rng.below(std::min<std::size_t>(3, spec.metastasis_sites.size()));
      while (metastases.size() < want) {
        const auto& m = pick(spec.metastasis_sites, rng);
        if (std::find(metastases.begin(), metastases.end(), m) == metastases.end()) metastases.push_back(m);
      }
    }
    Builder b;
    if (rng.bernoulli(spec.swap_rate)) {
      impression_section(b, spec, site, metastases, rng);
      findings_section(b, spec, site, has_size, rng);
    } else {
      findings_section(b, spec, site, has_size, rng);
      impression_section(b, spec, site, metastases, rng);
    }
    r.text = std::move(b.text());
    r.gold_spans = std::move(b.spans());
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace cmie::corpus
