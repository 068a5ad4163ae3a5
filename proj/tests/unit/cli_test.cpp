#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cmie/cli/commands.hpp"
#include "cmie/corpus/jsonl.hpp"

using namespace cmie;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string log;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "cmie");
  std::ostringstream out, log;
  Result r;
  r.code = cli::main(args, out, log);
  r.out = out.str();
  r.log = log.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("cmie_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& rel) const { return (dir_ / rel).string(); }

  // gen + preprocess; returns the preprocessed file.
  std::string corpus(int n, int seed, const std::string& name) {
    EXPECT_EQ(run({"gen", "--n", std::to_string(n), "--seed", std::to_string(seed), "--out", path(name + "_g")}).code,
              0);
    EXPECT_EQ(run({"preprocess", "--input", path(name + "_g/corpus.jsonl"), "--out", path(name + "_p")}).code, 0);
    return path(name + "_p/preprocessed.jsonl");
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, GenIsDeterministic) {
  ASSERT_EQ(run({"gen", "--n", "30", "--seed", "4", "--out", path("a")}).code, 0);
  ASSERT_EQ(run({"gen", "--n", "30", "--seed", "4", "--out", path("b")}).code, 0);
  ASSERT_EQ(run({"gen", "--n", "30", "--seed", "5", "--out", path("c")}).code, 0);
  const auto a = slurp(path("a/corpus.jsonl"));
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(path("b/corpus.jsonl")));
  EXPECT_NE(a, slurp(path("c/corpus.jsonl")));
  EXPECT_EQ(corpus::read_jsonl(path("a/corpus.jsonl")).size(), 30u);
}

TEST_F(CliTest, GenZeroReports) {
  ASSERT_EQ(run({"gen", "--n", "0", "--out", path("z")}).code, 0);
  EXPECT_TRUE(fs::exists(path("z/corpus.jsonl")));
  EXPECT_EQ(slurp(path("z/corpus.jsonl")), "");
}

TEST_F(CliTest, PreprocessMarksKept) {
  const auto file = corpus(40, 2, "c");
  const auto reports = corpus::read_jsonl(file);
  ASSERT_EQ(reports.size(), 40u);
  long kept = 0;
  for (const auto& r : reports) kept += r.kept;
  EXPECT_GT(kept, 0);
  EXPECT_LT(kept, 40);
}

TEST_F(CliTest, TrainPredictEvalEnsemble) {
  const auto train = corpus(30, 6, "train");
  const auto dev = corpus(10, 7, "dev");
  write(path("cfg.json"), R"({"train": {"max_epochs": 1}})");
  const auto t = run({"train", "--model", "lstm_crf", "--input", train, "--dev", dev, "--config", path("cfg.json"),
                      "--out", path("m")});
  ASSERT_EQ(t.code, 0) << t.log;
  for (const char* f : {"manifest.json", "tensors.bin", "train_log.json", "run_config.json"}) {
    EXPECT_TRUE(fs::exists(path(std::string("m/") + f))) << f;
  }
  const auto p = run({"predict", "--model-dir", path("m"), "--input", dev, "--out", path("pred")});
  ASSERT_EQ(p.code, 0) << p.log;
  EXPECT_EQ(corpus::read_jsonl(path("pred/predictions.jsonl")).size(), corpus::read_jsonl(dev).size());

  const auto e = run({"eval", "--gold", dev, "--pred", dev, "--name", "gold", "--out", path("ev")});
  ASSERT_EQ(e.code, 0) << e.log;
  EXPECT_NE(e.out.find("1.0000"), std::string::npos);
  EXPECT_TRUE(fs::exists(path("ev/eval.json")));

  const auto v = run({"ensemble", "--pred", dev, "--threshold", "1", "--out", path("ens")});
  ASSERT_EQ(v.code, 0) << v.log;
  const auto fused = corpus::read_jsonl(path("ens/ensemble.jsonl"));
  const auto gold = corpus::read_jsonl(dev);
  ASSERT_EQ(fused.size(), gold.size());
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i].kept) {
      EXPECT_EQ(fused[i].gold_spans, gold[i].gold_spans);
    }
  }
}

TEST_F(CliTest, TrainingIsByteIdentical) {
  const auto train = corpus(20, 8, "train");
  write(path("cfg.json"), R"({"train": {"max_epochs": 2}, "tagger": {"embedding_dim": 8}})");
  for (const char* out : {"m1", "m2"}) {
    ASSERT_EQ(
        run({"train", "--model", "cnn_crf", "--input", train, "--config", path("cfg.json"), "--out", path(out)}).code,
        0);
  }
  EXPECT_EQ(slurp(path("m1/tensors.bin")), slurp(path("m2/tensors.bin")));
  EXPECT_EQ(slurp(path("m1/manifest.json")), slurp(path("m2/manifest.json")));
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run({"gen", "--seed", "abc"}).code, 1);
  EXPECT_EQ(run({"gen", "--bogus"}).code, 1);
  EXPECT_EQ(run({"ensemble", "--threshold", "1.5", "--pred", "x"}).code, 1);
  write(path("bad.json"), R"({"nonsense": 1})");
  EXPECT_EQ(run({"gen", "--config", path("bad.json"), "--out", path("g")}).code, 1);
  write(path("bad_tagger.json"), R"({"tagger": {"hidden_size": 3}})");
  EXPECT_EQ(run({"train", "--config", path("bad_tagger.json"), "--input", path("x"), "--out", path("m")}).code, 1);
  EXPECT_EQ(run({"train", "--model", "nope", "--input", path("x"), "--out", path("m")}).code, 1);
}

TEST_F(CliTest, DataErrors) {
  EXPECT_EQ(run({"preprocess", "--input", path("missing.jsonl"), "--out", path("p")}).code, 2);
  write(path("broken.jsonl"), "{\"id\": \"a\", \"text\": \"abc\", \"spans\": [{\"start\": 2, \"end\": 9, \"type\": \"PS\"}]}\n");
  EXPECT_EQ(run({"preprocess", "--input", path("broken.jsonl"), "--out", path("p")}).code, 2);
  write(path("garbage.jsonl"), "not json\n");
  EXPECT_EQ(run({"eval", "--gold", path("garbage.jsonl"), "--pred", path("garbage.jsonl"), "--out", path("e")}).code,
            2);
  fs::create_directories(path("empty_model"));
  write(path("ok.jsonl"), "");
  EXPECT_EQ(run({"predict", "--model-dir", path("empty_model"), "--input", path("ok.jsonl"), "--out", path("o")}).code,
            2);
}

TEST_F(CliTest, DivergenceExitsWithNumericCode) {
  const auto train = corpus(20, 9, "train");
  write(path("nan.json"), R"({"train": {"learning_rate": 1e300, "max_epochs": 2}})");
  const auto r =
      run({"train", "--model", "crf", "--input", train, "--config", path("nan.json"), "--out", path("m")});
  EXPECT_EQ(r.code, 3) << r.log;
  EXPECT_NE(r.log.find("diverged"), std::string::npos);
}
