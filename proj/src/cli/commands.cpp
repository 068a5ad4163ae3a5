#include "cmie/cli/commands.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "cmie/core/error.hpp"
#include "cmie/core/utf8.hpp"
#include "cmie/corpus/jsonl.hpp"
#include "cmie/corpus/preprocess.hpp"
#include "cmie/corpus/synthetic.hpp"
#include "cmie/ensemble/vote.hpp"
#include "cmie/eval/eval.hpp"
#include "cmie/mrc/mrc.hpp"
#include "cmie/taggers/serialize.hpp"
#include "cmie/taggers/train.hpp"

namespace cmie::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"gen",      "preprocess", "train",       "predict",
                                                 "ensemble", "mrc-train",  "mrc-predict", "eval"};
  return names;
}

Json default_run_config(const std::string& command) {
  Json j = Json::object();
  if (command == "gen") {
    j["seed"] = 1;
    j["n_reports"] = 100;
    j["noise_rate"] = 0.1;
    j["distractor_rate"] = 0.1;
    j["swap_rate"] = 0.2;
    j["out"] = "";
  } else if (command == "preprocess") {
    j["input"] = "";
    j["keywords"] = Json::array();
    for (const auto& k : corpus::default_keywords()) j["keywords"].push_back(utf8::encode(k));
    j["out"] = "";
  } else if (command == "train") {
    j["input"] = "";
    j["dev"] = "";
    j["model"] = "lstm_crf";
    j["seed"] = 1;
    j["tagger"] = Json::object();
    j["train"] = Json::object();
    j["out"] = "";
  } else if (command == "predict" || command == "mrc-predict") {
    j["model_dir"] = "";
    j["input"] = "";
    if (command == "mrc-predict") j["tau"] = nullptr;
    j["out"] = "";
  } else if (command == "ensemble") {
    j["predictions"] = Json::array();
    j["threshold"] = 0;
    j["tune_gold"] = "";
    j["tune_predictions"] = Json::array();
    j["out"] = "";
  } else if (command == "mrc-train") {
    j["input"] = "";
    j["dev"] = "";
    j["seed"] = 1;
    j["tau"] = nullptr;
    j["mrc"] = Json::object();
    j["train"] = Json::object();
    j["out"] = "";
  } else if (command == "eval") {
    j["gold"] = "";
    j["predictions"] = Json::array();
    j["names"] = Json::array();
    j["out"] = "";
  } else {
    throw UsageError("unknown command '" + command + "'");
  }
  return j;
}

Json merge_run_config(const Json& base, const Json& overrides, const std::string& source) {
  if (!overrides.is_object()) throw UsageError(source + ": configuration must be a JSON object");
  Json out = base;
  for (auto it = overrides.begin(); it != overrides.end(); ++it) {
    if (!base.contains(it.key())) throw UsageError(source + ": unknown key '" + it.key() + "'");
    const Json& def = base[it.key()];
    if (def.is_object() && it->is_object()) {
      Json merged = def;
      for (auto e = it->begin(); e != it->end(); ++e) merged[e.key()] = e.value();
      out[it.key()] = std::move(merged);
    } else {
      out[it.key()] = it.value();
    }
  }
  return out;
}

namespace {

template <class T>
T get(const Json& config, const char* key) {
  try {
    return config.at(key).get<T>();
  } catch (const Json::exception&) {
    throw UsageError(std::string("configuration key '") + key + "' is missing or has the wrong type");
  }
}

std::string require_path(const Json& config, const char* key) {
  auto v = get<std::string>(config, key);
  if (v.empty()) throw UsageError(std::string("missing required option '") + key + "'");
  return v;
}

fs::path output_dir(const Json& config) {
  const fs::path dir = require_path(config, "out");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write " + path.string());
  f << text;
}

void echo_config(const fs::path& dir, const std::string& command, const Json& config) {
  Json j;
  j["command"] = command;
  j["config"] = config;
  write_text(dir / "run_config.json", j.dump(2) + "\n");
}

std::vector<corpus::Report> kept_only(std::vector<corpus::Report> reports) {
  std::erase_if(reports, [](const corpus::Report& r) { return r.preprocessed && !r.kept; });
  return reports;
}

std::vector<corpus::Report> read_reports(const std::string& path) { return corpus::read_jsonl(fs::path(path)); }

std::vector<std::vector<corpus::Report>> read_many(const Json& paths) {
  std::vector<std::vector<corpus::Report>> out;
  for (const auto& p : paths) out.push_back(read_reports(p.get<std::string>()));
  return out;
}

void cmd_gen(const Json& c, std::ostream& log) {
  auto spec = corpus::SyntheticSpec::with_defaults(get<std::uint64_t>(c, "seed"), get<int>(c, "n_reports"));
  if (spec.n_reports < 0) throw UsageError("n_reports must be non-negative");
  spec.noise_rate = get<double>(c, "noise_rate");
  spec.distractor_rate = get<double>(c, "distractor_rate");
  spec.swap_rate = get<double>(c, "swap_rate");
  const auto reports = corpus::generate_corpus(spec);
  const fs::path dir = output_dir(c);
  corpus::write_jsonl(reports, dir / "corpus.jsonl");
  echo_config(dir, "gen", c);
  log << "gen: wrote " << reports.size() << " reports to " << (dir / "corpus.jsonl").string() << "\n";
}

void cmd_preprocess(const Json& c, std::ostream& log) {
  std::vector<std::u32string> keywords;
  for (const auto& k : get<std::vector<std::string>>(c, "keywords")) keywords.push_back(utf8::decode(k));
  auto reports = read_reports(require_path(c, "input"));
  std::size_t kept = 0;
  for (auto& r : reports) {
    corpus::preprocess(r, keywords);
    kept += r.kept ? 1 : 0;
  }
  const fs::path dir = output_dir(c);
  corpus::write_jsonl(reports, dir / "preprocessed.jsonl");
  echo_config(dir, "preprocess", c);
  log << "preprocess: kept " << kept << ", dropped " << reports.size() - kept << " of " << reports.size()
      << " reports\n";
}

taggers::TrainConfig train_config(const Json& c) {
  Json t = c.at("train");
  if (!t.contains("seed")) t["seed"] = c.at("seed");
  return taggers::train_config_from_json(t);
}

void log_epoch(std::ostream& log, const char* what, const taggers::EpochRecord& e) {
  log << what << ": epoch " << e.epoch << " loss " << e.train_loss << " dev f1 " << e.dev.f1 << "\n";
  log.flush();
}

// Train and dev sets: an explicit dev file, or a split of the input.
std::pair<std::vector<corpus::Report>, std::vector<corpus::Report>> train_dev(const Json& c,
                                                                              const taggers::TrainConfig& tc) {
  auto input = kept_only(read_reports(require_path(c, "input")));
  const auto dev_path = get<std::string>(c, "dev");
  if (!dev_path.empty()) return {std::move(input), kept_only(read_reports(dev_path))};
  return taggers::split_train_dev(input, tc.dev_fraction, tc.seed);
}

void cmd_train(const Json& c, std::ostream& log) {
  Json tj = c.at("tagger");
  if (!tj.is_object()) throw UsageError("'tagger' must be a JSON object");
  tj["name"] = get<std::string>(c, "model");
  if (!tj.contains("seed")) tj["seed"] = c.at("seed");
  const taggers::TaggerConfig config = taggers::tagger_config_from_json(tj);
  const taggers::TrainConfig tc = train_config(c);
  auto [train_set, dev_set] = train_dev(c, tc);
  if (train_set.empty()) throw DataError("no training reports");
  taggers::Tagger tagger = taggers::build_tagger(config, taggers::build_vocab(train_set, config.min_char_count));
  const auto history = taggers::train(tagger, train_set, dev_set, tc,
                                      [&](const taggers::EpochRecord& e) { log_epoch(log, "train", e); });
  const fs::path dir = output_dir(c);
  Json extra;
  extra["train"] = taggers::to_json(tc);
  extra["best_epoch"] = history.best_epoch;
  taggers::save_model(tagger, dir, extra);
  write_text(dir / "train_log.json", taggers::to_json(history).dump(2) + "\n");
  Json effective = c;
  effective["tagger"] = taggers::to_json(config);
  effective["train"] = taggers::to_json(tc);
  echo_config(dir, "train", effective);
  log << "train: " << config.name << " best epoch " << history.best_epoch << ", saved to " << dir.string() << "\n";
}

void cmd_predict(const Json& c, std::ostream& log) {
  const taggers::Tagger tagger = taggers::load_model(require_path(c, "model_dir"));
  auto reports = read_reports(require_path(c, "input"));
  for (auto& r : reports) {
    r.gold_spans = r.preprocessed && !r.kept ? std::vector<corpus::Span>{} : tagger.predict_spans(r);
  }
  const fs::path dir = output_dir(c);
  corpus::write_jsonl(reports, dir / "predictions.jsonl");
  echo_config(dir, "predict", c);
  log << "predict: " << reports.size() << " reports with " << tagger.config().name << "\n";
}

void cmd_ensemble(const Json& c, std::ostream& out, std::ostream& log) {
  const auto systems = read_many(c.at("predictions"));
  if (systems.empty()) throw UsageError("ensemble needs at least one --pred file");
  int threshold = get<int>(c, "threshold");
  const fs::path dir = output_dir(c);
  const auto tune_gold = get<std::string>(c, "tune_gold");
  if (!tune_gold.empty()) {
    const auto tune = read_many(c.at("tune_predictions"));
    if (tune.size() != systems.size()) throw UsageError("need one tuning prediction file per system");
    const auto rows = ensemble::sweep_thresholds(tune, read_reports(tune_gold));
    Json sweep = Json::array();
    for (const auto& r : rows) {
      Json row = eval::to_json(r.prf);
      row["threshold"] = r.threshold;
      sweep.push_back(std::move(row));
    }
    write_text(dir / "sweep.json", sweep.dump(2) + "\n");
    if (threshold == 0) threshold = ensemble::best_threshold(rows);
  }
  const auto fused = ensemble::vote_reports(systems, {threshold});
  corpus::write_jsonl(fused, dir / "ensemble.jsonl");
  echo_config(dir, "ensemble", c);
  const int effective = ensemble::VoteConfig{threshold}.resolve(static_cast<int>(systems.size()));
  out << "threshold " << effective << "\n";
  log << "ensemble: " << systems.size() << " systems, threshold " << effective << "\n";
}

void cmd_mrc_train(const Json& c, std::ostream& log) {
  Json mj = c.at("mrc");
  if (!mj.is_object()) throw UsageError("'mrc' must be a JSON object");
  if (!mj.contains("seed")) mj["seed"] = c.at("seed");
  if (!c.at("tau").is_null()) {
    mj["tau"] = c.at("tau");
    mj["select_tau"] = false;
  }
  const mrc::MrcConfig config = mrc::mrc_config_from_json(mj);
  const taggers::TrainConfig tc = train_config(c);
  auto [train_set, dev_set] = train_dev(c, tc);
  if (train_set.empty()) throw DataError("no training reports");
  mrc::MrcModel model(config, mrc::build_mrc_vocab(train_set, config.min_char_count));
  const auto history =
      mrc::train_mrc(model, train_set, dev_set, tc, [&](const taggers::EpochRecord& e) { log_epoch(log, "mrc-train", e); });
  const fs::path dir = output_dir(c);
  Json extra;
  extra["train"] = taggers::to_json(tc);
  extra["best_epoch"] = history.best_epoch;
  mrc::save_mrc(model, dir, extra);
  write_text(dir / "train_log.json", taggers::to_json(history).dump(2) + "\n");
  Json effective = c;
  effective["mrc"] = mrc::to_json(model.config());
  effective["train"] = taggers::to_json(tc);
  echo_config(dir, "mrc-train", effective);
  log << "mrc-train: best epoch " << history.best_epoch << ", tau " << model.config().tau << ", saved to "
      << dir.string() << "\n";
}

void cmd_mrc_predict(const Json& c, std::ostream& log) {
  mrc::MrcModel model = mrc::load_mrc(require_path(c, "model_dir"));
  if (!c.at("tau").is_null()) {
    model.config().tau = get<double>(c, "tau");
    model.config().validate();
  }
  auto reports = read_reports(require_path(c, "input"));
  for (auto& r : reports) {
    r.gold_spans = r.preprocessed && !r.kept ? std::vector<corpus::Span>{} : mrc::mrc_predict_report(model, r);
  }
  const fs::path dir = output_dir(c);
  corpus::write_jsonl(reports, dir / "predictions.jsonl");
  echo_config(dir, "mrc-predict", c);
  log << "mrc-predict: " << reports.size() << " reports at tau " << model.config().tau << "\n";
}

void cmd_eval(const Json& c, std::ostream& out, std::ostream& log) {
  const auto gold = read_reports(require_path(c, "gold"));
  const auto paths = get<std::vector<std::string>>(c, "predictions");
  auto names = get<std::vector<std::string>>(c, "names");
  if (paths.empty()) throw UsageError("eval needs at least one --pred file");
  if (!names.empty() && names.size() != paths.size()) throw UsageError("give one --name per --pred file");
  if (names.empty()) {
    for (const auto& p : paths) {
      const fs::path path(p);
      names.push_back(path.has_parent_path() && path.stem() == "predictions" ? path.parent_path().filename().string()
                                                                             : path.stem().string());
    }
  }
  Json systems = Json::array();
  std::vector<std::pair<std::string, eval::PRF>> rows;
  std::vector<eval::EvalReport> reports;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    reports.push_back(eval::evaluate(gold, read_reports(paths[i])));
    rows.emplace_back(names[i], reports.back().overall);
    Json s = eval::to_json(reports.back());
    s["name"] = names[i];
    systems.push_back(std::move(s));
  }
  const std::string table = eval::format_table(paths.size() == 1 ? eval::attribute_rows(reports[0]) : rows);
  out << table;
  const auto dir_name = get<std::string>(c, "out");
  if (!dir_name.empty()) {
    const fs::path dir = output_dir(c);
    write_text(dir / "eval.json", systems.dump(2) + "\n");
    write_text(dir / "eval.txt", table);
    echo_config(dir, "eval", c);
  }
  log << "eval: " << paths.size() << " system(s) against " << gold.size() << " reports\n";
}

Json load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot open config file " + path);
  try {
    return Json::parse(f);
  } catch (const Json::parse_error& e) {
    throw UsageError("config file " + path + " is not valid JSON: " + e.what());
  }
}

}  // namespace

void run_command(const std::string& command, const Json& config, std::ostream& out, std::ostream& log) {
  if (command == "gen") {
    cmd_gen(config, log);
  } else if (command == "preprocess") {
    cmd_preprocess(config, log);
  } else if (command == "train") {
    cmd_train(config, log);
  } else if (command == "predict") {
    cmd_predict(config, log);
  } else if (command == "ensemble") {
    cmd_ensemble(config, out, log);
  } else if (command == "mrc-train") {
    cmd_mrc_train(config, log);
  } else if (command == "mrc-predict") {
    cmd_mrc_predict(config, log);
  } else if (command == "eval") {
    cmd_eval(config, out, log);
  } else {
    throw UsageError("unknown command '" + command + "'");
  }
}

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> threshold;
  std::optional<std::string> model;
  std::optional<int> n;
  std::optional<std::string> input;
  std::optional<std::string> dev;
  std::optional<std::string> model_dir;
  std::optional<std::string> gold;
  std::optional<std::string> tune_gold;
  std::vector<std::string> pred;
  std::vector<std::string> tune_pred;
  std::vector<std::string> name;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON run configuration");
  sub->add_option("--out", f.out, "Output directory");
}

Json flag_overrides(const std::string& command, const Flags& f) {
  Json j = Json::object();
  if (f.seed) j["seed"] = *f.seed;
  if (f.out) j["out"] = *f.out;
  if (f.model) j["model"] = *f.model;
  if (f.n) j["n_reports"] = *f.n;
  if (f.input) j["input"] = *f.input;
  if (f.dev) j["dev"] = *f.dev;
  if (f.model_dir) j["model_dir"] = *f.model_dir;
  if (f.gold) j["gold"] = *f.gold;
  if (f.tune_gold) j["tune_gold"] = *f.tune_gold;
  if (!f.pred.empty()) j["predictions"] = f.pred;
  if (!f.tune_pred.empty()) j["tune_predictions"] = f.tune_pred;
  if (!f.name.empty()) j["names"] = f.name;
  if (f.threshold) {
    const std::string& t = *f.threshold;
    std::size_t used = 0;
    try {
      if (command == "ensemble") {
        const int v = std::stoi(t, &used);
        j["threshold"] = v;
      } else {
        const double v = std::stod(t, &used);
        j["tau"] = v;
      }
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != t.size()) throw UsageError("invalid --threshold value '" + t + "'");
  }
  return j;
}

}  // namespace

int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& log) {
  CLI::App app{"Attribute extraction from imaging reports"};
  app.require_subcommand(1);
  Flags f;
  std::map<std::string, CLI::App*> subs;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic report corpus");
  add_common(gen, f);
  gen->add_option("--seed", f.seed, "Random seed");
  gen->add_option("--n", f.n, "Number of reports");
  auto* pre = app.add_subcommand("preprocess", "Keyword filter and section split");
  add_common(pre, f);
  pre->add_option("--input", f.input, "Input JSONL");
  auto* train = app.add_subcommand("train", "Train one tagger");
  add_common(train, f);
  train->add_option("--seed", f.seed, "Random seed");
  train->add_option("--model", f.model, "Tagger name");
  train->add_option("--input", f.input, "Training JSONL");
  train->add_option("--dev", f.dev, "Development JSONL");
  auto* predict = app.add_subcommand("predict", "Tag reports with a trained model");
  add_common(predict, f);
  predict->add_option("--model-dir", f.model_dir, "Model directory");
  predict->add_option("--input", f.input, "Input JSONL");
  auto* ens = app.add_subcommand("ensemble", "Vote over prediction files");
  add_common(ens, f);
  ens->add_option("--pred", f.pred, "Prediction JSONL (repeatable)");
  ens->add_option("--threshold", f.threshold, "Minimum votes");
  ens->add_option("--tune-gold", f.tune_gold, "Gold JSONL for the threshold sweep");
  ens->add_option("--tune-pred", f.tune_pred, "Prediction JSONL on the tuning set (repeatable)");
  auto* mtrain = app.add_subcommand("mrc-train", "Train the reading-comprehension model");
  add_common(mtrain, f);
  mtrain->add_option("--seed", f.seed, "Random seed");
  mtrain->add_option("--threshold", f.threshold, "Fixed rejection threshold (disables dev selection)");
  mtrain->add_option("--input", f.input, "Training JSONL");
  mtrain->add_option("--dev", f.dev, "Development JSONL");
  auto* mpred = app.add_subcommand("mrc-predict", "Answer the attribute questions");
  add_common(mpred, f);
  mpred->add_option("--model-dir", f.model_dir, "Model directory");
  mpred->add_option("--input", f.input, "Input JSONL");
  mpred->add_option("--threshold", f.threshold, "Rejection threshold override");
  auto* ev = app.add_subcommand("eval", "Span-level precision, recall and F1");
  add_common(ev, f);
  ev->add_option("--gold", f.gold, "Gold JSONL");
  ev->add_option("--pred", f.pred, "Prediction JSONL (repeatable)");
  ev->add_option("--name", f.name, "Row name per prediction file");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    log << "error: " << e.what() << "\n";
    return kUsage;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    Json config = default_run_config(command);
    if (!f.config.empty()) config = merge_run_config(config, load_config_file(f.config), f.config);
    config = merge_run_config(config, flag_overrides(command, f), "command line");
    run_command(command, config, out, log);
    return kOk;
  } catch (const UsageError& e) {
    log << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericError& e) {
    log << "error: " << e.what() << "\n";
    return kNumeric;
  } catch (const DataError& e) {
    log << "error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kData;
  }
}

}  // namespace cmie::cli
