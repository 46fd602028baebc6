// Copyright 2026 The Polyphone Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "polyphone/cli.h"

#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "polyphone/checkpoint.h"
#include "polyphone/errors.h"
#include "polyphone/eval.h"
#include "polyphone/model_check.h"
#include "polyphone/train.h"
#include "polyphone/utf8.h"

namespace polyphone {
namespace {

constexpr double kGradCheckTolerance = 1e-4;

std::string ReadFile(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::optional<WordVecStore> MaybeLoadWords(const std::string &path, Variant variant) {
  if (path.empty()) {
    if (UsesWordCondition(variant)) {
      throw ConfigError("variant " + std::string(VariantName(variant)) + " needs --wordvec");
    }
    return std::nullopt;
  }
  return LoadWordVectors(path);
}

std::unique_ptr<Segmenter> MaybeLoadSegmenter(const std::string &path) {
  if (path.empty()) return nullptr;
  return std::make_unique<LongestMatchSegmenter>(LoadSegmenterDictionary(path));
}

struct Options {
  std::string corpus, eval_corpus, train_corpus, lexicon, variant, config, out, wordvec,
      segdict, history, checkpoint, json, text, gc_variant = "all";
  int index = -1;
  bool restrict = false;
  bool full = false;
  uint64_t seed = 1;
};

int RunTrain(const Options &o, std::ostream &out) {
  TrainConfig cfg;
  if (!o.config.empty()) cfg = ParseTrainConfig(ReadFile(o.config));
  cfg.variant = ParseVariant(o.variant);
  cfg.Validate();

  const Lexicon lexicon = LoadLexicon(o.lexicon);
  auto samples = LoadCorpus(o.corpus, lexicon);
  Split split;
  if (!o.eval_corpus.empty()) {
    split.train = std::move(samples);
    split.eval = LoadCorpus(o.eval_corpus, lexicon);
  } else {
    split = SplitDataset(samples, SplitRule{}, cfg.seed);
  }
  const auto words = MaybeLoadWords(o.wordvec, cfg.variant);
  const auto segmenter = MaybeLoadSegmenter(o.segdict);
  out << "train " << split.train.size() << " samples, eval " << split.eval.size()
      << " samples, variant " << VariantName(cfg.variant) << ", " << lexicon.num_classes()
      << " classes\n";

  auto result = Fit(split.train, split.eval, lexicon, words ? &*words : nullptr,
                    segmenter.get(), cfg, [&out](const HistoryRow &row) {
                      out << "epoch " << row.epoch << "  lr " << row.lr << "  loss "
                          << std::fixed << std::setprecision(4) << row.loss << "  eval_acc "
                          << row.eval_acc << std::defaultfloat << '\n';
                    });
  SaveCheckpoint(result.best, o.out);
  const std::string history = o.history.empty() ? o.out + ".history.jsonl" : o.history;
  WriteHistory(history, result.history);
  out << "best epoch " << result.best_epoch << ", eval accuracy " << result.best_eval_accuracy
      << "\nwrote " << o.out << " and " << history << '\n';
  return kExitOk;
}

int RunEval(const Options &o, std::ostream &out) {
  const Model model = LoadCheckpoint(o.checkpoint);
  const Lexicon lexicon = LoadLexicon(o.lexicon);
  if (lexicon.inventory() != model.pinyins) {
    throw ConfigError("lexicon pinyin inventory differs from the checkpoint's");
  }
  const auto words = MaybeLoadWords(o.wordvec, model.variant());
  const auto segmenter = MaybeLoadSegmenter(o.segdict);
  const WordVecStore *store = UsesWordCondition(model.variant()) ? &*words : nullptr;

  const auto samples = LoadCorpus(o.corpus, lexicon);
  const auto encoded = EncodeSamples(samples, model.vocab, store, segmenter.get());
  std::vector<EncodedSample> reference;
  if (!o.train_corpus.empty()) {
    reference = EncodeSamples(LoadCorpus(o.train_corpus, lexicon), model.vocab, nullptr);
  }
  const EvalReport report = EvaluateAccuracy(model, store, encoded, reference);
  out << ReportToTable(report);
  if (!o.json.empty()) {
    std::ofstream js(o.json, std::ios::binary | std::ios::trunc);
    if (!js) throw FormatError("cannot write " + o.json);
    js << ReportToJson(report) << '\n';
  }
  return kExitOk;
}

int RunPredict(const Options &o, std::ostream &out) {
  Model model = LoadCheckpoint(o.checkpoint);
  const Variant variant = model.variant();
  Disambiguator d(std::move(model), LoadLexicon(o.lexicon), MaybeLoadWords(o.wordvec, variant),
                  MaybeLoadSegmenter(o.segdict));
  const auto r = d.Predict(DecodeUtf8(o.text), o.index, o.restrict);
  out << EncodeUtf8(r.character) << '\t' << r.chosen << (r.restricted ? "\t(restricted)" : "")
      << '\n';
  for (const auto &c : r.candidates) {
    out << "  " << c.pinyin << '\t' << std::fixed << std::setprecision(4) << c.probability
        << std::defaultfloat << '\n';
  }
  return kExitOk;
}

int RunBaseline(const Options &o, std::ostream &out) {
  const Lexicon lexicon = LoadLexicon(o.lexicon);
  auto samples = LoadCorpus(o.corpus, lexicon);
  Split split;
  if (!o.eval_corpus.empty()) {
    split.train = std::move(samples);
    split.eval = LoadCorpus(o.eval_corpus, lexicon);
  } else {
    split = SplitDataset(samples, SplitRule{}, o.seed);
  }
  out << BaselineToTable(MajorityBaseline(split.train, split.eval, lexicon));
  return kExitOk;
}

int RunGradCheck(const Options &o, std::ostream &out) {
  std::vector<Variant> variants;
  if (o.gc_variant == "all") {
    variants = {Variant::kCW, Variant::kCC, Variant::kCWC};
  } else {
    variants = {ParseVariant(o.gc_variant)};
  }
  GradCheckOptions opts;
  opts.seed = o.seed;
  ModelDims dims = GradCheckDims();
  if (o.full) {
    dims = ModelDims{};
    dims.num_classes = 12;
    opts.max_entries_per_tensor = 20;
  }
  double worst = 0.0;
  for (Variant v : variants) {
    const auto report = CheckModelGradients(v, dims, o.seed, opts);
    out << VariantName(v) << "\tmax rel. error " << std::scientific << std::setprecision(3)
        << report.max_rel_error << std::defaultfloat << '\n';
    worst = std::max(worst, report.max_rel_error);
  }
  out << "max rel. error " << std::scientific << std::setprecision(3) << worst
      << std::defaultfloat << (worst < kGradCheckTolerance ? "  ok" : "  FAILED") << '\n';
  return worst < kGradCheckTolerance ? kExitOk : kExitDataError;
}

}  // namespace

int CliMain(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Polyphonic character disambiguation for Mandarin text", "polyphone"};
  app.require_subcommand(1);
  Options o;
  const std::vector<std::string> variants{"cw", "cc", "cwc"};

  auto *train = app.add_subcommand("train", "Train a model and write a checkpoint");
  train->add_option("--corpus", o.corpus, "Annotated corpus (JSONL)")->required();
  train->add_option("--lexicon", o.lexicon, "Lexicon (TSV)")->required();
  train->add_option("--variant", o.variant, "cw, cc or cwc")
      ->required()
      ->check(CLI::IsMember(variants, CLI::ignore_case));
  train->add_option("--config", o.config, "Training config (JSON)");
  train->add_option("--out", o.out, "Checkpoint to write")->required();
  train->add_option("--wordvec", o.wordvec, "Word vectors (word2vec text)");
  train->add_option("--segdict", o.segdict, "Segmenter word list");
  train->add_option("--eval-corpus", o.eval_corpus,
                    "Held-out corpus; without it the corpus is split 7%/20%");
  train->add_option("--history", o.history, "History JSONL (default <out>.history.jsonl)");

  auto *eval = app.add_subcommand("eval", "Accuracy report for a checkpoint");
  eval->add_option("--checkpoint", o.checkpoint)->required();
  eval->add_option("--corpus", o.corpus)->required();
  eval->add_option("--lexicon", o.lexicon)->required();
  eval->add_option("--wordvec", o.wordvec);
  eval->add_option("--segdict", o.segdict);
  eval->add_option("--train-corpus", o.train_corpus,
                   "Training corpus for the high-frequency pinyin column");
  eval->add_option("--json", o.json, "Also write the report as JSON");

  auto *predict = app.add_subcommand("predict", "Predict the pinyin of one character");
  predict->add_option("--checkpoint", o.checkpoint)->required();
  predict->add_option("--text", o.text)->required();
  predict->add_option("--index", o.index, "0-based character position")->required();
  predict->add_flag("--restrict", o.restrict, "Choose among the lexicon candidates only");
  predict->add_option("--lexicon", o.lexicon)->required();
  predict->add_option("--wordvec", o.wordvec);
  predict->add_option("--segdict", o.segdict);

  auto *baseline = app.add_subcommand("baseline", "Majority-pinyin baseline");
  baseline->add_option("--corpus", o.corpus)->required();
  baseline->add_option("--lexicon", o.lexicon)->required();
  baseline->add_option("--eval-corpus", o.eval_corpus);
  baseline->add_option("--seed", o.seed, "Split seed");

  auto *gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  gradcheck->add_option("--variant", o.gc_variant, "cw, cc, cwc or all")
      ->check(CLI::IsMember({"cw", "cc", "cwc", "all"}, CLI::ignore_case));
  gradcheck->add_flag("--full", o.full, "Default layer sizes, sampled entries");
  gradcheck->add_option("--seed", o.seed);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError &e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (train->parsed()) return RunTrain(o, out);
    if (eval->parsed()) return RunEval(o, out);
    if (predict->parsed()) return RunPredict(o, out);
    if (baseline->parsed()) return RunBaseline(o, out);
    if (gradcheck->parsed()) return RunGradCheck(o, out);
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kExitDataError;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace polyphone
