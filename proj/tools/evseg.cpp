// Copyright 2026 The evseg Authors.
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

// Command-line driver: one subcommand per pipeline stage plus `synth` and
// the end-to-end `run`.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "evseg/evseg.hpp"

namespace {

namespace fs = std::filesystem;
using evseg::Error;
using evseg::ErrorKind;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  double test_fraction = 0.20;
};

nlohmann::json load_config(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  return evseg::read_json_file(path);
}

void write_corpus_file(const fs::path& out, const evseg::Corpus& corpus, const nlohmann::ordered_json& meta) {
  evseg::write_atomically(out, [&](std::ostream& o) { evseg::write_corpus(o, corpus, meta); });
}

nlohmann::ordered_json cli_meta(const std::string& stage, std::uint64_t seed, const nlohmann::json& config) {
  return evseg::artifact_meta(stage, seed, evseg::sha256_hex(config.dump()));
}

evseg::Corpus read_corpus(const std::string& path, double test_fraction) {
  return evseg::stages::ingest(path, test_fraction);
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Subevent relation extraction with learned structural constraints"};
  app.set_version_flag("--version", std::string(evseg::kVersion));
  app.require_subcommand(1);
  Common common;
  app.add_option("--config", common.config, "JSON configuration file");
  app.add_option("--seed", common.seed, "Override the configured seed");
  app.add_option("--test-fraction", common.test_fraction, "Fraction of documents held out for testing")
      ->check(CLI::Range(0.0, 1.0));

  auto seed_or = [&](std::uint64_t fallback) { return common.seed.value_or(fallback); };

  // ingest
  std::string in_path, out_path;
  auto* ingest = app.add_subcommand("ingest", "Parse and validate a JSONL corpus");
  ingest->add_option("--corpus", in_path, "Input corpus")->required();
  ingest->add_option("--out", out_path, "Validated corpus")->required();
  ingest->callback([&] {
    auto corpus = read_corpus(in_path, common.test_fraction);
    write_corpus_file(out_path, corpus, cli_meta("ingest", seed_or(0), {{"test_fraction", common.test_fraction}}));
    std::cout << corpus.documents.size() << " documents\n";
  });

  auto* closure = app.add_subcommand("closure", "Complete relations under transitive closure");
  closure->add_option("--in", in_path, "Input corpus")->required();
  closure->add_option("--out", out_path, "Closed corpus")->required();
  closure->callback([&] {
    auto corpus = evseg::transitive_closure(read_corpus(in_path, common.test_fraction));
    write_corpus_file(out_path, corpus, cli_meta("closure", seed_or(0), nlohmann::json::object()));
  });

  bool print_stats = false;
  auto* label = app.add_subcommand("label-seg", "Derive EventSeg segmentations and same-segment labels");
  label->add_option("--in", in_path, "Closed corpus")->required();
  label->add_option("--out", out_path, "Segment-labeled corpus")->required();
  label->add_flag("--stats", print_stats, "Print within/across counts per relation");
  label->callback([&] {
    auto corpus = evseg::label_segments(read_corpus(in_path, common.test_fraction));
    write_corpus_file(out_path, corpus, cli_meta("label-seg", seed_or(0), nlohmann::json::object()));
    if (print_stats) {
      auto stats = evseg::compute_stats(corpus);
      for (auto r : evseg::kAllRelations) {
        std::cout << evseg::relation_name(r) << '\t' << stats[r].within << '\t' << stats[r].across << '\n';
      }
    }
  });

  evseg::MiningConfig mining;
  auto* mine = app.add_subcommand("mine-subgraphs", "Mine labeled three-event subgraph features");
  mine->add_option("--in", in_path, "Segment-labeled corpus")->required();
  mine->add_option("--out", out_path, "Examples JSONL")->required();
  mine->add_option("--neg-ratio", mining.neg_ratio, "Negatives per positive")->check(CLI::NonNegativeNumber);
  mine->add_option("--triple-cap", mining.triple_cap, "Maximum triples per document");
  mine->callback([&] {
    auto cfg = evseg::mining_from_json(load_config(common.config).value("mining", nlohmann::json::object()));
    if (mine->count("--neg-ratio")) cfg.neg_ratio = mining.neg_ratio;
    if (mine->count("--triple-cap")) cfg.triple_cap = mining.triple_cap;
    cfg.seed = seed_or(cfg.seed);
    auto examples = evseg::mine_training_examples(read_corpus(in_path, common.test_fraction), cfg);
    evseg::write_atomically(out_path, [&](std::ostream& o) {
      evseg::write_examples(o, examples, evseg::artifact_meta("mine-subgraphs", cfg.seed,
                                                              evseg::sha256_hex(evseg::mining_to_json(cfg).dump())));
    });
    std::cout << examples.size() << " examples\n";
  });

  evseg::ConstraintTrainConfig ctrain;
  auto* learn = app.add_subcommand("learn-constraints", "Train the rectifier network and export its constraints");
  learn->add_option("--in", in_path, "Examples JSONL")->required();
  learn->add_option("--out", out_path, "Constraint file")->required();
  learn->add_option("--k", ctrain.k, "Number of constraints")->check(CLI::PositiveNumber);
  learn->add_option("--lr", ctrain.lr, "Learning rate")->check(CLI::PositiveNumber);
  learn->add_option("--epochs", ctrain.max_epochs, "Maximum epochs");
  learn->callback([&] {
    auto cfg = evseg::constraint_train_from_json(
        load_config(common.config).value("constraints", nlohmann::json::object()));
    if (learn->count("--k")) cfg.k = ctrain.k;
    if (learn->count("--lr")) cfg.lr = ctrain.lr;
    if (learn->count("--epochs")) cfg.max_epochs = ctrain.max_epochs;
    cfg.seed = seed_or(cfg.seed);
    auto examples = evseg::read_examples(fs::path(in_path));
    auto trained = evseg::train(examples, cfg);
    auto header = evseg::artifact_meta("learn-constraints", cfg.seed,
                                       evseg::sha256_hex(evseg::constraint_train_to_json(cfg).dump()));
    header["training"] = evseg::constraint_train_to_json(cfg);
    header["optimizer"] = trained.optimizer.to_json();
    header["best_epoch"] = trained.best_epoch;
    header["holdout_accuracy"] = trained.holdout_accuracy;
    header["examples"] = examples.size();
    evseg::write_json_file(out_path, evseg::constraints_to_json(evseg::extract_constraints(trained.net), header));
    std::cout << "held-out accuracy " << trained.holdout_accuracy << " at epoch " << trained.best_epoch << '\n';
  });

  std::string constraints_path, encoder_type = "builtin", embeddings_path;
  auto* train = app.add_subcommand("train", "Train the joint relation and segmentation model");
  train->add_option("--corpus", in_path, "Segment-labeled corpus")->required();
  train->add_option("--constraints", constraints_path, "Constraint file (required when lambda3 > 0)");
  train->add_option("--encoder", encoder_type, "Pair encoder")->check(CLI::IsMember({"builtin", "external"}));
  train->add_option("--embeddings", embeddings_path, "Embedding file for the external encoder");
  train->add_option("--out", out_path, "Model checkpoint")->required();
  train->callback([&] {
    auto config = load_config(common.config);
    auto tcfg = evseg::JointTrainConfig::from_json(config.value("train", nlohmann::json::object()));
    tcfg.seed = seed_or(tcfg.seed);
    auto ecfg = evseg::EncoderConfig::from_json(config.value("encoder", nlohmann::json::object()));
    if (train->count("--encoder")) ecfg.type = encoder_type;
    if (tcfg.lambda3 > 0 && constraints_path.empty()) {
      throw Error(ErrorKind::kConfig, "lambda3 > 0 requires --constraints");
    }
    std::optional<fs::path> emb;
    if (!embeddings_path.empty()) emb = embeddings_path;
    auto encoder = evseg::make_encoder(ecfg, emb);
    auto corpus = read_corpus(in_path, common.test_fraction);
    if (auto* ext = dynamic_cast<const evseg::ExternalEncoder*>(encoder.get())) ext->check_coverage(corpus);
    std::optional<evseg::RectifierNet> net;
    if (!constraints_path.empty()) net = evseg::to_network(evseg::load_constraints(constraints_path));
    auto trained = evseg::train_joint(corpus, net ? &*net : nullptr, *encoder, tcfg);
    nlohmann::json echo{{"train", tcfg.to_json()}, {"encoder", ecfg.to_json()}};
    auto extra = cli_meta("train", tcfg.seed, echo);
    extra["train_config"] = tcfg.to_json();
    extra["encoder"] = encoder->describe();
    extra["best_epoch"] = trained.best_epoch;
    extra["best_dev_f1"] = trained.best_dev_f1;
    extra["dev_f1"] = trained.dev_f1;
    evseg::write_json_file(out_path, evseg::model_to_json(trained.model, extra));
    std::cout << "best dev micro-F1 " << trained.best_dev_f1 << " at epoch " << trained.best_epoch << '\n';
  });

  std::string model_path;
  double threshold = 0.5;
  bool all_docs = false;
  auto* infer = app.add_subcommand("infer", "Predict relations and segmentations");
  infer->add_option("--corpus", in_path, "Segment-labeled corpus")->required();
  infer->add_option("--model", model_path, "Model checkpoint")->required();
  infer->add_option("--embeddings", embeddings_path, "Embedding file for an external-encoder model");
  infer->add_option("--threshold", threshold, "Same-segment probability below which a boundary is placed")
      ->check(CLI::Range(0.0, 1.0));
  infer->add_flag("--all", all_docs, "Predict every document instead of the test split");
  infer->add_option("--out", out_path, "Predictions JSONL")->required();
  infer->callback([&] {
    auto checkpoint = evseg::read_json_file(model_path);
    auto model = evseg::model_from_json(checkpoint);
    auto ecfg = evseg::EncoderConfig::from_json(
        checkpoint.contains("meta") ? checkpoint["meta"].value("encoder", nlohmann::json::object())
                                    : nlohmann::json::object());
    std::optional<fs::path> emb;
    if (!embeddings_path.empty()) emb = embeddings_path;
    auto encoder = evseg::make_encoder(ecfg, emb);
    auto corpus = read_corpus(in_path, common.test_fraction);
    auto docs = all_docs ? corpus.documents : evseg::stages::test_documents(corpus);
    auto pred = evseg::stages::infer(model, *encoder, docs, threshold);
    evseg::write_atomically(out_path, [&](std::ostream& o) {
      evseg::stages::write_predictions(o, pred, docs,
                                       cli_meta("infer", seed_or(0), {{"threshold", threshold}}));
    });
    std::cout << evseg::evaluate(pred, docs, 0).to_json().dump(2) << '\n';
  });

  std::string predictions_path, tsv_path;
  std::size_t window = 0;
  auto* eval = app.add_subcommand("eval", "Score predictions against the labeled corpus");
  eval->add_option("--corpus", in_path, "Segment-labeled corpus")->required();
  eval->add_option("--predictions", predictions_path, "Predictions JSONL")->required();
  eval->add_option("--window", window, "Boundary match tolerance in sentences");
  eval->add_flag("--all", all_docs, "Evaluate every document instead of the test split");
  eval->add_option("--pairs-tsv", tsv_path, "Per-pair TSV output");
  eval->add_option("--out", out_path, "Metrics JSON (stdout when omitted)");
  eval->callback([&] {
    auto corpus = read_corpus(in_path, common.test_fraction);
    auto docs = all_docs ? corpus.documents : evseg::stages::test_documents(corpus);
    auto pred = evseg::stages::read_predictions(predictions_path, docs);
    auto report = evseg::evaluate(pred, docs, window).to_json();
    if (out_path.empty()) {
      std::cout << report.dump(2) << '\n';
    } else {
      evseg::write_json_file(out_path, report);
    }
    if (!tsv_path.empty()) {
      evseg::write_atomically(tsv_path, [&](std::ostream& o) { evseg::write_pair_tsv(o, pred, docs); });
    }
  });

  std::size_t n_docs = 0;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic annotated corpus");
  synth->add_option("--n-docs", n_docs, "Number of documents (overrides the config)");
  synth->add_option("--out", out_path, "Corpus JSONL")->required();
  synth->callback([&] {
    auto config = load_config(common.config);
    auto gen = evseg::GenConfig::from_json(config.contains("synth") ? config["synth"] : config);
    if (synth->count("--n-docs")) gen.n_docs = n_docs;
    gen.seed = seed_or(gen.seed);
    auto corpus = evseg::generate_corpus(gen);
    write_corpus_file(out_path, corpus,
                      evseg::artifact_meta("synth", gen.seed, evseg::sha256_hex(gen.to_json().dump())));
    std::cout << corpus.documents.size() << " documents\n";
  });

  auto* run = app.add_subcommand("run", "Run every stage from a run configuration");
  run->callback([&] {
    if (common.config.empty()) throw Error(ErrorKind::kConfig, "run needs --config");
    auto cfg = evseg::load_run_config(common.config);
    if (common.seed) cfg.apply_seed(*common.seed);
    auto result = evseg::run_pipeline(cfg);
    std::cout << result.metrics.dump(2) << '\n';
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorKind::kConfig);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const Error& e) {
    std::cerr << "evseg: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "evseg: " << e.what() << '\n';
    return static_cast<int>(ErrorKind::kIo);
  }
}
