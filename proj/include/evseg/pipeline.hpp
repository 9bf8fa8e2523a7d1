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

#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "evseg/closure.hpp"
#include "evseg/corpus.hpp"
#include "evseg/corpus_io.hpp"
#include "evseg/encoder.hpp"
#include "evseg/error.hpp"
#include "evseg/eventseg.hpp"
#include "evseg/hash.hpp"
#include "evseg/inference.hpp"
#include "evseg/joint_model.hpp"
#include "evseg/rectifier.hpp"
#include "evseg/subgraph.hpp"
#include "evseg/training.hpp"

#ifndef EVSEG_VERSION
#define EVSEG_VERSION "0.0.0"
#endif

namespace evseg {

namespace fs = std::filesystem;

inline constexpr const char* kVersion = EVSEG_VERSION;

// Reads `key` into `value` when present, mapping JSON type errors to config
// errors.
template <typename T>
void read_option(const nlohmann::json& j, const char* key, T& value) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  try {
    value = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kConfig, std::string("option '") + key + "': " + e.what());
  }
}

inline nlohmann::ordered_json mining_to_json(const MiningConfig& c) {
  return {{"neg_ratio", c.neg_ratio}, {"triple_cap", c.triple_cap}, {"seed", c.seed}};
}

inline MiningConfig mining_from_json(const nlohmann::json& j) {
  MiningConfig c;
  read_option(j, "neg_ratio", c.neg_ratio);
  read_option(j, "triple_cap", c.triple_cap);
  read_option(j, "seed", c.seed);
  if (c.neg_ratio < 0) throw Error(ErrorKind::kConfig, "neg_ratio must be non-negative");
  return c;
}

inline nlohmann::ordered_json constraint_train_to_json(const ConstraintTrainConfig& c) {
  return {{"k", c.k},
          {"lr", c.lr},
          {"epochs", c.max_epochs},
          {"batch_size", c.batch_size},
          {"holdout_fraction", c.holdout_fraction},
          {"seed", c.seed}};
}

inline ConstraintTrainConfig constraint_train_from_json(const nlohmann::json& j) {
  ConstraintTrainConfig c;
  read_option(j, "k", c.k);
  read_option(j, "lr", c.lr);
  read_option(j, "epochs", c.max_epochs);
  read_option(j, "batch_size", c.batch_size);
  read_option(j, "holdout_fraction", c.holdout_fraction);
  read_option(j, "seed", c.seed);
  if (c.k == 0) throw Error(ErrorKind::kConfig, "k must be positive");
  if (c.lr <= 0) throw Error(ErrorKind::kConfig, "lr must be positive");
  if (c.holdout_fraction < 0 || c.holdout_fraction >= 1) {
    throw Error(ErrorKind::kConfig, "holdout_fraction must lie in [0, 1)");
  }
  return c;
}

struct EncoderConfig {
  std::string type = "builtin";  // builtin | external
  BuiltinEncoderConfig builtin;

  nlohmann::ordered_json to_json() const {
    return {{"type", type},
            {"hash_dim", builtin.hash_dim},
            {"window", builtin.window},
            {"seed", builtin.seed}};
  }

  static EncoderConfig from_json(const nlohmann::json& j) {
    EncoderConfig c;
    read_option(j, "type", c.type);
    read_option(j, "hash_dim", c.builtin.hash_dim);
    read_option(j, "window", c.builtin.window);
    read_option(j, "seed", c.builtin.seed);
    if (c.type != "builtin" && c.type != "external") {
      throw Error(ErrorKind::kConfig, "encoder type must be 'builtin' or 'external', got '" + c.type + "'");
    }
    return c;
  }
};

inline std::unique_ptr<PairEncoder> make_encoder(const EncoderConfig& cfg,
                                                 const std::optional<fs::path>& embeddings) {
  if (cfg.type == "builtin") return std::make_unique<BuiltinEncoder>(cfg.builtin);
  if (!embeddings) throw Error(ErrorKind::kConfig, "external encoder needs an embeddings file");
  return std::make_unique<ExternalEncoder>(read_embeddings(*embeddings));
}

struct RunConfig {
  std::uint64_t seed = 0;
  fs::path corpus;
  std::optional<fs::path> constraints;  // used instead of learning when set
  std::optional<fs::path> embeddings;
  fs::path output_dir = "run";
  double test_fraction = 0.20;
  MiningConfig mining;
  ConstraintTrainConfig constraint_training;
  EncoderConfig encoder;
  JointTrainConfig training;
  double threshold = 0.5;
  std::size_t eval_window = 0;
  bool pairs_tsv = false;

  // Stage seeds all follow the global seed.
  void apply_seed(std::uint64_t s) {
    seed = s;
    mining.seed = s;
    constraint_training.seed = s;
    training.seed = s;
  }

  void validate() const {
    if (corpus.empty()) throw Error(ErrorKind::kConfig, "paths.corpus is required");
    if (test_fraction < 0 || test_fraction > 1) throw Error(ErrorKind::kConfig, "test_fraction must lie in [0, 1]");
    if (threshold < 0 || threshold > 1) throw Error(ErrorKind::kConfig, "threshold must lie in [0, 1]");
    training.validate();
    if (constraints && !fs::exists(*constraints)) {
      throw Error(ErrorKind::kConfig, "constraint file '" + constraints->string() + "' does not exist");
    }
    if (encoder.type == "external" && !embeddings) {
      throw Error(ErrorKind::kConfig, "encoder type 'external' requires paths.embeddings");
    }
  }

  nlohmann::ordered_json to_json() const {
    auto opt = [](const std::optional<fs::path>& p) {
      return p ? nlohmann::ordered_json(p->generic_string()) : nlohmann::ordered_json(nullptr);
    };
    return {{"seed", seed},
            {"paths",
             {{"corpus", corpus.generic_string()},
              {"constraints", opt(constraints)},
              {"embeddings", opt(embeddings)},
              {"output_dir", output_dir.generic_string()}}},
            {"split", {{"test_fraction", test_fraction}, {"dev_fraction", training.dev_fraction}}},
            {"mining", mining_to_json(mining)},
            {"constraints", constraint_train_to_json(constraint_training)},
            {"encoder", encoder.to_json()},
            {"train", training.to_json()},
            {"infer", {{"threshold", threshold}}},
            {"eval", {{"window", eval_window}, {"pairs_tsv", pairs_tsv}}}};
  }

  // Hash of the resolved configuration, independent of the output
  // location.
  std::string hash() const {
    auto j = to_json();
    j["paths"].erase("output_dir");
    return sha256_hex(nlohmann::json(j).dump());
  }

  // Relative paths are taken relative to `base`.
  static RunConfig from_json(const nlohmann::json& j, const fs::path& base = {}) {
    if (!j.is_object()) throw Error(ErrorKind::kConfig, "run config must be a JSON object");
    RunConfig c;
    auto resolve = [&](const std::string& p) {
      fs::path path(p);
      return path.is_absolute() || base.empty() ? path : base / path;
    };
    std::uint64_t seed = 0;
    read_option(j, "seed", seed);
    if (j.contains("paths")) {
      const auto& p = j.at("paths");
      std::string s;
      if (p.contains("corpus")) {
        read_option(p, "corpus", s);
        c.corpus = resolve(s);
      }
      if (p.contains("constraints") && !p.at("constraints").is_null()) {
        read_option(p, "constraints", s);
        c.constraints = resolve(s);
      }
      if (p.contains("embeddings") && !p.at("embeddings").is_null()) {
        read_option(p, "embeddings", s);
        c.embeddings = resolve(s);
      }
      if (p.contains("output_dir")) {
        read_option(p, "output_dir", s);
        c.output_dir = resolve(s);
      }
    }
    if (j.contains("split")) read_option(j.at("split"), "test_fraction", c.test_fraction);
    if (j.contains("mining")) c.mining = mining_from_json(j.at("mining"));
    if (j.contains("constraints")) c.constraint_training = constraint_train_from_json(j.at("constraints"));
    if (j.contains("encoder")) c.encoder = EncoderConfig::from_json(j.at("encoder"));
    nlohmann::json train = j.value("train", nlohmann::json::object());
    if (j.contains("split") && j.at("split").contains("dev_fraction")) {
      train["dev_fraction"] = j.at("split").at("dev_fraction");
    }
    c.training = JointTrainConfig::from_json(train);
    if (j.contains("infer")) read_option(j.at("infer"), "threshold", c.threshold);
    if (j.contains("eval")) {
      read_option(j.at("eval"), "window", c.eval_window);
      read_option(j.at("eval"), "pairs_tsv", c.pairs_tsv);
    }
    c.apply_seed(seed);
    return c;
  }
};

inline RunConfig load_run_config(const fs::path& path) {
  return RunConfig::from_json(read_json_file(path), path.parent_path());
}

// Metadata line or field attached to every artifact.
inline nlohmann::ordered_json artifact_meta(const std::string& stage, std::uint64_t seed,
                                            const std::string& config_hash) {
  return {{"stage", stage}, {"seed", seed}, {"config_hash", config_hash}, {"version", kVersion}};
}

// Writes through a ".partial" sibling that is renamed into place only after
// `write` succeeds; on failure the partial file is left behind.
inline void write_atomically(const fs::path& path, const std::function<void(std::ostream&)>& write) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path partial = path;
  partial += ".partial";
  {
    std::ofstream out(partial, std::ios::binary);
    if (!out) throw Error(ErrorKind::kIo, "cannot write '" + partial.string() + "'");
    write(out);
    out.flush();
    if (!out) throw Error(ErrorKind::kIo, "failed writing '" + partial.string() + "'");
  }
  fs::rename(partial, path);
}

inline void write_json_file(const fs::path& path, const nlohmann::ordered_json& j) {
  write_atomically(path, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
}

// Stage operations shared by the pipeline and the single-stage commands.
namespace stages {

inline Corpus ingest(const fs::path& path, double test_fraction) {
  Corpus c = parse_corpus(path);
  c.test_fraction = test_fraction;
  validate(c);
  return c;
}

inline std::vector<Document> test_documents(const Corpus& corpus) {
  return {corpus.documents.begin() + static_cast<std::ptrdiff_t>(corpus.split_index()),
          corpus.documents.end()};
}

inline std::vector<DocumentPrediction> infer(const JointModel& model, const PairEncoder& encoder,
                                             const std::vector<Document>& docs, double threshold) {
  ModelScorer scorer(model, encoder);
  return predict_corpus(scorer, docs, threshold);
}

inline void write_predictions(std::ostream& out, const std::vector<DocumentPrediction>& pred,
                              const std::vector<Document>& docs, const nlohmann::ordered_json& meta) {
  if (!meta.is_null()) out << nlohmann::ordered_json{{"meta", meta}}.dump() << '\n';
  for (std::size_t d = 0; d < pred.size(); ++d) out << prediction_to_json(pred[d], docs[d]).dump() << '\n';
}

// Predictions are matched to `docs` by document id.
inline std::vector<DocumentPrediction> read_predictions(const fs::path& path,
                                                        const std::vector<Document>& docs) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open '" + path.string() + "'");
  std::map<std::string, nlohmann::json> by_id;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(lineno, e.what());
    }
    if (j.contains("meta") && !j.contains("id")) continue;
    if (!j.contains("id")) throw ParseError(lineno, "prediction line without \"id\"");
    auto id = j.at("id").get<std::string>();
    by_id[id] = std::move(j);
  }
  std::vector<DocumentPrediction> out;
  for (const auto& doc : docs) {
    auto it = by_id.find(doc.id);
    if (it == by_id.end()) throw Error(ErrorKind::kValidation, "no prediction for document '" + doc.id + "'");
    out.push_back(prediction_from_json(it->second, doc));
  }
  if (by_id.size() != docs.size()) {
    throw Error(ErrorKind::kValidation, "predictions name documents outside the evaluated split");
  }
  return out;
}

}  // namespace stages

struct StageRecord {
  std::string name;
  std::string artifact;  // file name inside the output directory
  std::string sha256;
  std::string key;       // hash of config and upstream artifacts
};

struct Manifest {
  std::string version = kVersion;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<StageRecord> stages;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json s = nlohmann::ordered_json::array();
    for (const auto& r : stages) {
      s.push_back({{"name", r.name}, {"artifact", r.artifact}, {"sha256", r.sha256}, {"key", r.key}});
    }
    return {{"version", version}, {"config_hash", config_hash}, {"seed", seed}, {"stages", s}};
  }

  static Manifest from_json(const nlohmann::json& j) {
    Manifest m;
    m.version = j.value("version", "");
    m.config_hash = j.value("config_hash", "");
    m.seed = j.value("seed", std::uint64_t{0});
    for (const auto& s : j.value("stages", nlohmann::json::array())) {
      m.stages.push_back({s.at("name").get<std::string>(), s.at("artifact").get<std::string>(),
                          s.at("sha256").get<std::string>(), s.at("key").get<std::string>()});
    }
    return m;
  }

  const StageRecord* find(const std::string& name) const {
    for (const auto& r : stages) {
      if (r.name == name) return &r;
    }
    return nullptr;
  }
};

inline constexpr const char* kManifestName = "manifest.json";

struct RunResult {
  Manifest manifest;
  std::vector<std::string> skipped;  // stages reused from a previous run
  nlohmann::json metrics;
};

class Pipeline {
 public:
  explicit Pipeline(RunConfig cfg, std::ostream* log = &std::clog)
      : cfg_(std::move(cfg)), log_(log) {}

  RunResult run() {
    cfg_.validate();
    const fs::path dir = cfg_.output_dir;
    fs::create_directories(dir);
    const std::string config_hash = cfg_.hash();
    if (fs::exists(dir / kManifestName)) {
      try {
        previous_ = Manifest::from_json(read_json_file(dir / kManifestName));
      } catch (const std::exception&) {
        previous_.reset();
      }
    }
    result_ = {};
    result_.manifest.config_hash = config_hash;
    result_.manifest.seed = cfg_.seed;
    const auto& c = cfg_;
    auto meta = [&](const char* stage) { return artifact_meta(stage, c.seed, config_hash); };

    run_stage("ingest", "01_ingest.jsonl", {sha256_file(c.corpus)}, [&](const fs::path& out) {
      auto corpus = stages::ingest(c.corpus, c.test_fraction);
      write_atomically(out, [&](std::ostream& o) { write_corpus(o, corpus, meta("ingest")); });
    });
    run_stage("closure", "02_closure.jsonl", {artifact_hash("ingest")}, [&](const fs::path& out) {
      auto corpus = transitive_closure(load_corpus("ingest"));
      write_atomically(out, [&](std::ostream& o) { write_corpus(o, corpus, meta("closure")); });
    });
    run_stage("label-seg", "03_label_seg.jsonl", {artifact_hash("closure")}, [&](const fs::path& out) {
      auto corpus = label_segments(load_corpus("closure"));
      write_atomically(out, [&](std::ostream& o) { write_corpus(o, corpus, meta("label-seg")); });
    });
    run_stage("mine-subgraphs", "04_subgraphs.jsonl", {artifact_hash("label-seg")},
              [&](const fs::path& out) {
                auto examples = mine_training_examples(load_corpus("label-seg"), c.mining);
                write_atomically(out, [&](std::ostream& o) {
                  write_examples(o, examples, meta("mine-subgraphs"));
                });
              });
    std::vector<std::string> constraint_inputs{artifact_hash("mine-subgraphs")};
    if (c.constraints) constraint_inputs.push_back(sha256_file(*c.constraints));
    run_stage("learn-constraints", "05_constraints.json", constraint_inputs, [&](const fs::path& out) {
      nlohmann::ordered_json header = meta("learn-constraints");
      ConstraintSet set;
      if (c.constraints) {
        set = load_constraints(*c.constraints);
        header["source"] = c.constraints->generic_string();
      } else {
        auto examples = read_examples(artifact_path("mine-subgraphs"));
        auto trained = train(examples, c.constraint_training);
        set = extract_constraints(trained.net);
        header["training"] = constraint_train_to_json(c.constraint_training);
        header["optimizer"] = trained.optimizer.to_json();
        header["best_epoch"] = trained.best_epoch;
        header["holdout_accuracy"] = trained.holdout_accuracy;
        header["examples"] = examples.size();
      }
      write_json_file(out, constraints_to_json(set, header));
    });

    std::vector<std::string> train_inputs{artifact_hash("label-seg"), artifact_hash("learn-constraints")};
    if (c.embeddings) train_inputs.push_back(sha256_file(*c.embeddings));
    std::unique_ptr<PairEncoder> encoder;
    auto get_encoder = [&]() -> const PairEncoder& {
      if (!encoder) encoder = make_encoder(c.encoder, c.embeddings);
      return *encoder;
    };
    run_stage("train", "06_model.json", train_inputs, [&](const fs::path& out) {
      auto corpus = load_corpus("label-seg");
      const auto& enc = get_encoder();
      if (auto* ext = dynamic_cast<const ExternalEncoder*>(&enc)) ext->check_coverage(corpus);
      std::optional<RectifierNet> net;
      if (c.training.lambda3 > 0) net = to_network(load_constraints(artifact_path("learn-constraints")));
      auto trained = train_joint(corpus, net ? &*net : nullptr, enc, c.training);
      nlohmann::ordered_json extra = meta("train");
      extra["train_config"] = c.training.to_json();
      extra["encoder"] = enc.describe();
      extra["best_epoch"] = trained.best_epoch;
      extra["best_dev_f1"] = trained.best_dev_f1;
      extra["dev_f1"] = trained.dev_f1;
      write_json_file(out, model_to_json(trained.model, extra));
    });
    run_stage("infer", "07_predictions.jsonl", {artifact_hash("label-seg"), artifact_hash("train")},
              [&](const fs::path& out) {
                auto docs = stages::test_documents(load_corpus("label-seg"));
                auto model = model_from_json(read_json_file(artifact_path("train")));
                auto pred = stages::infer(model, get_encoder(), docs, c.threshold);
                write_atomically(out, [&](std::ostream& o) {
                  stages::write_predictions(o, pred, docs, meta("infer"));
                });
              });
    run_stage("eval", "08_metrics.json", {artifact_hash("label-seg"), artifact_hash("infer")},
              [&](const fs::path& out) {
                auto docs = stages::test_documents(load_corpus("label-seg"));
                auto pred = stages::read_predictions(artifact_path("infer"), docs);
                auto report = evaluate(pred, docs, c.eval_window);
                nlohmann::ordered_json j = report.to_json();
                j["meta"] = meta("eval");
                write_json_file(out, j);
                if (c.pairs_tsv) {
                  write_atomically(dir / "08_pairs.tsv",
                                   [&](std::ostream& o) { write_pair_tsv(o, pred, docs); });
                }
              });
    result_.metrics = read_json_file(artifact_path("eval"));
    return result_;
  }

 private:
  fs::path artifact_path(const std::string& stage) const {
    for (const auto& r : result_.manifest.stages) {
      if (r.name == stage) return fs::path(cfg_.output_dir) / r.artifact;
    }
    throw Error(ErrorKind::kPrecondition, "stage '" + stage + "' has not run");
  }

  std::string artifact_hash(const std::string& stage) const {
    for (const auto& r : result_.manifest.stages) {
      if (r.name == stage) return r.sha256;
    }
    throw Error(ErrorKind::kPrecondition, "stage '" + stage + "' has not run");
  }

  Corpus load_corpus(const std::string& stage) const {
    Corpus c = parse_corpus(artifact_path(stage));
    c.test_fraction = cfg_.test_fraction;
    return c;
  }

  void run_stage(const std::string& name, const std::string& artifact,
                 const std::vector<std::string>& inputs,
                 const std::function<void(const fs::path&)>& body) {
    Sha256 key_hash;
    key_hash.update(name).update("\n").update(result_.manifest.config_hash);
    for (const auto& in : inputs) key_hash.update("\n").update(in);
    StageRecord rec{name, artifact, "", key_hash.hex()};
    const fs::path path = fs::path(cfg_.output_dir) / artifact;

    if (previous_) {
      const auto* old = previous_->find(name);
      if (old && old->key == rec.key && old->artifact == artifact && fs::exists(path) &&
          sha256_file(path) == old->sha256) {
        rec.sha256 = old->sha256;
        finish(rec);
        result_.skipped.push_back(name);
        if (log_) *log_ << "[" << name << "] up to date, skipped\n";
        return;
      }
    }
    const auto start = std::chrono::steady_clock::now();
    try {
      body(path);
    } catch (const Error& e) {
      throw Error(e.kind(), "stage '" + name + "' failed: " + e.message());
    } catch (const std::exception& e) {
      throw Error(ErrorKind::kIo, "stage '" + name + "' failed: " + e.what());
    }
    rec.sha256 = sha256_file(path);
    finish(rec);
    if (log_) {
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      *log_ << "[" << name << "] wrote " << artifact << " (" << secs << " s)\n";
    }
  }

  void finish(const StageRecord& rec) {
    result_.manifest.stages.push_back(rec);
    write_json_file(fs::path(cfg_.output_dir) / kManifestName, result_.manifest.to_json());
  }

  RunConfig cfg_;
  std::ostream* log_;
  std::optional<Manifest> previous_;
  RunResult result_;
};

inline RunResult run_pipeline(const RunConfig& cfg, std::ostream* log = &std::clog) {
  return Pipeline(cfg, log).run();
}

}  // namespace evseg
