// tools/xpress.cpp

// Copyright 2026  Xpress Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "xpress/articulatory.hpp"
#include "xpress/data.hpp"
#include "xpress/dsp.hpp"
#include "xpress/error.hpp"
#include "xpress/features.hpp"
#include "xpress/metrics.hpp"
#include "xpress/models.hpp"
#include "xpress/nn.hpp"
#include "xpress/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace xpress;

namespace {

json default_config() {
  return json{
      {"seed", 1},
      {"frame",
       {{"window_ms", 25.0},
        {"hop_ms", 10.0},
        {"preemphasis", 0.97},
        {"fft_size", 512}}},
      {"filterbank",
       {{"n_filters", 40}, {"f_lo_hz", 50.0}, {"f_hi_hz", 7600.0}}},
      {"pitch",
       {{"f_min_hz", 60.0}, {"f_max_hz", 400.0}, {"voicing_threshold", 0.3}}},
      {"synth",
       {{"n", 2000},
        {"min_dur_s", 1.0},
        {"max_dur_s", 3.0},
        {"p_expressive", 0.35}}},
      {"split",
       {{"pretrain", 60.0}, {"balanced", 30.0}, {"dev", 4.0}, {"eval", 3.0}}},
      {"expression",
       {{"hidden", 128},
        {"embedding", 128},
        {"batch", 200},
        {"pretrain_lr", 1e-4},
        {"finetune_lr", 1e-2},
        {"pretrain_max_epochs", 20},
        {"finetune_max_epochs", 30},
        {"patience", 5},
        {"max_backoffs", 3}}},
      {"emotion",
       {{"hidden", 64},
        {"embedding", 64},
        {"batch", 300},
        {"lr", 0.01},
        {"max_epochs", 30},
        {"patience", 5},
        {"max_backoffs", 3}}},
      {"fusion",
       {{"hidden", -1},
        {"batch", 200},
        {"lr", 0.01},
        {"max_epochs", 60},
        {"patience", 5},
        {"max_backoffs", 3}}},
      {"inversion",
       {{"hidden", 128},
        {"n_train", 50},
        {"cv_fraction", 0.15},
        {"lr", 0.002},
        {"batch", 8},
        {"max_epochs", 60},
        {"patience", 5},
        {"max_backoffs", 3}}},
  };
}

// Applies "a.b.c=value" onto the config document; the value is parsed as a
// JSON literal when possible, else taken as a string.
void apply_override(json &config, const std::string &kv) {
  auto eq = kv.find('=');
  if (eq == std::string::npos)
    Throw(ErrorCode::BadConfig, "override must be key=value, got " + kv);
  std::string key = kv.substr(0, eq);
  std::string value = kv.substr(eq + 1);
  json *node = &config;
  std::stringstream ss(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  if (parts.empty()) Throw(ErrorCode::BadConfig, "empty override key");
  for (size_t i = 0; i + 1 < parts.size(); ++i) node = &(*node)[parts[i]];
  json parsed = json::parse(value, nullptr, false);
  (*node)[parts.back()] = parsed.is_discarded() ? json(value) : parsed;
}

struct GlobalOpts {
  std::string config_path;
  std::vector<std::string> overrides;
  int64_t seed = -1;
  json resolved;

  void resolve() {
    resolved = default_config();
    if (!config_path.empty()) {
      std::ifstream is(config_path);
      if (!is) Throw(ErrorCode::IoError, "cannot open config " + config_path);
      json file_cfg;
      is >> file_cfg;
      resolved.merge_patch(file_cfg);
    }
    for (const std::string &kv : overrides) apply_override(resolved, kv);
    if (seed >= 0) resolved["seed"] = seed;
  }
};

FrameSpec frame_spec_from(const json &cfg) {
  FrameSpec spec;
  spec.window_ms = cfg.at("frame").at("window_ms").get<double>();
  spec.hop_ms = cfg.at("frame").at("hop_ms").get<double>();
  spec.preemphasis = cfg.at("frame").at("preemphasis").get<double>();
  spec.fft_size = cfg.at("frame").at("fft_size").get<int>();
  return spec;
}

FilterbankSpec filterbank_from(const json &cfg, FilterbankKind kind) {
  FilterbankSpec fb;
  fb.kind = kind;
  fb.n_filters = cfg.at("filterbank").at("n_filters").get<int>();
  fb.f_lo_hz = cfg.at("filterbank").at("f_lo_hz").get<double>();
  fb.f_hi_hz = cfg.at("filterbank").at("f_hi_hz").get<double>();
  return fb;
}

PitchSpec pitch_from(const json &cfg) {
  PitchSpec p;
  p.f_min_hz = cfg.at("pitch").at("f_min_hz").get<double>();
  p.f_max_hz = cfg.at("pitch").at("f_max_hz").get<double>();
  p.voicing_threshold = cfg.at("pitch").at("voicing_threshold").get<double>();
  return p;
}

void write_text(const std::string &path, const std::string &content) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) Throw(ErrorCode::IoError, "cannot write " + path);
  os << content;
  if (!os) Throw(ErrorCode::IoError, "short write to " + path);
}

void write_train_log(const std::string &path, const json &config,
                     const std::vector<EpochLog> &epochs) {
  std::ostringstream os;
  os.precision(17);
  os << "# config=" << config.dump() << "\n";
  os << "epoch,train_loss,cv_error,lr\n";
  for (const EpochLog &e : epochs)
    os << e.epoch << "," << e.train_loss << "," << e.cv_error << ","
       << e.learning_rate << "\n";
  write_text(path, os.str());
}

ScoredSet load_scores_csv(const std::string &path) {
  std::ifstream is(path);
  if (!is) Throw(ErrorCode::IoError, "cannot open " + path);
  ScoredSet set;
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (first && line.find("score") != std::string::npos) {
      first = false;
      continue;
    }
    first = false;
    auto comma = line.find(',');
    if (comma == std::string::npos)
      Throw(ErrorCode::IoError, "bad scores line: " + line);
    set.scores.push_back(std::stod(line.substr(0, comma)));
    set.labels.push_back(std::stoi(line.substr(comma + 1)) != 0);
  }
  if (set.scores.empty()) Throw(ErrorCode::IoError, "no scores in " + path);
  return set;
}

// Feature expression grammar: mfcc | gcc | nmcc | f0v | mfcc39 |
// concat:a,b[,c] with an optional "+tv" suffix (needs --inversion).
struct FeatureRequest {
  std::vector<std::string> parts;  // base extractors, in order
  bool append_tv = false;
};

FeatureRequest parse_feature_expr(std::string expr) {
  FeatureRequest req;
  const std::string tv_suffix = "+tv";
  if (expr.size() > tv_suffix.size() &&
      expr.compare(expr.size() - tv_suffix.size(), tv_suffix.size(),
                   tv_suffix) == 0) {
    req.append_tv = true;
    expr = expr.substr(0, expr.size() - tv_suffix.size());
  }
  if (expr.rfind("concat:", 0) == 0) {
    std::stringstream ss(expr.substr(7));
    std::string part;
    while (std::getline(ss, part, ',')) req.parts.push_back(part);
  } else {
    req.parts.push_back(expr);
  }
  if (req.parts.empty())
    Throw(ErrorCode::BadConfig, "empty feature expression");
  for (const std::string &p : req.parts)
    if (p != "mfcc" && p != "gcc" && p != "nmcc" && p != "f0v" && p != "mfcc39")
      Throw(ErrorCode::BadConfig, "unknown feature '" + p + "'");
  return req;
}

FeatureMatrix extract_one(const AudioBuffer &audio, const FeatureRequest &req,
                          const json &cfg, const Checkpoint *inversion) {
  FrameSpec spec = frame_spec_from(cfg);
  FeatureMatrix out;
  bool have = false;
  for (const std::string &part : req.parts) {
    FeatureMatrix f;
    if (part == "mfcc") {
      f = mfcc(frame_power_spectrum(audio, spec),
               filterbank_from(cfg, FilterbankKind::MelTriangular));
    } else if (part == "gcc") {
      f = gcc(frame_power_spectrum(audio, spec),
              filterbank_from(cfg, FilterbankKind::GammatoneERB));
    } else if (part == "nmcc") {
      f = nmcc(audio, filterbank_from(cfg, FilterbankKind::GammatoneERB), spec);
    } else if (part == "f0v") {
      f = f0v(audio, spec, pitch_from(cfg));
    } else {  // mfcc39
      f = mfcc39(audio, spec,
                 filterbank_from(cfg, FilterbankKind::MelTriangular));
    }
    out = have ? concat(out, f) : f;
    have = true;
  }
  if (req.append_tv) {
    if (!inversion)
      Throw(ErrorCode::BadConfig, "+tv requires --inversion checkpoint");
    FeatureMatrix m39 = mfcc39(
        audio, spec, filterbank_from(cfg, FilterbankKind::MelTriangular));
    out = concat(out, estimate_tvs(m39, *inversion));
  }
  return out;
}

int extraction_threads() {
  const char *env = std::getenv("XPRS_THREADS");
  if (!env) return 1;
  int n = std::atoi(env);
  return n < 1 ? 1 : n;
}

LabelTable label_table(const std::vector<GradedQuery> &queries) {
  LabelTable out;
  for (const GradedQuery &q : queries) out[q.id] = label_query(q);
  return out;
}

FeatureTable load_features_for(const std::vector<std::string> &ids,
                               const std::string &dir) {
  FeatureTable out;
  for (const std::string &id : ids)
    out[id] = load_feat((fs::path(dir) / (id + ".feat")).string());
  return out;
}

std::vector<std::string> all_split_ids(const DatasetSplit &split) {
  std::vector<std::string> ids;
  ids.insert(ids.end(), split.pretrain.begin(), split.pretrain.end());
  ids.insert(ids.end(), split.balanced_train.begin(),
             split.balanced_train.end());
  ids.insert(ids.end(), split.dev.begin(), split.dev.end());
  ids.insert(ids.end(), split.eval.begin(), split.eval.end());
  return ids;
}

const std::vector<std::string> &subset_ids(const DatasetSplit &split,
                                           const std::string &name) {
  if (name == "pretrain") return split.pretrain;
  if (name == "balanced_train") return split.balanced_train;
  if (name == "dev") return split.dev;
  if (name == "eval") return split.eval;
  Throw(ErrorCode::BadConfig, "unknown subset '" + name + "'");
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"xpress: vocal expression detection pipeline"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--config", g.config_path, "JSON config file");
  app.add_option("--override", g.overrides,
                 "config override key=value (dotted path)");
  app.add_option("--seed", g.seed, "seed override");

  // --- synth
  auto *synth_cmd = app.add_subcommand("synth", "generate a synthetic corpus");
  std::string synth_out = "corpus";
  int synth_n = -1;
  synth_cmd->add_option("--out", synth_out, "output directory")->required();
  synth_cmd->add_option("--n", synth_n, "number of queries");

  // --- extract
  auto *extract_cmd =
      app.add_subcommand("extract", "extract features for a manifest");
  std::string ex_manifest, ex_out, ex_feature = "mfcc", ex_inversion;
  extract_cmd->add_option("--manifest", ex_manifest)->required();
  extract_cmd->add_option("--out", ex_out)->required();
  extract_cmd->add_option("--feature", ex_feature,
                          "mfcc|gcc|nmcc|f0v|mfcc39|concat:a,b[+tv]");
  extract_cmd->add_option("--inversion", ex_inversion,
                          "inversion checkpoint for +tv");

  // --- train-inversion
  auto *ti_cmd = app.add_subcommand(
      "train-inversion", "train the speech-inversion model on oracle data");
  std::string ti_out;
  ti_cmd->add_option("--out", ti_out)->required();

  // --- train-expr
  auto *te_cmd =
      app.add_subcommand("train-expr", "train the expression model");
  std::string te_manifest, te_split, te_features, te_out;
  te_cmd->add_option("--manifest", te_manifest)->required();
  te_cmd->add_option("--split", te_split)->required();
  te_cmd->add_option("--features", te_features)->required();
  te_cmd->add_option("--out", te_out)->required();

  // --- train-emo
  auto *tm_cmd = app.add_subcommand("train-emo", "train the emotion model");
  std::string tm_manifest, tm_split, tm_features, tm_out;
  tm_cmd->add_option("--manifest", tm_manifest)->required();
  tm_cmd->add_option("--split", tm_split)->required();
  tm_cmd->add_option("--features", tm_features)->required();
  tm_cmd->add_option("--out", tm_out)->required();

  // --- embed
  auto *em_cmd = app.add_subcommand("embed", "extract embeddings");
  std::string em_manifest, em_split, em_subset = "eval", em_features,
                                     em_checkpoint, em_out;
  em_cmd->add_option("--manifest", em_manifest)->required();
  em_cmd->add_option("--split", em_split)->required();
  em_cmd->add_option("--subset", em_subset,
                     "pretrain|balanced_train|dev|eval|all");
  em_cmd->add_option("--features", em_features)->required();
  em_cmd->add_option("--checkpoint", em_checkpoint)->required();
  em_cmd->add_option("--out", em_out)->required();

  // --- train-fusion
  auto *tf_cmd = app.add_subcommand("train-fusion", "train the fusion model");
  std::string tf_embeddings, tf_manifest, tf_split, tf_out;
  int tf_hidden = 0;
  tf_cmd->add_option("--embeddings", tf_embeddings,
                     "comma-separated embedding FEAT files")
      ->required();
  tf_cmd->add_option("--manifest", tf_manifest)->required();
  tf_cmd->add_option("--split", tf_split)->required();
  tf_cmd->add_option("--out", tf_out)->required();
  tf_cmd->add_option("--hidden", tf_hidden, "hidden layer width override");

  // --- eval
  auto *ev_cmd = app.add_subcommand("eval", "evaluate scores or a model");
  std::string ev_scores, ev_checkpoint, ev_features, ev_manifest, ev_split,
      ev_subset = "eval", ev_out;
  ev_cmd->add_option("--scores", ev_scores, "scores CSV (score,label)");
  ev_cmd->add_option("--checkpoint", ev_checkpoint);
  ev_cmd->add_option("--features", ev_features);
  ev_cmd->add_option("--manifest", ev_manifest);
  ev_cmd->add_option("--split", ev_split);
  ev_cmd->add_option("--subset", ev_subset);
  ev_cmd->add_option("--out", ev_out, "report JSON path (default stdout)");

  // --- roc
  auto *roc_cmd = app.add_subcommand("roc", "write ROC operating points");
  std::string roc_scores, roc_out;
  roc_cmd->add_option("--scores", roc_scores)->required();
  roc_cmd->add_option("--out", roc_out)->required();

  // --- gradcheck
  auto *gc_cmd = app.add_subcommand(
      "gradcheck", "finite-difference check of every architecture");

  for (CLI::App *sub : {synth_cmd, extract_cmd, ti_cmd, te_cmd, tm_cmd, em_cmd,
                        tf_cmd, ev_cmd, roc_cmd, gc_cmd})
    sub->fallthrough();

  try {
    app.parse(argc, argv);
    g.resolve();
    const json &cfg = g.resolved;
    uint64_t seed = cfg.at("seed").get<uint64_t>();

    if (synth_cmd->parsed()) {
      SynthConfig sc;
      sc.out_dir = synth_out;
      sc.seed = seed;
      sc.n = synth_n > 0 ? synth_n : cfg.at("synth").at("n").get<int>();
      sc.min_dur_s = cfg.at("synth").at("min_dur_s").get<double>();
      sc.max_dur_s = cfg.at("synth").at("max_dur_s").get<double>();
      sc.p_expressive = cfg.at("synth").at("p_expressive").get<double>();
      SynthResult result = synth_corpus(sc);

      auto filtered = filter_all_not_sure(result.queries);
      SplitRatios ratios;
      ratios.pretrain = cfg.at("split").at("pretrain").get<double>();
      ratios.balanced = cfg.at("split").at("balanced").get<double>();
      ratios.dev = cfg.at("split").at("dev").get<double>();
      ratios.eval = cfg.at("split").at("eval").get<double>();
      DatasetSplit split = make_splits(filtered, ratios, seed);
      save_split((fs::path(synth_out) / "split.json").string(), split);
      std::cout << "wrote " << result.manifest_path << " ("
                << result.queries.size() << " queries, "
                << filtered.size() << " after filtering)\n";
      return 0;
    }

    if (extract_cmd->parsed()) {
      FeatureRequest req = parse_feature_expr(ex_feature);
      Checkpoint inversion;
      bool have_inversion = false;
      if (!ex_inversion.empty()) {
        inversion = load_checkpoint(ex_inversion);
        have_inversion = true;
      }
      auto queries = load_manifest(ex_manifest);
      fs::create_directories(ex_out);

      int n_threads = extraction_threads();
      std::atomic<size_t> next{0};
      std::atomic<bool> failed{false};
      std::exception_ptr first_error;
      std::mutex err_mutex;
      auto worker = [&]() {
        while (true) {
          size_t i = next.fetch_add(1);
          if (i >= queries.size() || failed.load()) break;
          try {
            AudioBuffer audio = load_wav(
                resolve_audio_path(ex_manifest, queries[i].audio_path));
            FeatureMatrix f = extract_one(audio, req, cfg,
                                          have_inversion ? &inversion : nullptr);
            f.meta["config"] = cfg.dump();
            f.meta["query_id"] = queries[i].id;
            save_feat(
                (fs::path(ex_out) / (queries[i].id + ".feat")).string(), f);
          } catch (...) {
            std::lock_guard<std::mutex> lock(err_mutex);
            if (!failed.exchange(true)) first_error = std::current_exception();
          }
        }
      };
      if (n_threads <= 1) {
        worker();
      } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto &t : pool) t.join();
      }
      if (failed.load()) std::rethrow_exception(first_error);
      std::cout << "extracted " << queries.size() << " queries to " << ex_out
                << "\n";
      return 0;
    }

    if (ti_cmd->parsed()) {
      const json &icfg = cfg.at("inversion");
      InversionDataConfig dc;
      dc.n_utterances = icfg.at("n_train").get<int>();
      dc.seed = seed;
      auto dataset = make_inversion_dataset(dc);
      InversionTrainConfig tc;
      tc.hidden_dim = icfg.at("hidden").get<int>();
      tc.cv_fraction = icfg.at("cv_fraction").get<double>();
      tc.train.learning_rate = icfg.at("lr").get<double>();
      tc.train.batch_size = icfg.at("batch").get<int>();
      tc.train.max_epochs = icfg.at("max_epochs").get<int>();
      tc.train.patience = icfg.at("patience").get<int>();
      tc.train.max_backoffs = icfg.at("max_backoffs").get<int>();
      tc.train.seed = seed;
      Checkpoint ckpt = train_inversion(dataset, tc);
      ckpt.provenance["config"] = cfg;
      save_checkpoint(ti_out, ckpt);
      std::cout << "wrote " << ti_out << " (cv error "
                << ckpt.provenance.at("best_cv_error").get<double>() << ")\n";
      return 0;
    }

    if (te_cmd->parsed()) {
      auto queries = load_manifest(te_manifest);
      DatasetSplit split = load_split(te_split);
      LabelTable labels = label_table(queries);
      FeatureTable features = load_features_for(all_split_ids(split),
                                                te_features);
      const json &ecfg = cfg.at("expression");
      ExpressionTrainOptions opts;
      opts.hidden_dim = ecfg.at("hidden").get<int>();
      opts.embedding_dim = ecfg.at("embedding").get<int>();
      opts.batch_size = ecfg.at("batch").get<int>();
      opts.pretrain_lr = ecfg.at("pretrain_lr").get<double>();
      opts.finetune_lr = ecfg.at("finetune_lr").get<double>();
      opts.pretrain_max_epochs = ecfg.at("pretrain_max_epochs").get<int>();
      opts.finetune_max_epochs = ecfg.at("finetune_max_epochs").get<int>();
      opts.patience = ecfg.at("patience").get<int>();
      opts.max_backoffs = ecfg.at("max_backoffs").get<int>();
      opts.seed = seed;
      TrainedExpression trained =
          train_expression(features, labels, split.pretrain,
                           split.balanced_train, split.dev, opts);
      trained.checkpoint.provenance["config"] = cfg;
      save_checkpoint(te_out, trained.checkpoint);
      std::vector<EpochLog> log = trained.pretrain_log.epochs;
      log.insert(log.end(), trained.finetune_log.epochs.begin(),
                 trained.finetune_log.epochs.end());
      write_train_log(te_out + ".log.csv", cfg, log);
      std::cout << "wrote " << te_out << "\n";
      return 0;
    }

    if (tm_cmd->parsed()) {
      auto queries = load_manifest(tm_manifest);
      DatasetSplit split = load_split(tm_split);
      LabelTable labels = label_table(queries);
      FeatureTable features = load_features_for(all_split_ids(split),
                                                tm_features);
      const json &ecfg = cfg.at("emotion");
      EmotionTrainOptions opts;
      opts.hidden_dim = ecfg.at("hidden").get<int>();
      opts.embedding_dim = ecfg.at("embedding").get<int>();
      opts.batch_size = ecfg.at("batch").get<int>();
      opts.learning_rate = ecfg.at("lr").get<double>();
      opts.max_epochs = ecfg.at("max_epochs").get<int>();
      opts.patience = ecfg.at("patience").get<int>();
      opts.max_backoffs = ecfg.at("max_backoffs").get<int>();
      opts.seed = seed;
      TrainedEmotion trained =
          train_emotion(features, labels, split.pretrain, split.dev, opts);
      trained.checkpoint.provenance["config"] = cfg;
      save_checkpoint(tm_out, trained.checkpoint);
      write_train_log(tm_out + ".log.csv", cfg, trained.log.epochs);
      std::cout << "wrote " << tm_out << "\n";
      return 0;
    }

    if (em_cmd->parsed()) {
      auto queries = load_manifest(em_manifest);
      DatasetSplit split = load_split(em_split);
      std::vector<std::string> ids =
          em_subset == "all" ? all_split_ids(split)
                             : subset_ids(split, em_subset);
      Checkpoint ckpt = load_checkpoint(em_checkpoint);
      FeatureTable features = load_features_for(ids, em_features);

      FeatureMatrix rows;
      rows.kind = FeatureKind::Custom;
      bool first = true;
      std::ostringstream idlist;
      int r = 0;
      for (const std::string &id : ids) {
        std::vector<double> emb = extract_embedding(ckpt, features.at(id));
        if (first) {
          rows.data = Matrix(static_cast<int>(ids.size()),
                             static_cast<int>(emb.size()));
          first = false;
        }
        std::copy(emb.begin(), emb.end(), rows.data.row(r++));
        idlist << id << "\n";
      }
      std::string task = ckpt.arch.value("task", std::string());
      rows.meta["source"] = (task == "emotion" ? "ee:" : "ae:") +
                            ckpt.arch.value("feature", std::string("unknown"));
      rows.meta["config"] = cfg.dump();
      save_feat(em_out, rows);
      write_text(em_out + ".ids", idlist.str());
      std::cout << "wrote " << em_out << " (" << ids.size() << " x "
                << rows.data.cols << ")\n";
      return 0;
    }

    if (tf_cmd->parsed()) {
      auto queries = load_manifest(tf_manifest);
      DatasetSplit split = load_split(tf_split);
      LabelTable labels = label_table(queries);

      std::vector<EmbeddingSet> sources;
      std::stringstream ss(tf_embeddings);
      std::string path;
      while (std::getline(ss, path, ',')) {
        EmbeddingSet set;
        FeatureMatrix f = load_feat(path);
        set.rows = f.data;
        set.name = f.meta.count("source") ? f.meta.at("source") : path;
        std::ifstream ids_in(path + ".ids");
        if (!ids_in) Throw(ErrorCode::IoError, "cannot open " + path + ".ids");
        std::string id;
        while (std::getline(ids_in, id))
          if (!id.empty()) set.ids.push_back(id);
        sources.push_back(std::move(set));
      }

      const json &fcfg = cfg.at("fusion");
      FusionTrainOptions opts;
      opts.hidden_dim = tf_hidden > 0 ? tf_hidden : fcfg.at("hidden").get<int>();
      opts.batch_size = fcfg.at("batch").get<int>();
      opts.learning_rate = fcfg.at("lr").get<double>();
      opts.max_epochs = fcfg.at("max_epochs").get<int>();
      opts.patience = fcfg.at("patience").get<int>();
      opts.max_backoffs = fcfg.at("max_backoffs").get<int>();
      opts.seed = seed;
      TrainedFusion trained = train_fusion(sources, labels,
                                           split.balanced_train, split.dev,
                                           opts);
      trained.checkpoint.provenance["config"] = cfg;
      save_checkpoint(tf_out, trained.checkpoint);
      write_train_log(tf_out + ".log.csv", cfg, trained.log.epochs);
      std::cout << "wrote " << tf_out << "\n";
      return 0;
    }

    if (ev_cmd->parsed() || roc_cmd->parsed()) {
      ScoredSet set;
      bool emotion_eval = false;
      std::vector<double> pred_val, pred_aro, true_val, true_aro;
      std::string scores_path = ev_cmd->parsed() ? ev_scores : roc_scores;
      if (!scores_path.empty()) {
        set = load_scores_csv(scores_path);
      } else {
        if (ev_checkpoint.empty() || ev_manifest.empty() || ev_split.empty() ||
            ev_features.empty())
          Throw(ErrorCode::BadConfig,
                "eval needs --scores or --checkpoint with manifest/split/"
                "features");
        auto queries = load_manifest(ev_manifest);
        DatasetSplit split = load_split(ev_split);
        LabelTable labels = label_table(queries);
        const std::vector<std::string> &ids = subset_ids(split, ev_subset);
        Checkpoint ckpt = load_checkpoint(ev_checkpoint);
        FeatureTable features = load_features_for(ids, ev_features);
        std::string task = ckpt.arch.value("task", std::string());
        if (task == "expression") {
          for (const std::string &id : ids) {
            set.scores.push_back(score_expression(ckpt, features.at(id)));
            set.labels.push_back(labels.at(id).binary_expressive);
          }
        } else if (task == "emotion") {
          emotion_eval = true;
          for (const std::string &id : ids) {
            EmotionPrediction p = predict_emotion(ckpt, features.at(id));
            pred_val.push_back(p.valence);
            pred_aro.push_back(p.arousal);
            true_val.push_back(labels.at(id).valence);
            true_aro.push_back(labels.at(id).arousal);
          }
        } else {
          Throw(ErrorCode::WrongModelKind,
                "eval supports expression or emotion checkpoints");
        }
      }

      if (roc_cmd->parsed()) {
        std::string csv = roc_to_csv(roc_curve(set));
        write_text(roc_out, "# config=" + cfg.dump() + "\n" + csv);
        std::cout << "wrote " << roc_out << "\n";
        return 0;
      }

      json out_json;
      if (emotion_eval) {
        out_json = {{"ccc_valence", ccc(pred_val, true_val)},
                    {"ccc_arousal", ccc(pred_aro, true_aro)},
                    {"n", pred_val.size()}};
      } else {
        EvalReport report = evaluate_scores(set);
        out_json = json::parse(to_json(report, false));
      }
      out_json["config"] = cfg;
      std::string dumped = out_json.dump(2);
      if (ev_out.empty())
        std::cout << dumped << "\n";
      else {
        write_text(ev_out, dumped + "\n");
        std::cout << "wrote " << ev_out << "\n";
      }
      return 0;
    }

    if (gc_cmd->parsed()) {
      auto checks = standard_gradchecks(seed);
      double worst = 0.0;
      for (const auto &[name, result] : checks) {
        std::printf("%-16s max_rel_error=%.3e (%s)\n", name.c_str(),
                    result.max_rel_error, result.worst_tensor.c_str());
        worst = std::max(worst, result.max_rel_error);
      }
      bool ok = worst < 1e-4;
      std::printf("gradcheck %s (max %.3e)\n", ok ? "PASS" : "FAIL", worst);
      return ok ? 0 : 1;
    }
  } catch (const Error &e) {
    std::cerr << e.code_name() << ": " << e.what() << "\n";
    return 1;
  } catch (const CLI::ParseError &e) {
    return app.exit(e);
  } catch (const std::exception &e) {
    std::cerr << "INTERNAL: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
