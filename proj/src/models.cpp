// src/models.cpp

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

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "xpress/error.hpp"
#include "xpress/features.hpp"
#include "xpress/models.hpp"

namespace xpress {

namespace {

constexpr double kEmotionCenter = 4.0;  // 1..7 targets mapped to ~[-1, 1]
constexpr double kEmotionScale = 3.0;

struct Segment {
  std::string name;
  int width = 0;
  enum class Norm { Cmvn, Pitch, Raw } norm = Norm::Cmvn;
};

std::vector<Segment> parse_segments(const FeatureMatrix &f) {
  std::string desc;
  auto it = f.meta.find("segments");
  if (it != f.meta.end())
    desc = it->second;
  else
    desc = feature_kind_name(f.kind);

  std::vector<Segment> segs;
  std::stringstream ss(desc);
  std::string tok;
  int total = 0;
  while (std::getline(ss, tok, '+')) {
    Segment s;
    s.name = tok;
    if (tok == "mfcc20" || tok == "gcc20" || tok == "nmcc20")
      s.width = 20;
    else if (tok == "f0v3")
      s.width = 3;
    else if (tok == "mfcc39")
      s.width = 39;
    else if (tok == "spliced429")
      s.width = 429;
    else if (tok == "tv8")
      s.width = 8;
    else
      s.width = -1;  // unknown
    s.norm = tok == "f0v3"  ? Segment::Norm::Pitch
             : tok == "tv8" ? Segment::Norm::Raw
                            : Segment::Norm::Cmvn;
    if (s.width < 0) {
      segs.clear();
      break;
    }
    total += s.width;
    segs.push_back(s);
  }
  if (segs.empty() || total != f.data.cols)
    return {{"all", f.data.cols, Segment::Norm::Cmvn}};
  return segs;
}

void cmvn_columns(Matrix &m, int col0, int width) {
  constexpr double kVarFloor = 1e-8;
  for (int c = col0; c < col0 + width; ++c) {
    double mean = 0.0;
    for (int t = 0; t < m.rows; ++t) mean += m.at(t, c);
    mean /= m.rows;
    double var = 0.0;
    for (int t = 0; t < m.rows; ++t) {
      double d = m.at(t, c) - mean;
      var += d * d;
    }
    var /= m.rows;
    double scale = var > kVarFloor ? 1.0 / std::sqrt(var) : 1.0;
    for (int t = 0; t < m.rows; ++t) m.at(t, c) = (m.at(t, c) - mean) * scale;
  }
}

// Fixed affine rescale of (f0, delta f0, voicing) columns into roughly
// [-1, 1] without destroying cross-utterance level/spread information.
void pitch_columns(Matrix &m, int col0) {
  for (int t = 0; t < m.rows; ++t) {
    m.at(t, col0) = (m.at(t, col0) - 200.0) / 150.0;
    m.at(t, col0 + 1) = m.at(t, col0 + 1) / 25.0;
    m.at(t, col0 + 2) = 2.0 * m.at(t, col0 + 2) - 1.0;
  }
}

}  // namespace

Matrix prepare_model_input(const FeatureMatrix &f) {
  Matrix m = f.data;
  if (m.rows < 2) return m;
  auto segs = parse_segments(f);
  int col = 0;
  for (const Segment &s : segs) {
    switch (s.norm) {
      case Segment::Norm::Cmvn: cmvn_columns(m, col, s.width); break;
      case Segment::Norm::Pitch: pitch_columns(m, col); break;
      case Segment::Norm::Raw: break;
    }
    col += s.width;
  }
  return m;
}

namespace {

std::string feature_descriptor(const FeatureMatrix &f) {
  auto it = f.meta.find("segments");
  return it != f.meta.end() ? it->second
                            : std::string(feature_kind_name(f.kind));
}

std::string checkpoint_task(const Checkpoint &ckpt) {
  if (!ckpt.arch.is_object()) return {};
  return ckpt.arch.value("task", std::string());
}

const FeatureMatrix &feature_for(const FeatureTable &features,
                                 const std::string &id) {
  auto it = features.find(id);
  if (it == features.end())
    Throw(ErrorCode::InsufficientData, "missing features for query " + id);
  return it->second;
}

const QueryLabel &label_for(const LabelTable &labels, const std::string &id) {
  auto it = labels.find(id);
  if (it == labels.end())
    Throw(ErrorCode::InsufficientData, "missing label for query " + id);
  return it->second;
}

Dataset build_expression_dataset(const FeatureTable &features,
                                 const LabelTable &labels,
                                 const std::vector<std::string> &ids) {
  Dataset out;
  out.reserve(ids.size());
  for (const std::string &id : ids) {
    Sample s;
    s.x = prepare_model_input(feature_for(features, id));
    bool pos = label_for(labels, id).binary_expressive;
    s.target = pos ? std::vector<double>{0.0, 1.0}
                   : std::vector<double>{1.0, 0.0};
    out.push_back(std::move(s));
  }
  return out;
}

Dataset build_emotion_dataset(const FeatureTable &features,
                              const LabelTable &labels,
                              const std::vector<std::string> &ids) {
  Dataset out;
  out.reserve(ids.size());
  for (const std::string &id : ids) {
    Sample s;
    s.x = prepare_model_input(feature_for(features, id));
    const QueryLabel &l = label_for(labels, id);
    s.target = {(l.valence - kEmotionCenter) / kEmotionScale,
                (l.arousal - kEmotionCenter) / kEmotionScale};
    out.push_back(std::move(s));
  }
  return out;
}

nlohmann::json train_log_json(const TrainResult &r, uint64_t seed) {
  return {{"seed", seed},
          {"epochs", r.epochs.size()},
          {"lr_history", r.lr_history},
          {"best_cv_error", r.best_cv_error},
          {"best_epoch", r.best_epoch},
          {"backoffs", r.backoffs}};
}

}  // namespace

TrainedExpression train_expression(const FeatureTable &features,
                                   const LabelTable &labels,
                                   const std::vector<std::string> &pretrain_ids,
                                   const std::vector<std::string> &finetune_ids,
                                   const std::vector<std::string> &cv_ids,
                                   const ExpressionTrainOptions &options) {
  if (pretrain_ids.empty() || finetune_ids.empty() || cv_ids.empty())
    Throw(ErrorCode::EmptyDataset, "expression training needs all three lists");
  Dataset pretrain = build_expression_dataset(features, labels, pretrain_ids);
  Dataset finetune = build_expression_dataset(features, labels, finetune_ids);
  Dataset cv = build_expression_dataset(features, labels, cv_ids);
  std::string descriptor =
      feature_descriptor(feature_for(features, pretrain_ids.front()));

  LstmConfig lc;
  lc.input_dim = pretrain.front().x.cols;
  lc.hidden_dim = options.hidden_dim;
  lc.embedding_dim = options.embedding_dim;
  lc.output_dim = 2;
  lc.output_kind = OutputKind::SoftmaxClasses;
  lc.readout = options.readout;
  LstmModel model(lc, options.seed);

  TrainConfig stage1;
  stage1.loss = Loss::CrossEntropy;
  stage1.batch_size = options.batch_size;
  stage1.learning_rate = options.pretrain_lr;
  stage1.max_epochs = options.pretrain_max_epochs;
  stage1.patience = options.patience;
  stage1.max_backoffs = options.max_backoffs;
  stage1.seed = options.seed;

  TrainedExpression out;
  out.pretrain_log = train_model(model, pretrain, cv, stage1);

  nlohmann::json prov = {
      {"task", "expression"},
      {"feature", descriptor},
      {"stage1", train_log_json(out.pretrain_log, options.seed)},
      {"stage1_lr", options.pretrain_lr},
      {"batch_size", options.batch_size},
  };
  out.pretrain_checkpoint = model.to_checkpoint(prov);
  out.pretrain_checkpoint.arch["task"] = "expression";
  out.pretrain_checkpoint.arch["feature"] = descriptor;

  TrainConfig stage2 = stage1;
  stage2.learning_rate = options.finetune_lr;
  stage2.max_epochs = options.finetune_max_epochs;
  stage2.seed = options.seed + 1;
  out.finetune_log = train_model(model, finetune, cv, stage2);

  prov["stage2"] = train_log_json(out.finetune_log, stage2.seed);
  prov["stage2_lr"] = options.finetune_lr;
  out.checkpoint = model.to_checkpoint(prov);
  out.checkpoint.arch["task"] = "expression";
  out.checkpoint.arch["feature"] = descriptor;
  return out;
}

double score_expression(const Checkpoint &ckpt, const FeatureMatrix &features) {
  if (ckpt.kind != "lstm" ||
      checkpoint_task(ckpt) != "expression")
    Throw(ErrorCode::WrongModelKind, "checkpoint is not an expression model");
  LstmModel model(ckpt);
  LstmActivations acts = model.forward(prepare_model_input(features));
  return acts.output[1];
}

TrainedEmotion train_emotion(const FeatureTable &features,
                             const LabelTable &labels,
                             const std::vector<std::string> &train_ids,
                             const std::vector<std::string> &cv_ids,
                             const EmotionTrainOptions &options) {
  if (train_ids.empty() || cv_ids.empty())
    Throw(ErrorCode::EmptyDataset, "emotion training needs train and CV lists");
  Dataset train = build_emotion_dataset(features, labels, train_ids);
  Dataset cv = build_emotion_dataset(features, labels, cv_ids);
  std::string descriptor =
      feature_descriptor(feature_for(features, train_ids.front()));

  LstmConfig lc;
  lc.input_dim = train.front().x.cols;
  lc.hidden_dim = options.hidden_dim;
  lc.embedding_dim = options.embedding_dim;
  lc.output_dim = 2;
  lc.output_kind = OutputKind::LinearRegression;
  lc.readout = options.readout;
  LstmModel model(lc, options.seed);

  TrainConfig tc;
  tc.loss = Loss::MSE;
  tc.batch_size = options.batch_size;
  tc.learning_rate = options.learning_rate;
  tc.max_epochs = options.max_epochs;
  tc.patience = options.patience;
  tc.max_backoffs = options.max_backoffs;
  tc.seed = options.seed;

  TrainedEmotion out;
  out.log = train_model(model, train, cv, tc);
  nlohmann::json prov = {{"task", "emotion"},
                         {"feature", descriptor},
                         {"batch_size", options.batch_size},
                         {"learning_rate", options.learning_rate},
                         {"log", train_log_json(out.log, options.seed)}};
  out.checkpoint = model.to_checkpoint(prov);
  out.checkpoint.arch["task"] = "emotion";
  out.checkpoint.arch["feature"] = descriptor;
  out.checkpoint.arch["target_center"] = kEmotionCenter;
  out.checkpoint.arch["target_scale"] = kEmotionScale;
  return out;
}

EmotionPrediction predict_emotion(const Checkpoint &ckpt,
                                  const FeatureMatrix &features) {
  if (ckpt.kind != "lstm" || checkpoint_task(ckpt) != "emotion")
    Throw(ErrorCode::WrongModelKind, "checkpoint is not an emotion model");
  LstmModel model(ckpt);
  LstmActivations acts = model.forward(prepare_model_input(features));
  double center = ckpt.arch.value("target_center", kEmotionCenter);
  double scale = ckpt.arch.value("target_scale", kEmotionScale);
  return {acts.output[0] * scale + center, acts.output[1] * scale + center};
}

std::vector<double> extract_embedding(const Checkpoint &ckpt,
                                      const FeatureMatrix &features) {
  std::string task = checkpoint_task(ckpt);
  if (ckpt.kind != "lstm" || (task != "expression" && task != "emotion"))
    Throw(ErrorCode::WrongModelKind,
          "embeddings come from expression or emotion checkpoints");
  LstmModel model(ckpt);
  LstmActivations acts = model.forward(prepare_model_input(features));
  return acts.embedding;
}

TrainedFusion train_fusion(const std::vector<EmbeddingSet> &sources,
                           const LabelTable &labels,
                           const std::vector<std::string> &train_ids,
                           const std::vector<std::string> &cv_ids,
                           const FusionTrainOptions &options) {
  if (sources.empty()) Throw(ErrorCode::EmptyDataset, "no embedding sources");
  for (const EmbeddingSet &s : sources) {
    if (s.ids != sources.front().ids)
      Throw(ErrorCode::SourceListMismatch,
            "embedding sources cover different query lists");
    if (s.rows.rows != static_cast<int>(s.ids.size()))
      Throw(ErrorCode::SourceListMismatch, "rows/ids size mismatch in source " +
                                               s.name);
  }

  std::unordered_map<std::string, int> row_of;
  for (size_t i = 0; i < sources.front().ids.size(); ++i)
    row_of[sources.front().ids[i]] = static_cast<int>(i);

  int total_dim = 0;
  bool has_emotion = false;
  nlohmann::json source_meta = nlohmann::json::array();
  for (const EmbeddingSet &s : sources) {
    total_dim += s.rows.cols;
    if (s.name.rfind("ee", 0) == 0) has_emotion = true;
    source_meta.push_back({{"name", s.name}, {"dim", s.rows.cols}});
  }

  auto build = [&](const std::vector<std::string> &ids) {
    Dataset out;
    out.reserve(ids.size());
    for (const std::string &id : ids) {
      auto it = row_of.find(id);
      if (it == row_of.end())
        Throw(ErrorCode::SourceListMismatch,
              "query " + id + " missing from embedding sources");
      Sample s;
      s.x = Matrix(1, total_dim);
      int col = 0;
      for (const EmbeddingSet &src : sources) {
        const double *row = src.rows.row(it->second);
        std::copy(row, row + src.rows.cols, s.x.row(0) + col);
        col += src.rows.cols;
      }
      bool pos = label_for(labels, id).binary_expressive;
      s.target = pos ? std::vector<double>{0.0, 1.0}
                     : std::vector<double>{1.0, 0.0};
      out.push_back(std::move(s));
    }
    return out;
  };
  Dataset train = build(train_ids);
  Dataset cv = build(cv_ids);

  FfnConfig fc;
  fc.input_dim = total_dim;
  fc.hidden_dims = {options.hidden_dim > 0 ? options.hidden_dim
                    : has_emotion          ? 128
                                           : 256};
  fc.output_dim = 2;
  fc.output_kind = OutputKind::SoftmaxClasses;
  FfnModel model(fc, options.seed);

  TrainConfig tc;
  tc.loss = Loss::CrossEntropy;
  tc.batch_size = options.batch_size;
  tc.learning_rate = options.learning_rate;
  tc.max_epochs = options.max_epochs;
  tc.patience = options.patience;
  tc.max_backoffs = options.max_backoffs;
  tc.seed = options.seed;

  TrainedFusion out;
  out.log = train_model(model, train, cv, tc);
  nlohmann::json prov = {{"task", "fusion"},
                         {"sources", source_meta},
                         {"log", train_log_json(out.log, options.seed)}};
  out.checkpoint = model.to_checkpoint(prov);
  out.checkpoint.arch["task"] = "fusion";
  out.checkpoint.arch["sources"] = source_meta;
  return out;
}

std::vector<double> fusion_scores(const Checkpoint &ckpt,
                                  const std::vector<EmbeddingSet> &sources,
                                  const std::vector<std::string> &ids) {
  if (ckpt.kind != "ffn" || checkpoint_task(ckpt) != "fusion")
    Throw(ErrorCode::WrongModelKind, "checkpoint is not a fusion model");
  const nlohmann::json &expected = ckpt.arch.at("sources");
  if (expected.size() != sources.size())
    Throw(ErrorCode::SourceListMismatch, "source count mismatch");
  for (size_t i = 0; i < sources.size(); ++i) {
    if (expected[i].at("name").get<std::string>() != sources[i].name ||
        expected[i].at("dim").get<int>() != sources[i].rows.cols)
      Throw(ErrorCode::SourceListMismatch,
            "source order/name mismatch at position " + std::to_string(i) +
                ": expected " + expected[i].at("name").get<std::string>() +
                ", got " + sources[i].name);
    if (sources[i].ids != sources.front().ids)
      Throw(ErrorCode::SourceListMismatch,
            "embedding sources cover different query lists");
  }

  std::unordered_map<std::string, int> row_of;
  for (size_t i = 0; i < sources.front().ids.size(); ++i)
    row_of[sources.front().ids[i]] = static_cast<int>(i);

  FfnModel model(ckpt);
  std::vector<double> scores;
  scores.reserve(ids.size());
  for (const std::string &id : ids) {
    auto it = row_of.find(id);
    if (it == row_of.end())
      Throw(ErrorCode::SourceListMismatch,
            "query " + id + " missing from embedding sources");
    std::vector<double> x;
    for (const EmbeddingSet &src : sources) {
      const double *row = src.rows.row(it->second);
      x.insert(x.end(), row, row + src.rows.cols);
    }
    scores.push_back(model.forward(x)[1]);
  }
  return scores;
}

// ---------------------------------------------------------------------------
// Bag-of-words

std::vector<std::string> bow_tokenize(const std::string &transcript) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : transcript) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(current);
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(current);
  return tokens;
}

BowVocabulary bow_fit(const std::vector<std::string> &transcripts,
                      int min_count) {
  std::map<std::string, int> counts;
  for (const std::string &t : transcripts)
    for (const std::string &tok : bow_tokenize(t)) ++counts[tok];

  BowVocabulary vocab;
  vocab.min_count = min_count;
  for (const auto &[tok, count] : counts)
    if (count >= min_count) vocab.tokens.push_back(tok);
  if (vocab.tokens.empty())
    Throw(ErrorCode::EmptyVocabulary, "no token reached min_count");
  for (size_t i = 0; i < vocab.tokens.size(); ++i)
    vocab.index[vocab.tokens[i]] = static_cast<int>(i);
  return vocab;
}

std::vector<double> bow_vectorize(const BowVocabulary &vocab,
                                  const std::string &transcript) {
  std::vector<double> out(vocab.tokens.size(), 0.0);
  for (const std::string &tok : bow_tokenize(transcript)) {
    auto it = vocab.index.find(tok);
    if (it != vocab.index.end()) out[it->second] += 1.0;
  }
  return out;
}

TrainedBow train_bow_baseline(const BowVocabulary &vocab,
                              const std::vector<std::vector<double>> &vectors,
                              const std::vector<bool> &labels,
                              const std::vector<size_t> &train_idx,
                              const std::vector<size_t> &cv_idx,
                              const BowTrainOptions &options) {
  if (vectors.size() != labels.size())
    Throw(ErrorCode::LengthMismatch, "vectors/labels length mismatch");
  if (train_idx.empty() || cv_idx.empty())
    Throw(ErrorCode::EmptyDataset, "bow training needs train and CV lists");

  auto build = [&](const std::vector<size_t> &idx) {
    Dataset out;
    out.reserve(idx.size());
    for (size_t i : idx) {
      Sample s;
      s.x = Matrix(1, static_cast<int>(vectors[i].size()));
      std::copy(vectors[i].begin(), vectors[i].end(), s.x.row(0));
      s.target = labels[i] ? std::vector<double>{0.0, 1.0}
                           : std::vector<double>{1.0, 0.0};
      out.push_back(std::move(s));
    }
    return out;
  };
  Dataset train = build(train_idx);
  Dataset cv = build(cv_idx);

  FfnConfig fc;
  fc.input_dim = vocab.size();
  fc.hidden_dims = options.hidden_dims;
  fc.output_dim = 2;
  fc.output_kind = OutputKind::SoftmaxClasses;
  FfnModel model(fc, options.seed);

  TrainConfig tc;
  tc.loss = Loss::CrossEntropy;
  tc.batch_size = options.batch_size;
  tc.learning_rate = options.learning_rate;
  tc.max_epochs = options.max_epochs;
  tc.patience = options.patience;
  tc.max_backoffs = options.max_backoffs;
  tc.seed = options.seed;

  TrainedBow out;
  out.log = train_model(model, train, cv, tc);
  nlohmann::json prov = {{"task", "bow"},
                         {"vocab_size", vocab.size()},
                         {"log", train_log_json(out.log, options.seed)}};
  out.checkpoint = model.to_checkpoint(prov);
  out.checkpoint.arch["task"] = "bow";
  return out;
}

double score_bow(const Checkpoint &ckpt, const std::vector<double> &vector) {
  if (ckpt.kind != "ffn" || checkpoint_task(ckpt) != "bow")
    Throw(ErrorCode::WrongModelKind, "checkpoint is not a bow model");
  FfnModel model(ckpt);
  return model.forward(vector)[1];
}

}  // namespace xpress
