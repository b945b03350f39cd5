// include/xpress/models.hpp

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

#ifndef XPRESS_MODELS_HPP
#define XPRESS_MODELS_HPP

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "xpress/data.hpp"
#include "xpress/feature_matrix.hpp"
#include "xpress/nn.hpp"

namespace xpress {

using FeatureTable = std::map<std::string, FeatureMatrix>;
using LabelTable = std::map<std::string, QueryLabel>;

// Normalization applied before any model input: cepstral blocks get
// per-utterance mean/variance normalization, pitch columns a fixed affine
// rescale (keeping cross-utterance level and spread information), TV columns
// pass through. Mixed blocks are handled via meta["segments"].
Matrix prepare_model_input(const FeatureMatrix &f);

struct ExpressionTrainOptions {
  int hidden_dim = 128;
  int embedding_dim = 128;
  int batch_size = 200;
  double pretrain_lr = 1e-4;
  double finetune_lr = 1e-2;
  int pretrain_max_epochs = 20;
  int finetune_max_epochs = 30;
  int patience = 5;
  int max_backoffs = 3;
  uint64_t seed = 1;
  Readout readout = Readout::FinalEmbedding;
};

struct TrainedExpression {
  Checkpoint checkpoint;           // after both stages
  Checkpoint pretrain_checkpoint;  // after stage 1 only
  TrainResult pretrain_log;
  TrainResult finetune_log;
};

// Two-stage training of the binary expression model: stage 1 on the full
// (imbalanced) pre-training list at the low learning rate, stage 2 on the
// class-balanced list at the high rate, both under the back-off trainer.
TrainedExpression train_expression(const FeatureTable &features,
                                   const LabelTable &labels,
                                   const std::vector<std::string> &pretrain_ids,
                                   const std::vector<std::string> &finetune_ids,
                                   const std::vector<std::string> &cv_ids,
                                   const ExpressionTrainOptions &options);

// Positive-class (expressive) softmax probability.
double score_expression(const Checkpoint &ckpt, const FeatureMatrix &features);

struct EmotionTrainOptions {
  int hidden_dim = 64;
  int embedding_dim = 64;
  int batch_size = 300;
  double learning_rate = 0.01;
  int max_epochs = 30;
  int patience = 5;
  int max_backoffs = 3;
  uint64_t seed = 1;
  Readout readout = Readout::FinalEmbedding;
};

struct TrainedEmotion {
  Checkpoint checkpoint;
  TrainResult log;
};

// Joint valence/arousal regressor (2-d linear output, MSE); targets are the
// 1..7 scaled grades.
TrainedEmotion train_emotion(const FeatureTable &features,
                             const LabelTable &labels,
                             const std::vector<std::string> &train_ids,
                             const std::vector<std::string> &cv_ids,
                             const EmotionTrainOptions &options);

struct EmotionPrediction {
  double valence = 0.0;
  double arousal = 0.0;
};

EmotionPrediction predict_emotion(const Checkpoint &ckpt,
                                  const FeatureMatrix &features);

// Embedding-layer activation for one query; 128-d for expression
// checkpoints, 64-d for emotion checkpoints.
std::vector<double> extract_embedding(const Checkpoint &ckpt,
                                      const FeatureMatrix &features);

// One named embedding source: rows[i] belongs to ids[i].
struct EmbeddingSet {
  std::string name;
  std::vector<std::string> ids;
  Matrix rows;
};

struct FusionTrainOptions {
  int hidden_dim = -1;  // -1 resolves to 128 with an emotion source, else 256
  int batch_size = 200;
  double learning_rate = 0.01;
  int max_epochs = 60;
  int patience = 5;
  int max_backoffs = 3;
  uint64_t seed = 1;
};

struct TrainedFusion {
  Checkpoint checkpoint;
  TrainResult log;
};

// Single-hidden-layer feed-forward fusion over concatenated embeddings.
// Source names, order and dims are recorded in the checkpoint and enforced
// at inference.
TrainedFusion train_fusion(const std::vector<EmbeddingSet> &sources,
                           const LabelTable &labels,
                           const std::vector<std::string> &train_ids,
                           const std::vector<std::string> &cv_ids,
                           const FusionTrainOptions &options);

std::vector<double> fusion_scores(const Checkpoint &ckpt,
                                  const std::vector<EmbeddingSet> &sources,
                                  const std::vector<std::string> &ids);

// --------------------------------------------------------------------------
// Bag-of-words baseline

struct BowVocabulary {
  std::vector<std::string> tokens;  // index order
  std::unordered_map<std::string, int> index;
  int min_count = 2;

  int size() const { return static_cast<int>(tokens.size()); }
};

// Lowercase, strip punctuation, split on whitespace.
std::vector<std::string> bow_tokenize(const std::string &transcript);

// Vocabulary from the pre-training split's transcripts only; tokens below
// min_count are dropped. Throws EmptyVocabulary if nothing survives.
BowVocabulary bow_fit(const std::vector<std::string> &transcripts,
                      int min_count = 2);

// Token-count vector, out-of-vocabulary tokens ignored.
std::vector<double> bow_vectorize(const BowVocabulary &vocab,
                                  const std::string &transcript);

struct BowTrainOptions {
  std::vector<int> hidden_dims{128, 128};
  int batch_size = 200;
  double learning_rate = 0.01;
  int max_epochs = 60;
  int patience = 5;
  int max_backoffs = 3;
  uint64_t seed = 1;
};

struct TrainedBow {
  Checkpoint checkpoint;
  TrainResult log;
};

TrainedBow train_bow_baseline(const BowVocabulary &vocab,
                              const std::vector<std::vector<double>> &vectors,
                              const std::vector<bool> &labels,
                              const std::vector<size_t> &train_idx,
                              const std::vector<size_t> &cv_idx,
                              const BowTrainOptions &options);

double score_bow(const Checkpoint &ckpt, const std::vector<double> &vector);

}  // namespace xpress

#endif  // XPRESS_MODELS_HPP
