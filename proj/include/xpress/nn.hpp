// include/xpress/nn.hpp

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

#ifndef XPRESS_NN_HPP
#define XPRESS_NN_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "xpress/matrix.hpp"

namespace xpress {

struct Tensor {
  std::vector<int> shape;
  std::vector<double> values;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    size_t n = 1;
    for (int d : shape) n *= static_cast<size_t>(d);
    values.assign(n, 0.0);
  }
  size_t size() const { return values.size(); }
};

enum class Loss { CrossEntropy, MSE };
enum class OutputKind { SoftmaxClasses, LinearRegression };

// How the sequence is read out: a dense tanh embedding over the final (or
// mean-pooled) hidden state feeding one output layer, or a per-frame linear
// regression head directly on the hidden states.
enum class Readout { FinalEmbedding, MeanEmbedding, PerFrameLinear };

// One supervised example: a feature sequence (T x input_dim; T == 1 for
// feed-forward models) and its target. Classification targets are one-hot;
// per-frame regression targets are row-major T x output_dim.
struct Sample {
  Matrix x;
  std::vector<double> target;
};
using Dataset = std::vector<Sample>;

struct TrainConfig {
  Loss loss = Loss::CrossEntropy;
  int batch_size = 32;
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int max_epochs = 50;
  int patience = 5;
  double lr_decay_on_backoff = 0.9;
  int max_backoffs = 3;
  uint64_t seed = 1;
};

// Serialized model: "XPRS" magic, u8 version, u32 JSON header (kind, arch,
// tensor manifest, provenance), then tensors as f32 little-endian in
// manifest order.
struct Checkpoint {
  std::string kind;  // "lstm" or "ffn"
  nlohmann::json arch;
  std::vector<std::pair<std::string, Tensor>> tensors;
  nlohmann::json provenance;

  const Tensor *find(const std::string &name) const;
};

void save_checkpoint(const std::string &path, const Checkpoint &ckpt);
Checkpoint load_checkpoint(const std::string &path);

// Numerically-stable softmax cross-entropy on raw logits. Returns the loss;
// if dlogits is non-null it receives softmax(logits) - onehot.
double softmax_cross_entropy(const std::vector<double> &logits,
                             const std::vector<double> &onehot,
                             std::vector<double> *dlogits);

std::vector<double> softmax(const std::vector<double> &logits);

// Trainable model over Samples. Parameter order is stable and matches the
// checkpoint manifest.
class SequenceModel {
 public:
  virtual ~SequenceModel() = default;
  virtual std::vector<Tensor *> params() = 0;
  virtual std::vector<const Tensor *> params() const = 0;
  virtual std::vector<std::string> param_names() const = 0;
  virtual double sample_loss(const Sample &s, Loss loss) const = 0;
  // Adds this sample's parameter gradients into grads; returns the loss.
  virtual double accumulate_gradients(const Sample &s, Loss loss,
                                      std::vector<Tensor> &grads) const = 0;
};

struct LstmConfig {
  int input_dim = 0;
  int hidden_dim = 0;
  int embedding_dim = 0;  // unused for PerFrameLinear
  int output_dim = 0;
  OutputKind output_kind = OutputKind::SoftmaxClasses;
  Readout readout = Readout::FinalEmbedding;
};

struct LstmActivations {
  Matrix hidden;                // T x H
  std::vector<double> embedding;  // E (empty for PerFrameLinear)
  std::vector<double> output;     // O (softmax probabilities for classes)
  Matrix frame_outputs;           // T x O (PerFrameLinear only)
};

// Single-layer LSTM with sigmoid gates and tanh cell candidate, zero initial
// state. Gate packing in Wx/Wh/b rows: input, forget, candidate, output.
class LstmModel : public SequenceModel {
 public:
  LstmModel(const LstmConfig &config, uint64_t seed);
  explicit LstmModel(const Checkpoint &ckpt);

  const LstmConfig &config() const { return config_; }

  LstmActivations forward(const Matrix &sequence) const;

  std::vector<Tensor *> params() override;
  std::vector<const Tensor *> params() const override;
  std::vector<std::string> param_names() const override;
  double sample_loss(const Sample &s, Loss loss) const override;
  double accumulate_gradients(const Sample &s, Loss loss,
                              std::vector<Tensor> &grads) const override;

  Checkpoint to_checkpoint(nlohmann::json provenance) const;
  static LstmConfig config_from_arch(const nlohmann::json &arch);

 private:
  LstmConfig config_;
  Tensor wx_, wh_, b_;    // (4H, D), (4H, H), (4H)
  Tensor we_, be_;        // (E, H), (E)   [embedding readouts]
  Tensor wo_, bo_;        // (O, E) or (O, H) for per-frame, (O)
};

struct FfnConfig {
  int input_dim = 0;
  std::vector<int> hidden_dims;  // tanh activations
  int output_dim = 0;
  OutputKind output_kind = OutputKind::SoftmaxClasses;
};

// Dense feed-forward network with tanh hidden layers.
class FfnModel : public SequenceModel {
 public:
  FfnModel(const FfnConfig &config, uint64_t seed);
  explicit FfnModel(const Checkpoint &ckpt);

  const FfnConfig &config() const { return config_; }

  // x is a single row (1 x input_dim in Sample form).
  std::vector<double> forward(const std::vector<double> &x) const;

  std::vector<Tensor *> params() override;
  std::vector<const Tensor *> params() const override;
  std::vector<std::string> param_names() const override;
  double sample_loss(const Sample &s, Loss loss) const override;
  double accumulate_gradients(const Sample &s, Loss loss,
                              std::vector<Tensor> &grads) const override;

  Checkpoint to_checkpoint(nlohmann::json provenance) const;
  static FfnConfig config_from_arch(const nlohmann::json &arch);

 private:
  FfnConfig config_;
  std::vector<Tensor> weights_;  // per layer (out, in)
  std::vector<Tensor> biases_;   // per layer (out)
};

struct AdamState {
  std::vector<Tensor> m, v;
  int64_t t = 0;
};

// Standard Adam with bias correction. State tensors are created lazily to
// match params on the first call.
void adam_step(std::vector<Tensor *> &params, const std::vector<Tensor> &grads,
               AdamState &state, double learning_rate, double beta1,
               double beta2, double epsilon);

struct EpochLog {
  int epoch = 0;  // 1-based, cumulative across back-offs
  double train_loss = 0.0;
  double cv_error = 0.0;
  double learning_rate = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> epochs;
  std::vector<double> lr_history;  // initial LR plus one entry per back-off
  double best_cv_error = 0.0;
  int best_epoch = 0;
  int backoffs = 0;
};

// Epoch loop with seeded shuffling, mini-batch Adam updates and CV-driven
// back-off: after `patience` consecutive CV increases the best weights are
// restored and training restarts with the decayed learning rate; a back-off
// that re-triggers without an intervening new best (or once max_backoffs is
// exhausted) stops training. The model is left holding the best weights.
TrainResult train_model(SequenceModel &model, const Dataset &train_set,
                        const Dataset &cv_set, const TrainConfig &config);

// Mean loss over a dataset.
double mean_loss(const SequenceModel &model, const Dataset &set, Loss loss);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_tensor;
};

// Central finite differences against the analytic batch gradient, every
// entry of every parameter tensor. rel = |a-n| / max(1e-3, |a|+|n|).
GradCheckResult gradient_check(SequenceModel &model, const Dataset &batch,
                               Loss loss, double h = 1e-5);

// Small seeded instances of every trainable architecture in the repo
// (expression LSTM, emotion LSTM, inversion LSTM, fusion FFN, bow DNN),
// each checked against finite differences.
std::vector<std::pair<std::string, GradCheckResult>> standard_gradchecks(
    uint64_t seed = 42);

}  // namespace xpress

#endif  // XPRESS_NN_HPP
