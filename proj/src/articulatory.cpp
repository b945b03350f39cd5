// src/articulatory.cpp

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

#include <cmath>
#include <random>

#include "xpress/articulatory.hpp"
#include "xpress/error.hpp"
#include "xpress/features.hpp"
#include "xpress/metrics.hpp"

namespace xpress {

const std::array<const char *, 8> kTvNames = {
    "GLO", "VEL", "LP", "LA", "TTCL", "TTCD", "TBCL", "TBCD"};

namespace {

constexpr int kTvDims = 8;
constexpr int kFrameDims = 39;
constexpr int kSpliceContext = 5;

// Fixed random two-layer map (8 -> 32 tanh -> 39); the same seed always
// yields the same map, independent of the trajectory seed.
struct ForwardMap {
  Matrix w1{32, kTvDims};
  std::vector<double> b1 = std::vector<double>(32, 0.0);
  Matrix w2{kFrameDims, 32};
  std::vector<double> b2 = std::vector<double>(kFrameDims, 0.0);

  explicit ForwardMap(uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    double s1 = 1.2 / std::sqrt(static_cast<double>(kTvDims));
    for (double &v : w1.data) v = s1 * g(rng);
    for (double &v : b1) v = 0.3 * g(rng);
    double s2 = 1.0 / std::sqrt(32.0);
    for (double &v : w2.data) v = s2 * g(rng);
    for (double &v : b2) v = 0.1 * g(rng);
  }

  void apply(const double *tv, double *frame) const {
    double hidden[32];
    for (int j = 0; j < 32; ++j)
      hidden[j] = std::tanh(b1[j] + dot(w1.row(j), tv, kTvDims));
    for (int k = 0; k < kFrameDims; ++k)
      frame[k] = b2[k] + dot(w2.row(k), hidden, 32);
  }
};

// Band-limited trajectory: a few slow sinusoids, z-scored over the utterance.
std::vector<double> smooth_track(int frames, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> ufreq(0.5, 4.0);   // Hz at 100 fps
  std::uniform_real_distribution<double> uphase(0.0, 2.0 * M_PI);
  std::normal_distribution<double> g(0.0, 1.0);
  const int k = 4;
  double freq[k], phase[k], amp[k];
  for (int i = 0; i < k; ++i) {
    freq[i] = ufreq(rng);
    phase[i] = uphase(rng);
    amp[i] = g(rng);
  }
  std::vector<double> x(frames);
  for (int t = 0; t < frames; ++t) {
    double tt = t / 100.0;
    double v = 0.0;
    for (int i = 0; i < k; ++i)
      v += amp[i] * std::sin(2.0 * M_PI * freq[i] * tt + phase[i]);
    x[t] = v;
  }
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= frames;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= frames;
  double scale = var > 1e-12 ? 1.0 / std::sqrt(var) : 1.0;
  for (double &v : x) v = (v - mean) * scale;
  return x;
}

}  // namespace

std::vector<InversionPair> make_inversion_dataset(
    const InversionDataConfig &config) {
  ForwardMap map(config.map_seed);
  std::vector<InversionPair> out;
  out.reserve(config.n_utterances);
  for (int u = 0; u < config.n_utterances; ++u) {
    std::mt19937_64 rng(config.seed + 0x9E3779B97F4A7C15ULL * (u + 1));
    std::uniform_int_distribution<int> uframes(config.min_frames,
                                               config.max_frames);
    int frames = uframes(rng);

    FeatureMatrix tvs;
    tvs.kind = FeatureKind::TV8;
    tvs.data = Matrix(frames, kTvDims);
    for (int d = 0; d < kTvDims; ++d) {
      auto track = smooth_track(frames, rng);
      for (int t = 0; t < frames; ++t) tvs.data.at(t, d) = track[t];
    }

    FeatureMatrix frames39;
    frames39.kind = FeatureKind::Custom;
    frames39.data = Matrix(frames, kFrameDims);
    std::normal_distribution<double> noise(0.0, config.noise_sigma);
    for (int t = 0; t < frames; ++t) {
      map.apply(tvs.data.row(t), frames39.data.row(t));
      for (int k = 0; k < kFrameDims; ++k)
        frames39.data.at(t, k) += noise(rng);
    }

    InversionPair pair;
    pair.features = splice(frames39, kSpliceContext);
    pair.features.kind = FeatureKind::Spliced429;
    validate_feature(pair.features);
    pair.tvs = std::move(tvs);
    validate_feature(pair.tvs);
    out.push_back(std::move(pair));
  }
  return out;
}

Checkpoint train_inversion(const std::vector<InversionPair> &dataset,
                           const InversionTrainConfig &config) {
  if (dataset.empty()) Throw(ErrorCode::EmptyDataset, "no inversion pairs");
  int input_dim = dataset.front().features.data.cols;
  for (const InversionPair &p : dataset) {
    if (p.tvs.data.cols != kTvDims)
      Throw(ErrorCode::ShapeMismatch,
            "TV targets must have 8 columns, got " +
                std::to_string(p.tvs.data.cols));
    if (p.features.data.cols != input_dim)
      Throw(ErrorCode::ShapeMismatch, "inconsistent feature widths");
    if (p.features.data.rows != p.tvs.data.rows)
      Throw(ErrorCode::ShapeMismatch, "pairs must be frame-aligned");
  }

  Dataset all;
  all.reserve(dataset.size());
  for (const InversionPair &p : dataset) {
    Sample s;
    s.x = p.features.data;
    s.target.assign(p.tvs.data.data.begin(), p.tvs.data.data.end());
    all.push_back(std::move(s));
  }
  size_t n_cv = std::max<size_t>(
      1, static_cast<size_t>(std::lround(all.size() * config.cv_fraction)));
  if (n_cv >= all.size())
    Throw(ErrorCode::InsufficientData, "CV fraction leaves no training data");
  Dataset cv(all.end() - static_cast<long>(n_cv), all.end());
  Dataset train(all.begin(), all.end() - static_cast<long>(n_cv));

  LstmConfig lc;
  lc.input_dim = input_dim;
  lc.hidden_dim = config.hidden_dim;
  lc.embedding_dim = 0;
  lc.output_dim = kTvDims;
  lc.output_kind = OutputKind::LinearRegression;
  lc.readout = Readout::PerFrameLinear;
  LstmModel model(lc, config.train.seed);

  TrainConfig tc = config.train;
  tc.loss = Loss::MSE;
  TrainResult result = train_model(model, train, cv, tc);

  nlohmann::json prov = {{"seed", tc.seed},
                         {"epochs", result.epochs.size()},
                         {"lr_history", result.lr_history},
                         {"best_cv_error", result.best_cv_error},
                         {"backoffs", result.backoffs},
                         {"n_train", train.size()},
                         {"n_cv", cv.size()}};
  Checkpoint ckpt = model.to_checkpoint(prov);
  ckpt.arch["task"] = "inversion";
  ckpt.arch["input_norm"] = "cmvn";
  ckpt.arch["splice_context"] = kSpliceContext;
  return ckpt;
}

FeatureMatrix estimate_tvs(const FeatureMatrix &mfcc39_in,
                           const Checkpoint &model) {
  if (model.kind != "lstm" || !model.arch.contains("task") ||
      model.arch.at("task").get<std::string>() != "inversion")
    Throw(ErrorCode::WrongModelKind,
          "checkpoint is not an inversion model");
  if (mfcc39_in.data.cols != kFrameDims)
    Throw(ErrorCode::WrongKind, "estimate_tvs expects 39-dim features");

  // The inversion net is trained on roughly unit-scale oracle features, so
  // real cepstra are normalized per utterance before splicing.
  FeatureMatrix normalized = mfcc39_in;
  std::string norm = model.arch.value("input_norm", "none");
  if (norm == "cmvn") normalized = cmvn(mfcc39_in);
  int context = model.arch.value("splice_context", kSpliceContext);
  FeatureMatrix spliced = splice(normalized, context);

  LstmModel net(model);
  LstmActivations acts = net.forward(spliced.data);

  FeatureMatrix out;
  out.kind = FeatureKind::TV8;
  out.data = acts.frame_outputs;
  out.meta["source"] = "inversion";
  validate_feature(out);
  return out;
}

TVCorrelationReport tv_valence_correlation(
    const std::vector<std::pair<FeatureMatrix, double>> &queries) {
  if (queries.size() < 3)
    Throw(ErrorCode::TooFewQueries,
          "need at least 3 queries, got " + std::to_string(queries.size()));
  TVCorrelationReport report;
  report.n_utterances = static_cast<int>(queries.size());

  std::vector<double> valence;
  valence.reserve(queries.size());
  std::array<std::vector<double>, kTvDims> variation;
  for (const auto &[tvs, val] : queries) {
    if (tvs.data.cols != kTvDims)
      Throw(ErrorCode::WrongKind, "TV trajectories must have 8 columns");
    valence.push_back(val);
    for (int d = 0; d < kTvDims; ++d) {
      double mean = 0.0;
      for (int t = 0; t < tvs.data.rows; ++t) mean += tvs.data.at(t, d);
      mean /= tvs.data.rows;
      double var = 0.0;
      for (int t = 0; t < tvs.data.rows; ++t) {
        double diff = tvs.data.at(t, d) - mean;
        var += diff * diff;
      }
      var /= tvs.data.rows;
      variation[d].push_back(std::sqrt(var));
    }
  }

  for (int d = 0; d < kTvDims; ++d) {
    try {
      report.r[d] = pearson(variation[d], valence);
      report.degenerate[d] = false;
    } catch (const Error &e) {
      if (e.code() != ErrorCode::DegenerateVariance) throw;
      report.r[d] = 0.0;
      report.degenerate[d] = true;
    }
  }
  return report;
}

}  // namespace xpress
