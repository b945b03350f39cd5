// include/xpress/articulatory.hpp

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

#ifndef XPRESS_ARTICULATORY_HPP
#define XPRESS_ARTICULATORY_HPP

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "xpress/feature_matrix.hpp"
#include "xpress/nn.hpp"

namespace xpress {

// Tract-variable column order, fixed everywhere: glottal opening, velum,
// lip protrusion, lip aperture, tongue-tip constriction location/degree,
// tongue-body constriction location/degree.
extern const std::array<const char *, 8> kTvNames;

// One frame-aligned training pair: spliced acoustic features and the 8 TV
// trajectories.
struct InversionPair {
  FeatureMatrix features;  // Spliced429
  FeatureMatrix tvs;       // TV8
};

// Synthetic forward-map source standing in for an articulatory corpus:
// band-limited random TV trajectories pushed through a fixed seeded two-layer
// nonlinear map to 39-d frames, spliced to 429 dims, plus small noise. The
// TVs are z-scored per dimension, so recovered units are abstract.
struct InversionDataConfig {
  int n_utterances = 50;
  uint64_t seed = 7;       // trajectory draws
  uint64_t map_seed = 99;  // the fixed forward map; share it across splits
  int min_frames = 100;
  int max_frames = 250;
  double noise_sigma = 0.05;
};

std::vector<InversionPair> make_inversion_dataset(
    const InversionDataConfig &config);

struct InversionTrainConfig {
  int hidden_dim = 128;
  double cv_fraction = 0.15;  // tail of the pair list held out for CV
  TrainConfig train{.loss = Loss::MSE,
                    .batch_size = 8,
                    .learning_rate = 0.002,
                    .max_epochs = 60,
                    .seed = 7};
};

// Single-layer LSTM regressor, spliced features to per-frame TV values,
// trained with MSE under the back-off trainer.
Checkpoint train_inversion(const std::vector<InversionPair> &dataset,
                           const InversionTrainConfig &config);

// Per-utterance normalization, splice(context 5), forward pass; returns a
// TV8 trajectory with one row per input frame.
FeatureMatrix estimate_tvs(const FeatureMatrix &mfcc39,
                           const Checkpoint &model);

struct TVCorrelationReport {
  std::array<double, 8> r{};           // Pearson, 0 when degenerate
  std::array<bool, 8> degenerate{};    // variance collapsed on either side
  int n_utterances = 0;
};

// Correlates the per-utterance temporal standard deviation of each TV with
// the utterance valence score (1..7 scale).
TVCorrelationReport tv_valence_correlation(
    const std::vector<std::pair<FeatureMatrix, double>> &queries);

}  // namespace xpress

#endif  // XPRESS_ARTICULATORY_HPP
