// tests/test_articulatory.cpp

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
#include <filesystem>
#include <random>

#include "doctest.h"
#include "oracle_helpers.hpp"
#include "xpress/articulatory.hpp"
#include "xpress/error.hpp"
#include "xpress/features.hpp"
#include "xpress/metrics.hpp"

using namespace xpress;

namespace {

FeatureMatrix tv_matrix(int frames) {
  FeatureMatrix f;
  f.kind = FeatureKind::TV8;
  f.data = Matrix(frames, 8);
  return f;
}

}  // namespace

TEST_CASE("tv names are the fixed eight in order") {
  REQUIRE(kTvNames.size() == 8);
  CHECK(std::string(kTvNames[0]) == "GLO");
  CHECK(std::string(kTvNames[1]) == "VEL");
  CHECK(std::string(kTvNames[2]) == "LP");
  CHECK(std::string(kTvNames[3]) == "LA");
  CHECK(std::string(kTvNames[4]) == "TTCL");
  CHECK(std::string(kTvNames[5]) == "TTCD");
  CHECK(std::string(kTvNames[6]) == "TBCL");
  CHECK(std::string(kTvNames[7]) == "TBCD");
}

TEST_CASE("oracle dataset shapes and determinism") {
  InversionDataConfig cfg;
  cfg.n_utterances = 4;
  cfg.seed = 5;
  auto d1 = make_inversion_dataset(cfg);
  auto d2 = make_inversion_dataset(cfg);
  REQUIRE(d1.size() == 4);
  for (size_t i = 0; i < d1.size(); ++i) {
    CHECK(d1[i].features.data.cols == 429);
    CHECK(d1[i].tvs.data.cols == 8);
    CHECK(d1[i].features.data.rows == d1[i].tvs.data.rows);
    CHECK(d1[i].features.data.data == d2[i].features.data.data);
    CHECK(d1[i].tvs.data.data == d2[i].tvs.data.data);
  }
}

TEST_CASE("train_inversion rejects malformed pairs") {
  InversionDataConfig cfg;
  cfg.n_utterances = 3;
  auto data = make_inversion_dataset(cfg);

  auto bad = data;
  bad[1].tvs.kind = FeatureKind::Custom;
  bad[1].tvs.data = Matrix(bad[1].tvs.data.rows, 7);
  try {
    train_inversion(bad, InversionTrainConfig{});
    CHECK(false);
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::ShapeMismatch);
  }

  try {
    train_inversion({}, InversionTrainConfig{});
    CHECK(false);
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::EmptyDataset);
  }
}

TEST_CASE("zero targets regress the output toward a constant") {
  InversionDataConfig cfg;
  cfg.n_utterances = 6;
  cfg.min_frames = 40;
  cfg.max_frames = 60;
  auto data = make_inversion_dataset(cfg);
  for (InversionPair &p : data)
    std::fill(p.tvs.data.data.begin(), p.tvs.data.data.end(), 0.0);

  InversionTrainConfig tc;
  tc.hidden_dim = 12;
  tc.train.max_epochs = 15;
  tc.train.batch_size = 3;
  tc.train.learning_rate = 0.01;
  tc.train.seed = 3;

  // Output variance before vs after training toward zero targets.
  auto output_variance = [&](const Checkpoint &ckpt) {
    LstmModel model(ckpt);
    double acc = 0.0, acc2 = 0.0;
    int count = 0;
    for (const InversionPair &p : data) {
      LstmActivations acts = model.forward(p.features.data);
      for (double v : acts.frame_outputs.data) {
        acc += v;
        acc2 += v * v;
        ++count;
      }
    }
    double mean = acc / count;
    return acc2 / count - mean * mean;
  };

  LstmConfig lc{429, 12, 0, 8, OutputKind::LinearRegression,
                Readout::PerFrameLinear};
  LstmModel fresh(lc, tc.train.seed);
  Checkpoint fresh_ckpt = fresh.to_checkpoint({});
  fresh_ckpt.arch["task"] = "inversion";
  double initial_var = output_variance(fresh_ckpt);

  Checkpoint trained = train_inversion(data, tc);
  double trained_var = output_variance(trained);
  CHECK(trained_var < initial_var);
}

TEST_CASE("inversion learns the synthetic forward map") {
  // Training source: 30 oracle utterances; evaluation on 8 held-out ones.
  // The full-scale run lives in the acceptance suite; this is a compact
  // version with a smaller model.
  InversionDataConfig cfg;
  cfg.n_utterances = 30;
  cfg.seed = 11;
  cfg.min_frames = 60;
  cfg.max_frames = 120;
  auto train_data = make_inversion_dataset(cfg);

  InversionDataConfig eval_cfg = cfg;
  eval_cfg.n_utterances = 8;
  eval_cfg.seed = 1011;  // fresh trajectories through the same forward map
  auto eval_data = make_inversion_dataset(eval_cfg);

  InversionTrainConfig tc;
  tc.hidden_dim = 48;
  tc.train.batch_size = 6;
  tc.train.learning_rate = 0.005;
  tc.train.max_epochs = 25;
  tc.train.seed = 13;
  Checkpoint ckpt = train_inversion(train_data, tc);

  LstmModel model(ckpt);
  for (int d = 0; d < 8; ++d) {
    std::vector<double> got, want;
    for (const InversionPair &p : eval_data) {
      LstmActivations acts = model.forward(p.features.data);
      for (int t = 0; t < p.tvs.data.rows; ++t) {
        got.push_back(acts.frame_outputs.at(t, d));
        want.push_back(p.tvs.data.at(t, d));
      }
    }
    double r = oracle::two_pass_pearson(got, want);
    INFO("tv dim " << d);
    CHECK(r >= 0.7);
  }
}

TEST_CASE("estimate_tvs shape contract and determinism") {
  InversionDataConfig cfg;
  cfg.n_utterances = 6;
  cfg.min_frames = 40;
  cfg.max_frames = 60;
  auto data = make_inversion_dataset(cfg);
  InversionTrainConfig tc;
  tc.hidden_dim = 8;
  tc.train.max_epochs = 2;
  tc.train.batch_size = 3;
  Checkpoint ckpt = train_inversion(data, tc);

  FeatureMatrix m39;
  m39.kind = FeatureKind::MFCC39;
  m39.data = Matrix(25, 39);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 1.0);
  for (double &v : m39.data.data) v = g(rng);

  FeatureMatrix tv1 = estimate_tvs(m39, ckpt);
  FeatureMatrix tv2 = estimate_tvs(m39, ckpt);
  CHECK(tv1.kind == FeatureKind::TV8);
  CHECK(tv1.data.rows == 25);
  CHECK(tv1.data.cols == 8);
  CHECK(tv1.data.data == tv2.data.data);  // bitwise

  // Wrong checkpoint kind is rejected.
  Checkpoint not_inversion = ckpt;
  not_inversion.arch["task"] = "expression";
  try {
    estimate_tvs(m39, not_inversion);
    CHECK(false);
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::WrongModelKind);
  }
}

TEST_CASE("tv serialization round-trips through the feat format") {
  namespace fs = std::filesystem;
  FeatureMatrix tv = tv_matrix(12);
  std::mt19937_64 rng(23);
  std::normal_distribution<double> g(0.0, 1.0);
  for (double &v : tv.data.data) v = g(rng);
  std::string path = (fs::temp_directory_path() / "xpress_tv.feat").string();
  save_feat(path, tv);
  FeatureMatrix loaded = load_feat(path);
  CHECK(loaded.kind == FeatureKind::TV8);
  CHECK(loaded.data.cols == 8);
  CHECK(loaded.data.rows == 12);
}

TEST_CASE("tv_valence_correlation identities and oracle agreement") {
  // A TV whose temporal std equals the valence score correlates perfectly.
  std::vector<std::pair<FeatureMatrix, double>> queries;
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    double val = 1.0 + 6.0 * (i / 19.0);
    FeatureMatrix tv = tv_matrix(200);
    for (int t = 0; t < 200; ++t)
      for (int d = 0; d < 8; ++d) {
        double scale = d == 0 ? val : 1.0;
        tv.data.at(t, d) = scale * std::sin(0.37 * t + d) * 0.4;
      }
    queries.emplace_back(std::move(tv), val);
  }
  TVCorrelationReport report = tv_valence_correlation(queries);
  CHECK(report.n_utterances == 20);
  CHECK(report.r[0] > 0.999);
  CHECK(!report.degenerate[0]);

  // Constant valence: degenerate, r reported as 0 with the flag set.
  std::vector<std::pair<FeatureMatrix, double>> flat;
  for (int i = 0; i < 5; ++i) {
    FeatureMatrix tv = tv_matrix(50);
    for (double &v : tv.data.data) v = g(rng);
    flat.emplace_back(std::move(tv), 4.0);
  }
  report = tv_valence_correlation(flat);
  for (int d = 0; d < 8; ++d) {
    CHECK(report.degenerate[d]);
    CHECK(report.r[d] == 0.0);
  }

  try {
    tv_valence_correlation({});
    CHECK(false);
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::TooFewQueries);
  }
}

TEST_CASE("tv_valence_correlation matches a two-pass pearson oracle") {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> uval(1.0, 7.0);
  std::vector<std::pair<FeatureMatrix, double>> queries;
  std::array<std::vector<double>, 8> stds;
  std::vector<double> vals;
  for (int i = 0; i < 100; ++i) {
    FeatureMatrix tv = tv_matrix(60);
    for (double &v : tv.data.data) v = g(rng);
    double val = uval(rng);
    for (int d = 0; d < 8; ++d) {
      double mean = 0.0;
      for (int t = 0; t < 60; ++t) mean += tv.data.at(t, d);
      mean /= 60.0;
      double var = 0.0;
      for (int t = 0; t < 60; ++t) {
        double diff = tv.data.at(t, d) - mean;
        var += diff * diff;
      }
      stds[d].push_back(std::sqrt(var / 60.0));
    }
    vals.push_back(val);
    queries.emplace_back(std::move(tv), val);
  }
  TVCorrelationReport report = tv_valence_correlation(queries);
  for (int d = 0; d < 8; ++d) {
    double want = oracle::two_pass_pearson(stds[d], vals);
    CHECK(std::abs(report.r[d] - want) < 1e-12);
  }
}

TEST_CASE("tv_valence_correlation is invariant to positive affine valence") {
  std::mt19937_64 rng(57);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> uval(1.0, 7.0);
  std::vector<std::pair<FeatureMatrix, double>> a, b;
  for (int i = 0; i < 30; ++i) {
    FeatureMatrix tv = tv_matrix(40);
    for (double &v : tv.data.data) v = g(rng);
    double val = uval(rng);
    a.emplace_back(tv, val);
    b.emplace_back(std::move(tv), 2.5 * val + 11.0);
  }
  TVCorrelationReport ra = tv_valence_correlation(a);
  TVCorrelationReport rb = tv_valence_correlation(b);
  for (int d = 0; d < 8; ++d) CHECK(std::abs(ra.r[d] - rb.r[d]) < 1e-12);
}
